//! Gnuplot bundles for report CSVs: one data file and one script per point.

use std::path::{Path, PathBuf};

use crate::CliError;

const SERIES: [(&str, &str); 4] = [
    ("L_nt", "discrete"),
    ("L_t", "continuum"),
    ("sqrt_t_L_nt", "scaled discrete"),
    ("sqrt_t_L_t", "scaled continuum"),
];

/// Rows of one point block.
#[derive(Debug, Clone, PartialEq)]
pub struct PointBlock {
    pub name: String,
    pub rows: Vec<Vec<String>>,
}

/// Splits a report into point blocks. Reports without point lines form a
/// single block named `report`.
pub fn parse_report(text: &str) -> Result<(Vec<String>, Vec<PointBlock>), CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| CliError::Report("empty report".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut blocks: Vec<PointBlock> = Vec::new();
    for line in lines {
        if let Some(rest) = line.strip_prefix("# point ") {
            let name = rest
                .split_whitespace()
                .next()
                .unwrap_or("point")
                .to_string();
            blocks.push(PointBlock {
                name,
                rows: Vec::new(),
            });
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if row.len() != header.len() {
            return Err(CliError::Report(format!(
                "row has {} fields, header has {}: {line}",
                row.len(),
                header.len()
            )));
        }
        if blocks.is_empty() {
            blocks.push(PointBlock {
                name: "report".into(),
                rows: Vec::new(),
            });
        }
        blocks.last_mut().expect("nonempty").rows.push(row);
    }
    Ok((header, blocks))
}

/// Writes `<stem>_<point>.dat` and `<stem>_<point>.gp` for every point
/// block of the report and returns the script paths.
pub fn emit_plots(report: &str, stem: &str, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let (header, blocks) = parse_report(report)?;
    let mut needed = vec!["t"];
    needed.extend(SERIES.iter().map(|(c, _)| *c));
    let missing: Vec<&str> = needed
        .iter()
        .filter(|c| !header.iter().any(|h| h == *c))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Report(format!(
            "missing columns: {}",
            missing.join(", ")
        )));
    }
    let col = |name: &str| header.iter().position(|h| h == name).expect("checked");
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut scripts = Vec::new();
    for block in &blocks {
        let base = format!("{stem}_{}", block.name);
        let data = out_dir.join(format!("{base}.dat"));
        let mut text = format!("# t {}\n", SERIES.map(|(c, _)| c).join(" "));
        for row in &block.rows {
            text.push_str(&row[col("t")]);
            for (c, _) in SERIES {
                text.push(' ');
                text.push_str(&row[col(c)]);
            }
            text.push('\n');
        }
        std::fs::write(&data, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", data.display())))?;

        let plots: Vec<String> = SERIES
            .iter()
            .enumerate()
            .map(|(i, (_, label))| {
                format!(
                    "'{base}.dat' using 1:{} with linespoints title '{label}'",
                    i + 2
                )
            })
            .collect();
        let script = format!(
            "set terminal pngcairo size 900,600\n\
             set output '{base}.png'\n\
             set title '{}'\n\
             set logscale x\n\
             set xlabel 't'\n\
             set key outside\n\
             set datafile missing 'NaN'\n\
             plot {}\n",
            block.name,
            plots.join(", \\\n     ")
        );
        let path = out_dir.join(format!("{base}.gp"));
        std::fs::write(&path, script)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        scripts.push(path);
    }
    Ok(scripts)
}

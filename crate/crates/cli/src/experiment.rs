//! Table runs: one operator report row per (point, t).

use std::path::{Path, PathBuf};
use std::time::Instant;

use kinklap::concentration::{
    check_as_condition, check_probability_condition, deviation_experiment, growth_value,
    BandwidthSchedule, DeviationTable,
};
use kinklap::operators::{
    graph_laplacian, predictor_at, ContinuumProblem, KernelParams, MomentBudget, OperatorReport,
    REPORT_HEADER,
};
use kinklap::par::map_indexed;
use serde::Serialize;

use crate::config::{ExperimentConfig, Resolved};
use crate::CliError;

/// Sidecar record written next to every report.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub name: String,
    pub seed: u64,
    pub mode: String,
    pub distance: String,
    pub n: usize,
    pub eta: f64,
    pub tol: f64,
    pub rows: usize,
    pub wall_time_s: f64,
    /// `√n t^{d/2+1}` at the largest and smallest bandwidth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_at_t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_at_t_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability_condition: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub as_condition: Option<String>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct TableRun {
    pub csv: String,
    pub reports: Vec<(String, OperatorReport)>,
    pub metadata: Metadata,
}

impl TableRun {
    pub fn has_failures(&self) -> bool {
        !self.metadata.failures.is_empty()
    }

    /// Writes the CSV and its `.meta.toml` sidecar; returns the sidecar path.
    pub fn write(&self, path: &Path) -> Result<PathBuf, CliError> {
        std::fs::write(path, &self.csv)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let meta = sidecar_path(path);
        let text = toml::to_string(&self.metadata).expect("metadata serializes");
        std::fs::write(&meta, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", meta.display())))?;
        Ok(meta)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(".meta.toml");
    path.with_file_name(name)
}

/// Comment line that opens each point's block of rows.
pub fn point_line(name: &str, coords: &[f64]) -> String {
    let c: Vec<String> = coords.iter().map(|v| format!("{v}")).collect();
    format!("# point {name} {}", c.join(" "))
}

/// Evaluates every configured operator at every (point, t).
///
/// A failing cell is written as NaN and logged in the metadata; the run
/// carries on.
pub fn run_table(config: &ExperimentConfig) -> Result<TableRun, CliError> {
    let start = Instant::now();
    let resolved = config.resolve()?;
    let Resolved {
        domain,
        density,
        field,
        ts,
    } = &resolved;
    let mode = config.mode;
    let cells: Vec<(usize, usize)> = (0..config.points.len())
        .flat_map(|p| (0..ts.len()).map(move |j| (p, j)))
        .collect();

    let samples = if mode.discrete() && !cells.is_empty() {
        Some(
            config
                .sampler(&resolved)
                .map_err(CliError::Numeric)?
                .sample(config.n),
        )
    } else {
        None
    };
    let problem = if mode.continuum() && !cells.is_empty() {
        Some(ContinuumProblem::new(domain, density, field).map_err(CliError::Numeric)?)
    } else {
        None
    };
    let budget = MomentBudget {
        samples: config.moment_samples,
        seed: config.seed,
    };

    let results = map_indexed(cells.len(), |k| {
        let (pi, j) = cells[k];
        let point = &config.points[pi];
        let x = &point.coords;
        let t = ts[j];
        let mut failures = Vec::new();
        let mut log = |what: &str, e: kinklap::Error| {
            failures.push(format!("{} t={t} {what}: {e}", point.name));
        };
        let params = match KernelParams::new(t, config.eta) {
            Ok(p) => p,
            Err(e) => {
                log("params", e);
                return (
                    OperatorReport::new(
                        x.clone(),
                        KernelParams { t, eta: config.eta },
                        None,
                        None,
                        None,
                        config.predictor_order,
                        None,
                        domain.mode(),
                    ),
                    failures,
                );
            }
        };
        let discrete = samples.as_ref().and_then(|s| {
            graph_laplacian(domain, s, field, x, t)
                .map_err(|e| log("discrete", e))
                .ok()
        });
        let continuum = problem.as_ref().and_then(|p| {
            p.gauss(x, &params, config.tol)
                .map_err(|e| log("continuum", e))
                .ok()
        });
        let predictor = if mode.predictor() {
            predictor_at(domain, density, field, x, t, config.predictor_order, budget)
                .map(|p| p.value)
                .map_err(|e| log("predictor", e))
                .ok()
        } else {
            None
        };
        let bound = match (&problem, continuum) {
            (Some(p), None) => p.truncation_bound(x, &params).ok(),
            _ => None,
        };
        let report = OperatorReport::new(
            x.clone(),
            params,
            discrete,
            continuum,
            predictor,
            config.predictor_order,
            bound,
            domain.mode(),
        );
        (report, failures)
    });

    let mut csv = format!("{REPORT_HEADER}\n");
    let mut reports = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (k, (report, errs)) in results.into_iter().enumerate() {
        let (pi, j) = cells[k];
        let point = &config.points[pi];
        if j == 0 {
            csv.push_str(&point_line(&point.name, &point.coords));
            csv.push('\n');
        }
        csv.push_str(&report.csv_row());
        csv.push('\n');
        failures.extend(errs);
        reports.push((point.name.clone(), report));
    }

    let d = domain.dim();
    let (t_max, t_min) = (
        ts.iter().cloned().reduce(f64::max),
        ts.iter().cloned().reduce(f64::min),
    );
    let (probability_condition, as_condition) = match &config.concentration {
        Some(c) => match BandwidthSchedule::power_law(c.c0, c.beta, d) {
            Ok(s) => {
                let c1 = check_probability_condition(&s);
                let c2 = check_as_condition(&s, 2.0).map_err(CliError::Numeric)?;
                (
                    Some(format!("{} ({})", c1.verdict, c1.evidence)),
                    Some(format!("{} at alpha = 2 ({})", c2.verdict, c2.evidence)),
                )
            }
            Err(e) => (Some(format!("invalid schedule: {e}")), None),
        },
        None => (None, None),
    };
    let metadata = Metadata {
        name: config.name.clone(),
        seed: config.seed,
        mode: config.mode.to_string(),
        distance: config.distance.to_string(),
        n: config.n,
        eta: config.eta,
        tol: config.tol,
        rows: reports.len(),
        wall_time_s: start.elapsed().as_secs_f64(),
        growth_at_t_max: t_max.map(|t| growth_value(config.n as u64, t, d)),
        growth_at_t_min: t_min.map(|t| growth_value(config.n as u64, t, d)),
        probability_condition,
        as_condition,
        failures,
    };
    Ok(TableRun {
        csv,
        reports,
        metadata,
    })
}

/// Deviation table for the config's `[concentration]` section.
pub fn run_concentration(config: &ExperimentConfig) -> Result<DeviationTable, CliError> {
    let spec = config
        .concentration
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [concentration] section".into()))?;
    let resolved = config.resolve()?;
    let problem = ContinuumProblem::new(&resolved.domain, &resolved.density, &resolved.field)
        .map_err(CliError::Numeric)?;
    let sampler = config.sampler(&resolved).map_err(CliError::Numeric)?;
    let schedule = BandwidthSchedule::power_law(spec.c0, spec.beta, resolved.domain.dim())
        .map_err(CliError::Numeric)?;
    let x = &config.point(&spec.point).expect("validated").coords;
    deviation_experiment(
        &problem,
        &sampler,
        x,
        &schedule,
        &spec.n_grid,
        spec.trials,
        config.eta,
        config.tol,
        config.seed,
    )
    .map_err(CliError::Numeric)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_ball() -> ExperimentConfig {
        let mut c = ExperimentConfig::parse(include_str!("../configs/ball.toml")).unwrap();
        c.n = 20_000;
        c.t_grid.count = 3;
        c
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let mut c = small_ball();
        c.t_grid.count = 0;
        let run = run_table(&c).unwrap();
        assert_eq!(run.csv, format!("{REPORT_HEADER}\n"));
    }

    #[test]
    fn rows_follow_config_order_and_are_reproducible() {
        let c = small_ball();
        let a = run_table(&c).unwrap();
        let b = run_table(&c).unwrap();
        assert_eq!(a.csv, b.csv);
        let lines: Vec<&str> = a.csv.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * (1 + 3));
        assert!(lines[1].starts_with("# point center"));
        assert!(lines[5].starts_with("# point boundary"));
        assert!(!a.has_failures(), "{:?}", a.metadata.failures);
    }

    #[test]
    fn sidecar_sits_next_to_report() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small_ball();
        c.mode = crate::config::Mode::Predictor;
        let run = run_table(&c).unwrap();
        let meta = run.write(&dir.path().join("ball.csv")).unwrap();
        let text = std::fs::read_to_string(meta).unwrap();
        assert!(
            text.contains("seed = 1") && text.contains("mode = \"predictor\""),
            "{text}"
        );
    }
}

//! Sample-set persistence: CSV with an `x1..xd` header, and the flat
//! little-endian `KLSS` binary layout for large samples.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::SampleSet;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"KLSS";
const VERSION: u32 = 1;

pub fn write_csv(set: &SampleSet, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((1..=set.dim()).map(|i| format!("x{i}")))?;
    for row in set.rows() {
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<SampleSet> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let dim = headers.len();
    for (i, h) in headers.iter().enumerate() {
        if h.trim() != format!("x{}", i + 1) {
            return Err(Error::Parse(format!(
                "column {} is `{h}`, expected x{}",
                i + 1,
                i + 1
            )));
        }
    }
    let mut points = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        for field in record.iter() {
            points.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: `{field}`: {e}", line + 2)))?,
            );
        }
    }
    SampleSet::from_rows(dim, points, "imported", "unknown", 0)
}

pub fn write_binary(set: &SampleSet, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(set.n() as u64).to_le_bytes())?;
    w.write_all(&(set.dim() as u32).to_le_bytes())?;
    for v in set.as_flat() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<SampleSet> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a KLSS sample file".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported KLSS version {version}")));
    }
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    let mut points = Vec::with_capacity(n * dim);
    for _ in 0..n * dim {
        r.read_exact(&mut b8)?;
        points.push(f64::from_le_bytes(b8));
    }
    if r.read(&mut b8)? != 0 {
        return Err(Error::Parse("trailing bytes after KLSS payload".into()));
    }
    SampleSet::from_rows(dim, points, "imported", "unknown", 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::sampling::sample_uniform;

    #[test]
    fn csv_and_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let set = sample_uniform(&Domain::ball(3, 1.0).unwrap(), 257, 3).unwrap();
        let csv_path = dir.path().join("s.csv");
        write_csv(&set, &csv_path).unwrap();
        let back = read_csv(&csv_path).unwrap();
        assert_eq!(back.as_flat(), set.as_flat());
        let bin = dir.path().join("s.klss");
        write_binary(&set, &bin).unwrap();
        let back = read_binary(&bin).unwrap();
        assert_eq!(back.as_flat(), set.as_flat());
        assert_eq!(
            std::fs::metadata(&bin).unwrap().len(),
            4 + 4 + 8 + 4 + 257 * 3 * 8
        );
    }

    #[test]
    fn malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "x1,y\n1,2\n").unwrap();
        assert!(matches!(read_csv(&p), Err(Error::Parse(_))));
        std::fs::write(&p, "x1,x2\n1,abc\n").unwrap();
        assert!(matches!(read_csv(&p), Err(Error::Parse(_))));
        let b = dir.path().join("bad.klss");
        std::fs::write(&b, b"NOPE0000").unwrap();
        assert!(matches!(read_binary(&b), Err(Error::Parse(_))));
    }
}

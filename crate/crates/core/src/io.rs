//! Curve CSV files and atomic result writing.
//!
//! Curve files have a header row of grid points and one row per curve, with an
//! optional leading `stratum` column. Values are written with the shortest
//! representation that parses back to the same `f64`, so a write/read cycle is
//! bit-exact.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::curves::CurveSet;
use crate::error::{FpcaError, Result};
use crate::grid::Grid;

const STRATUM_COLUMN: &str = "stratum";

pub fn write_curves<W: Write>(out: W, curves: &CurveSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let strata = curves.strata();
    let mut header: Vec<String> = Vec::with_capacity(curves.grid().len() + 1);
    if strata.is_some() {
        header.push(STRATUM_COLUMN.into());
    }
    header.extend(curves.grid().points().iter().map(|t| t.to_string()));
    w.write_record(&header)?;
    for (k, row) in curves.rows().enumerate() {
        let mut rec: Vec<String> = Vec::with_capacity(row.len() + 1);
        if let Some(s) = strata {
            rec.push(s[k].to_string());
        }
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| FpcaError::Config(format!("line {line}: cannot parse '{field}' as a number")))
}

/// Reads a curve file. Equispaced midpoints get the uniform midpoint weights;
/// any other abscissae get Riemann weights.
pub fn read_curves<R: Read>(input: R) -> Result<CurveSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    let has_strata = headers.get(0).map(str::trim) == Some(STRATUM_COLUMN);
    let skip = usize::from(has_strata);
    let points = headers
        .iter()
        .skip(skip)
        .map(|h| parse_f64(h, 1))
        .collect::<Result<Vec<f64>>>()?;
    let m = points.len();
    let uniform = Grid::uniform(m)?;
    let grid = if uniform.points() == points.as_slice() {
        uniform
    } else {
        Grid::from_points(points)?
    };

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != m + skip {
            return Err(FpcaError::DimensionMismatch {
                expected: m + skip,
                found: rec.len(),
            });
        }
        if has_strata {
            let h = rec[0].trim().parse::<usize>().map_err(|_| {
                FpcaError::Config(format!("line {line}: stratum label '{}' is not an index", &rec[0]))
            })?;
            labels.push(h);
        }
        for field in rec.iter().skip(skip) {
            values.push(parse_f64(field, line)?);
        }
    }
    let curves = CurveSet::from_row_major(grid, values)?;
    if has_strata {
        curves.with_strata(labels)
    } else {
        Ok(curves)
    }
}

pub fn read_curves_file(path: &Path) -> Result<CurveSet> {
    read_curves(fs::File::open(path)?)
}

/// Writes `bytes` to a sibling temp file and renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .map(|n| format!(".{}.tmp", n.to_string_lossy()))
        .unwrap_or_else(|| ".tmp".into());
    tmp.set_file_name(name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn write_curves_file(path: &Path, curves: &CurveSet) -> Result<()> {
    let mut buf = Vec::new();
    write_curves(&mut buf, curves)?;
    atomic_write(path, &buf)
}

/// Serializes rows with a header through the csv writer into an atomic file.
pub fn write_rows<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    atomic_write(path, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Curve;
    use proptest::prelude::*;

    #[test]
    fn header_and_strata_column() {
        let grid = Grid::uniform(2).unwrap();
        let c = CurveSet::new(grid, vec![Curve(vec![1.5, -2.0]), Curve(vec![0.1, 3.0])])
            .unwrap()
            .with_strata(vec![0, 1])
            .unwrap();
        let mut buf = Vec::new();
        write_curves(&mut buf, &c).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "stratum,0.25,0.75\n0,1.5,-2\n1,0.1,3\n");
    }

    #[test]
    fn non_uniform_points_get_riemann_weights() {
        let c = read_curves("0.2,0.5,1\n1,2,3\n".as_bytes()).unwrap();
        assert_eq!(c.grid().weights(), &[0.2, 0.3, 0.5]);
        assert!(c.strata().is_none());
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(read_curves("0.25,0.75\n1,2,3\n".as_bytes()).is_err());
        assert!(read_curves("0.25,0.75\n1,x\n".as_bytes()).is_err());
        assert!(read_curves("stratum,0.25,0.75\n-1,1,2\n".as_bytes()).is_err());
        assert!(read_curves("0.75,0.25\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.json");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 5), 1..6),
            with_strata in any::<bool>(),
        ) {
            let grid = Grid::uniform(5).unwrap();
            let n = rows.len();
            let mut c = CurveSet::new(grid, rows.into_iter().map(Curve).collect()).unwrap();
            if with_strata {
                c = c.with_strata((0..n).map(|k| k % 2).collect()).unwrap();
            }
            let mut buf = Vec::new();
            write_curves(&mut buf, &c).unwrap();
            let back = read_curves(buf.as_slice()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}

//! Points / distance-matrix file formats and the `key=value` config syntax.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{normalize, DistanceMatrix, Normalization, PointSet};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Leading bytes of a binary points file.
pub const POINTS_MAGIC: &[u8; 4] = b"KCPT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PointsFormat {
    #[default]
    Csv,
    /// `KCPT`, u32 LE `n`, u32 LE `m`, then `n * m` little-endian f32, row-major.
    Bin,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Reads a numeric CSV table. A first row whose first cell is not a number is
/// treated as a header and skipped. Returns `(rows, cols, values)`.
fn read_numeric_csv(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let mut values = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| parse_err(path, line, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if rows == 0 && cols.is_none() {
            let first = record.get(0).unwrap_or("");
            if first.parse::<f64>().is_err() {
                continue;
            }
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected {c} columns, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let x: f64 = cell.parse().map_err(|_| {
                parse_err(
                    path,
                    line,
                    format!("column {col}: `{cell}` is not a number"),
                )
            })?;
            values.push(x);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_err(path, 1, "no data rows"))?;
    Ok((rows, cols, values))
}

/// Loads a CSV or `KCPT` binary points file and normalizes it.
pub fn load_points<T: Real>(
    path: impl AsRef<Path>,
    convention: Normalization,
) -> Result<PointSet<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let (n, m, raw): (usize, usize, Vec<T>) = if bytes.starts_with(POINTS_MAGIC) {
        if bytes.len() < 12 {
            return Err(parse_err(path, 1, "truncated binary header"));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let m = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let body = &bytes[12..];
        if body.len() != n * m * 4 {
            return Err(parse_err(
                path,
                1,
                format!("expected {} payload bytes, found {}", n * m * 4, body.len()),
            ));
        }
        let raw = body
            .chunks_exact(4)
            .map(|c| T::lit(f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64))
            .collect();
        (n, m, raw)
    } else {
        let (n, m, raw) = read_numeric_csv(path, &bytes)?;
        (n, m, raw.into_iter().map(T::lit).collect())
    };
    normalize(n, m, &raw, convention)
}

/// Writes one point per row using the shortest round-tripping decimal form.
pub fn save_points_csv<T: Real>(ps: &PointSet<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for u in 0..ps.len() {
        let row: Vec<String> = ps.point(u).iter().map(|x| format!("{x}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn save_points_bin<T: Real>(ps: &PointSet<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let to_u32 = |x: usize| {
        u32::try_from(x).map_err(|_| Error::invalid(format!("{x} does not fit the u32 header")))
    };
    let mut buf = Vec::with_capacity(12 + ps.coords().len() * 4);
    buf.extend_from_slice(POINTS_MAGIC);
    buf.extend_from_slice(&to_u32(ps.len())?.to_le_bytes());
    buf.extend_from_slice(&to_u32(ps.dims())?.to_le_bytes());
    for x in ps.coords() {
        buf.extend_from_slice(&(x.to_f64_lossy() as f32).to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(&buf).map_err(|e| io_err(path, e))
}

/// Loads an `n x n` CSV distance matrix and validates it.
pub fn load_distance_matrix<T: Real>(path: impl AsRef<Path>) -> Result<DistanceMatrix<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let (rows, cols, values) = read_numeric_csv(path, &bytes)?;
    if rows != cols {
        return Err(parse_err(
            path,
            1,
            format!("distance matrix must be square, got {rows}x{cols}"),
        ));
    }
    DistanceMatrix::new(rows, values.into_iter().map(T::lit).collect())
}

pub fn save_distance_matrix<T: Real>(dm: &DistanceMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let n = dm.len();
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", dm.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Parses `key=value` lines; blank lines and `#` comments are ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::invalid(format!(
                "line {}: expected key=value, got `{line}`",
                idx + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticSpec};

    #[test]
    fn csv_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        fs::write(&a, "0,0\n1,0\n0,1\n").unwrap();
        let ps: PointSet<f64> = load_points(&a, Normalization::Centered).unwrap();
        assert_eq!((ps.len(), ps.dims()), (3, 2));
        assert_eq!(ps.point(1), &[0.5, -0.5]);

        let b = dir.path().join("b.csv");
        fs::write(&b, "x,y\n0,0\n1,0\n0,1\n").unwrap();
        let pb: PointSet<f64> = load_points(&b, Normalization::Centered).unwrap();
        assert_eq!(ps, pb);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        fs::write(&a, "0,0\n1,zz\n").unwrap();
        let err = load_points::<f64>(&a, Normalization::Centered).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec {
            clusters: 2,
            per_cluster: 5,
            m: 7,
            spread: 0.05,
            seed: 3,
            latent_dim: None,
        };
        let ps: PointSet<f64> = generate_synthetic(&spec).unwrap();
        let p = dir.path().join("p.bin");
        save_points_bin(&ps, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..4], POINTS_MAGIC);
        let back: PointSet<f64> = load_points(&p, Normalization::Centered).unwrap();
        assert_eq!((back.len(), back.dims()), (10, 7));
        for (a, b) in ps.coords().iter().zip(back.coords()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn matrix_file_round_trip_and_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, "0,0.2,0.4\n0.2,0,0.3\n0.4,0.3,0\n").unwrap();
        let dm: DistanceMatrix<f64> = load_distance_matrix(&p).unwrap();
        assert_eq!(dm.get(2, 1), 0.3);
        save_distance_matrix(&dm, &p).unwrap();
        assert_eq!(load_distance_matrix::<f64>(&p).unwrap(), dm);

        fs::write(&p, "0,0.2,0.4\n0.2,0,0.3\n0.4,0.31,0\n").unwrap();
        assert!(matches!(
            load_distance_matrix::<f64>(&p),
            Err(Error::Asymmetric { .. })
        ));
    }
}

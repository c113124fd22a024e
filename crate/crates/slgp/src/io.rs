//! On-disk artifact formats: density CSVs, chain matrices and atomic writes.
//!
//! CSV artifacts start with `#`-prefixed comment lines carrying the
//! reproducibility header (format version, seed, config echo), followed by a
//! regular header row. Floats are written in shortest round-trip form, so a
//! fixed seed reproduces files byte for byte.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::density::DensitySlice;
use crate::domain::DomainSpec;
use crate::error::{Result, SlgpError};
use crate::grid::{build_grid, QuadratureGrid};

pub const FORMAT_VERSION: u32 = 1;

/// Write bytes to `path` through a sibling temp file and an atomic rename.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize rows into CSV with leading comment lines and write atomically.
pub fn write_csv_atomic(
    path: impl AsRef<Path>,
    comments: &[String],
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut buf = Vec::new();
    for c in comments {
        buf.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    buf.extend_from_slice(header.join(",").as_bytes());
    buf.push(b'\n');
    for row in rows {
        buf.extend_from_slice(row.join(",").as_bytes());
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

/// Standard reproducibility comment lines for CSV artifacts.
pub fn artifact_comments(seed: u64, config_json: &str) -> Vec<String> {
    vec![
        format!("slgp format_version={FORMAT_VERSION}"),
        format!("seed={seed}"),
        format!("config={config_json}"),
    ]
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Column header for density tables over a `d_d`-location, 1-d-response grid.
fn density_header(d_d: usize, with_draw: bool, extra: &[&str]) -> Vec<String> {
    let mut h = Vec::new();
    if with_draw {
        h.push("draw".to_string());
    }
    for k in 0..d_d {
        h.push(format!("x{}", k + 1));
    }
    h.push("t1".to_string());
    h.push("density".to_string());
    for e in extra {
        h.push(e.to_string());
    }
    h
}

/// Write one density slice per grid node: `x..., t1, density`.
pub fn write_density_csv(
    path: impl AsRef<Path>,
    comments: &[String],
    slice: &DensitySlice,
    grid: &QuadratureGrid,
) -> Result<()> {
    slice.check_grid(grid)?;
    let d_d = slice.location.len();
    let axis = grid.axis_1d()?;
    let rows = (0..grid.len()).map(|g| {
        let mut row: Vec<String> = slice.location.iter().map(|v| fmt(*v)).collect();
        row.push(fmt(axis[g]));
        row.push(fmt(slice.values[g]));
        row
    });
    write_csv_atomic(path, comments, &density_header(d_d, false, &[]), rows)
}

/// Write a collection of draws of density slices: `draw, x..., t1, density`.
pub fn write_density_draws_csv(
    path: impl AsRef<Path>,
    comments: &[String],
    draws: &[(usize, &DensitySlice)],
    grid: &QuadratureGrid,
) -> Result<()> {
    let d_d = draws.first().map_or(1, |(_, s)| s.location.len());
    let axis = grid.axis_1d()?;
    let mut rows = Vec::new();
    for (draw, slice) in draws {
        slice.check_grid(grid)?;
        for (t, v) in axis.iter().zip(slice.values.iter()) {
            let mut row = vec![draw.to_string()];
            row.extend(slice.location.iter().map(|v| fmt(*v)));
            row.push(fmt(*t));
            row.push(fmt(*v));
            rows.push(row);
        }
    }
    write_csv_atomic(path, comments, &density_header(d_d, true, &[]), rows.into_iter())
}

/// Write a mean slice with pointwise bands: `x..., t1, density, lower, upper`.
pub fn write_density_with_bands_csv(
    path: impl AsRef<Path>,
    comments: &[String],
    slice: &DensitySlice,
    lower: &[f64],
    upper: &[f64],
    grid: &QuadratureGrid,
) -> Result<()> {
    slice.check_grid(grid)?;
    if lower.len() != grid.len() || upper.len() != grid.len() {
        return Err(SlgpError::GridMismatch("band length differs from grid".into()));
    }
    let d_d = slice.location.len();
    let axis = grid.axis_1d()?;
    let rows = (0..grid.len()).map(|g| {
        let mut row: Vec<String> = slice.location.iter().map(|v| fmt(*v)).collect();
        row.push(fmt(axis[g]));
        row.push(fmt(slice.values[g]));
        row.push(fmt(lower[g]));
        row.push(fmt(upper[g]));
        row
    });
    write_csv_atomic(path, comments, &density_header(d_d, false, &["lower", "upper"]), rows)
}

/// A density read back from CSV: one location, a regular 1-d response grid
/// and the values on it.
#[derive(Debug, Clone)]
pub struct DensityFile {
    pub slice: DensitySlice,
    pub grid: QuadratureGrid,
}

/// Read a single-location density CSV (as written by [`write_density_csv`]).
/// The response nodes must form a regular increasing grid; the quadrature is
/// rebuilt from them.
pub fn read_density_csv(path: impl AsRef<Path>) -> Result<DensityFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let t_idx = headers.iter().position(|h| h == "t1").ok_or_else(|| SlgpError::Data {
        line: 1,
        message: "missing column 't1'".into(),
    })?;
    let v_idx = headers.iter().position(|h| h == "density").ok_or_else(|| SlgpError::Data {
        line: 1,
        message: "missing column 'density'".into(),
    })?;
    let x_idx: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('x'))
        .map(|(i, _)| i)
        .collect();

    let mut ts = Vec::new();
    let mut vs = Vec::new();
    let mut location: Option<Vec<f64>> = None;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |idx: usize| -> Result<f64> {
            record
                .get(idx)
                .and_then(|c| c.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| SlgpError::Data {
                    line,
                    message: format!("bad numeric cell in column '{}'", &headers[idx]),
                })
        };
        let loc: Vec<f64> = x_idx.iter().map(|&i| get(i)).collect::<Result<_>>()?;
        match &location {
            None => location = Some(loc),
            Some(prev) if *prev != loc => {
                return Err(SlgpError::Data {
                    line,
                    message: "density file contains more than one location".into(),
                })
            }
            _ => {}
        }
        ts.push(get(t_idx)?);
        vs.push(get(v_idx)?);
    }
    if ts.len() < 2 {
        return Err(SlgpError::Data { line: 0, message: "density file has fewer than 2 nodes".into() });
    }
    let m = ts.len();
    let h = (ts[m - 1] - ts[0]) / (m - 1) as f64;
    if h <= 0.0 {
        return Err(SlgpError::Data { line: 0, message: "response nodes must increase".into() });
    }
    for (k, t) in ts.iter().enumerate() {
        let expect = ts[0] + k as f64 * h;
        if (t - expect).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(SlgpError::Data {
                line: 0,
                message: "response nodes are not a regular grid".into(),
            });
        }
    }
    let domain = DomainSpec::new(vec![(0.0, 1.0)], vec![(ts[0], ts[m - 1])])?;
    let grid = build_grid(&domain, &[m])?;
    let slice = DensitySlice {
        location: location.unwrap_or_default(),
        values: vs.into(),
    };
    Ok(DensityFile { slice, grid })
}

/// Write retained weight draws as a CSV matrix, one row per draw.
pub fn write_chain_csv(
    path: impl AsRef<Path>,
    comments: &[String],
    draws: &Array2<f64>,
) -> Result<()> {
    let header: Vec<String> = (0..draws.ncols()).map(|j| format!("eps_{j}")).collect();
    let rows = draws.rows().into_iter().map(|row| row.iter().map(|v| fmt(*v)).collect());
    write_csv_atomic(path, comments, &header, rows)
}

/// Read a chain CSV back into a draw matrix.
pub fn read_chain_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path.as_ref())?;
    let width = reader.headers()?.len();
    let mut data = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        for cell in record.iter() {
            let v: f64 = cell.parse().map_err(|_| SlgpError::Data {
                line,
                message: format!("bad numeric cell '{cell}' in chain"),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, width), data)
        .map_err(|e| SlgpError::Data { line: 0, message: format!("ragged chain file: {e}") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array1;

    #[test]
    fn density_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("density.csv");
        let domain = DomainSpec::new(vec![(0.0, 1.0), (0.0, 1.0)], vec![(0.0, 2.0)]).unwrap();
        let grid = build_grid(&domain, &[41]).unwrap();
        let slice = DensitySlice {
            location: vec![0.25, 0.75],
            values: Array1::from_iter((0..41).map(|i| 0.3 + 0.01 * i as f64)),
        };
        let comments = artifact_comments(7, "{}");
        write_density_csv(&path, &comments, &slice, &grid).unwrap();
        let back = read_density_csv(&path).unwrap();
        assert_eq!(back.slice.location, slice.location);
        assert_eq!(back.grid.len(), 41);
        assert_relative_eq!(back.grid.volume(), 2.0, epsilon = 1e-12);
        for g in 0..41 {
            assert_eq!(back.slice.values[g], slice.values[g]);
        }
    }

    #[test]
    fn chain_csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.csv");
        let draws = Array2::from_shape_fn((5, 3), |(i, j)| {
            (i as f64 + 1.0).ln() * (j as f64 - 1.5) / 3.7
        });
        write_chain_csv(&path, &artifact_comments(1, "{}"), &draws).unwrap();
        let back = read_chain_csv(&path).unwrap();
        assert_eq!(back, draws);
    }

    #[test]
    fn density_reader_rejects_mixed_locations_and_irregular_grids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "x1,t1,density\n0.0,0.0,1.0\n0.5,1.0,1.0\n").unwrap();
        assert!(read_density_csv(&path).is_err());
        fs::write(&path, "x1,t1,density\n0.0,0.0,1.0\n0.0,0.4,1.0\n0.0,1.0,1.0\n").unwrap();
        assert!(read_density_csv(&path).is_err());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("file.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

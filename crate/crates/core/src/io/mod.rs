//! File formats: Matrix Market, benchmark manifest, mesh text, legacy VTK
//! and CSV.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub mod manifest;
pub mod matrix_market;
pub mod mesh_text;
pub mod vtk;

pub use manifest::{export_benchmark, load_benchmark, BenchmarkManifest, MatrixFiles, Provenance};
pub use matrix_market::{read_matrix_market, write_matrix_market};
pub use mesh_text::{read_mesh, write_mesh};
pub use vtk::write_vtk;

/// Lossless, locale-independent text form of a float (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// CSV with columns `t, y1 … yp`.
pub fn trajectory_csv(traj: &crate::simulate::Trajectory) -> String {
    let p = traj.outputs.first().map_or(0, |y| y.len());
    let mut s = String::from("t");
    for i in 1..=p {
        s.push_str(&format!(",y{i}"));
    }
    s.push('\n');
    for (t, y) in traj.times.iter().zip(&traj.outputs) {
        s.push_str(&fmt_f64(*t));
        for v in y {
            s.push(',');
            s.push_str(&fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

/// Reads one number per line (blank lines and `#` comments skipped); a
/// leading non-numeric header line is allowed.
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.split(',').next_back().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => return Err(Error::parse(path, i + 1, "non-finite sample")),
            Err(_) if out.is_empty() && i == 0 => {}
            Err(_) => return Err(Error::parse(path, i + 1, format!("not a number: '{field}'"))),
        }
    }
    Ok(out)
}

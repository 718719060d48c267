//! Consistency checks on assembled or imported benchmark matrices.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::fem::AssemblyOutput;
use crate::io::manifest::{infer_dirichlet_dofs, load_manifest, manifest_dir, BenchmarkManifest};
use crate::io::matrix_market::read_matrix_market;
use crate::sparse::SparseMatrix;

/// Tolerance for the row/column sums of `B` and `C`.
pub const SUM_TOL: f64 = 1e-12;
/// Tolerance on eigenvector values; the sparsity structure is exact.
pub const EIGEN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Surgery {
    /// Rows and columns of Dirichlet DOFs are cleared.
    Symmetric,
    /// Only rows are cleared: `e_j` is a left but not a right eigenvector.
    RowOnly,
    /// Only columns are cleared.
    ColumnOnly,
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub k: Option<usize>,
    pub surgery: Option<Surgery>,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn new() -> Self {
        ValidationReport {
            passed: true,
            n: None,
            p: None,
            k: None,
            surgery: None,
            checks: Vec::new(),
        }
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }
}

/// Deterministic, well-spread test vectors.
fn probe_vector(n: usize, seed: usize) -> Vec<f64> {
    (0..n)
        .map(|i| ((i as f64 + 1.0) * (0.754_877_666 + seed as f64 * 0.569_840_290)).sin() + 0.1)
        .collect()
}

/// Parameter points at which eigenvector structure is probed.
fn probe_points(p: usize) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![1.0; p], vec![1e-6; p], vec![1e2; p]];
    pts.push((0..p).map(|i| if i % 2 == 0 { 1e-6 } else { 1e2 }).collect());
    pts.push((0..p).map(|i| 10f64.powf(-6.0 + 8.0 * (i as f64 + 0.5) / p.max(1) as f64)).collect());
    pts
}

/// Describes the first deviation of row `r` of `m` from `d·e_r`. Off-diagonal
/// entries must be structurally absent or exactly zero.
fn unit_row(m: &SparseMatrix, r: usize, d: f64) -> Option<String> {
    let (cols, vals) = m.row(r);
    for (&c, &v) in cols.iter().zip(vals) {
        if c != r && v != 0.0 {
            return Some(format!("entry ({r}, {c}) = {v:e}"));
        }
    }
    let diag = m.at(r, r);
    if (diag - d).abs() > EIGEN_TOL {
        return Some(format!("diagonal ({r}, {r}) = {diag:e}, expected {d}"));
    }
    None
}

/// First violation of the Dirichlet pattern along rows of the given
/// matrices (pass transposes for columns).
fn dirichlet_lines(e: &SparseMatrix, a: &[SparseMatrix], b: Option<&[f64]>, dofs: &[usize]) -> Option<String> {
    for &j in dofs {
        if let Some(msg) = unit_row(e, j, 1.0) {
            return Some(format!("E {msg}"));
        }
        for (i, ai) in a.iter().enumerate() {
            let d = if i == 0 { -1.0 } else { 0.0 };
            if let Some(msg) = unit_row(ai, j, d) {
                return Some(format!("A{i} {msg}"));
            }
        }
        if let Some(b) = b {
            if b[j] != 0.0 {
                return Some(format!("B[{j}] = {:e}", b[j]));
            }
        }
    }
    None
}

fn eigen_check(asm: &AssemblyOutput, left: bool) -> std::result::Result<(), String> {
    for mu in probe_points(asm.n_params()) {
        let a = asm.eval_a(&mu).map_err(|e| e.to_string())?;
        let (a, e) = if left {
            (a, asm.e.clone())
        } else {
            (a.transpose(), asm.e.transpose())
        };
        for &j in &asm.dirichlet_dofs {
            if let Some(msg) = unit_row(&a, j, -1.0) {
                return Err(format!("A(mu) at mu = {mu:?}: {msg}"));
            }
            if let Some(msg) = unit_row(&e, j, 1.0) {
                return Err(format!("E: {msg}"));
            }
        }
    }
    Ok(())
}

/// Runs every structural check that applies to stored matrices.
pub fn validate_assembly(asm: &AssemblyOutput) -> ValidationReport {
    let mut r = ValidationReport::new();
    check_assembly(asm, &mut r);
    r
}

fn check_assembly(asm: &AssemblyOutput, r: &mut ValidationReport) {
    let n = asm.n;
    r.n = Some(n);
    r.p = Some(asm.n_params());
    r.k = Some(asm.k());

    r.push("symmetry:E", asm.e.is_symmetric(), "exact");
    for (i, a) in asm.a.iter().enumerate() {
        r.push(format!("symmetry:A{i}"), a.is_symmetric(), "exact");
    }

    r.push(
        "dirichlet_count",
        asm.k() > 0,
        format!("{} Dirichlet degrees of freedom", asm.k()),
    );

    let b = asm.b_vec();
    let rows = dirichlet_lines(&asm.e, &asm.a, Some(&b), &asm.dirichlet_dofs);
    let at: Vec<SparseMatrix> = asm.a.iter().map(|m| m.transpose()).collect();
    let cols = dirichlet_lines(&asm.e.transpose(), &at, None, &asm.dirichlet_dofs);
    r.push("dirichlet_rows", rows.is_none(), rows.clone().unwrap_or_else(|| "ok".into()));
    r.push("dirichlet_columns", cols.is_none(), cols.clone().unwrap_or_else(|| "ok".into()));

    let right = eigen_check(asm, false);
    let left = eigen_check(asm, true);
    let surgery = match (right.is_ok(), left.is_ok()) {
        (true, true) => Surgery::Symmetric,
        (false, true) => Surgery::RowOnly,
        (true, false) => Surgery::ColumnOnly,
        (false, false) => Surgery::Inconsistent,
    };
    r.surgery = Some(surgery);
    r.push(
        "right_eigenvectors",
        right.is_ok(),
        right.err().unwrap_or_else(|| "A(mu) e_j = -e_j and E e_j = e_j".into()),
    );
    r.push(
        "left_eigenvectors",
        left.is_ok(),
        left.err().unwrap_or_else(|| "e_j^T A(mu) = -e_j^T and e_j^T E = e_j^T".into()),
    );
    let surgery_detail = match surgery {
        Surgery::Symmetric => "symmetric: Dirichlet rows and columns cleared",
        Surgery::RowOnly => "one-sided (row-only) elimination: e_j is a left but not a right eigenvector",
        Surgery::ColumnOnly => "one-sided (column-only) elimination: e_j is a right but not a left eigenvector",
        Surgery::Inconsistent => "Dirichlet degrees of freedom are neither left nor right eigenvectors",
    };
    r.push("dirichlet_surgery", surgery == Surgery::Symmetric, surgery_detail);

    let c1 = asm.c.mul_vec(&vec![1.0; n]);
    let worst = c1.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    r.push("output_average", worst <= SUM_TOL, format!("max |C 1 - 1| = {worst:e}"));
    let total: f64 = b.iter().sum();
    r.push(
        "inflow_total",
        (total - 1.0).abs() <= SUM_TOL,
        format!("1^T B = {}", crate::io::fmt_f64(total)),
    );
    let cmin = asm.c.values().iter().copied().fold(f64::INFINITY, f64::min);
    r.push(
        "output_nonnegative",
        asm.c.values().iter().all(|&v| v >= 0.0),
        format!("min C entry = {cmin:e}"),
    );

    let xs: Vec<Vec<f64>> = (0..4).map(|s| probe_vector(n, s)).collect();
    let mass_ok = xs.iter().all(|x| asm.e.bilinear(x, x) > 0.0);
    r.push("mass_positive", mass_ok, "x^T E x > 0 on probe vectors");
    match asm.eval_a(&vec![1.0; asm.n_params()]) {
        Ok(a) => {
            let ok = xs.iter().all(|x| a.bilinear(x, x) < 0.0);
            r.push("stiffness_sign", ok, "x^T A(1) x < 0 on probe vectors");
        }
        Err(e) => r.push("stiffness_sign", false, e.to_string()),
    }
}

/// Loads a manifest and validates the matrices it names. Only an
/// unreadable or malformed manifest is an error; problems with the listed
/// files are itemized in the report.
pub fn validate_manifest(path: &Path) -> Result<ValidationReport> {
    let manifest = load_manifest(path)?;
    Ok(validate_loaded(&manifest, &manifest_dir(path)))
}

fn validate_loaded(m: &BenchmarkManifest, base: &Path) -> ValidationReport {
    let mut r = ValidationReport::new();
    r.n = Some(m.n);
    r.p = Some(m.p);
    r.k = Some(m.k);

    let mut mats = Vec::new();
    for (name, path) in m.matrix_paths(base) {
        match read_matrix_market(&path) {
            Ok(mat) => {
                r.push(format!("file:{name}"), true, path.display().to_string());
                mats.push(Some(mat));
            }
            Err(e) => {
                r.push(format!("file:{name}"), false, e.to_string());
                mats.push(None);
            }
        }
    }

    let n = m.n;
    let expected = |name: &str| -> (usize, usize) {
        match name {
            "B" => (n, 1),
            "C" => (m.p, n),
            _ => (n, n),
        }
    };
    let names: Vec<String> = m.matrix_paths(base).into_iter().map(|(s, _)| s).collect();
    r.push(
        "dimension:p",
        m.files.a.len() == m.p + 1,
        format!("{} A matrices listed for p = {}", m.files.a.len(), m.p),
    );
    for (name, mat) in names.iter().zip(&mats) {
        if let Some(mat) = mat {
            let (er, ec) = expected(name);
            let ok = mat.n_rows() == er && mat.n_cols() == ec;
            r.push(
                format!("dimension:{name}"),
                ok,
                format!("{}x{}, expected {er}x{ec}", mat.n_rows(), mat.n_cols()),
            );
        }
    }
    if !r.passed {
        return r;
    }

    let mut mats: Vec<SparseMatrix> = mats.into_iter().map(|m| m.expect("all files loaded")).collect();
    let c = mats.pop().expect("C");
    let b = mats.pop().expect("B");
    let e = mats.remove(0);
    let a = mats;
    let dofs = m.dirichlet_dofs.clone().unwrap_or_else(|| infer_dirichlet_dofs(&e, &a[0]));
    let in_range = dofs.iter().all(|&j| j < n);
    r.push(
        "dimension:k",
        dofs.len() == m.k && in_range,
        format!("{} Dirichlet dofs for k = {}", dofs.len(), m.k),
    );
    if !r.passed {
        return r;
    }
    match AssemblyOutput::new(e, a, b, c, dofs) {
        Ok(asm) => check_assembly(&asm, &mut r),
        Err(e) => r.push("assembly", false, e.to_string()),
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, assemble_forms};
    use crate::mesh::fixtures::two_triangles;

    /// Clears only Dirichlet rows, leaving columns coupled.
    fn row_only(asm: &AssemblyOutput) -> AssemblyOutput {
        let forms = assemble_forms(&two_triangles().refine()).unwrap();
        let dofs = &asm.dirichlet_dofs;
        let clear = |m: &SparseMatrix, d: Option<f64>| {
            let mut t: Vec<_> = m.triplets().filter(|(r, _, _)| !dofs.contains(r)).collect();
            if let Some(d) = d {
                t.extend(dofs.iter().map(|&j| (j, j, d)));
            }
            SparseMatrix::from_triplets(m.n_rows(), m.n_cols(), &t).unwrap()
        };
        let e = clear(&forms.mass, Some(1.0));
        let a = forms
            .stiffness
            .iter()
            .enumerate()
            .map(|(i, k)| clear(&k.scale(-1.0), if i == 0 { Some(-1.0) } else { None }))
            .collect();
        let mut b = forms.inflow.clone();
        for &j in dofs {
            b[j] = 0.0;
        }
        AssemblyOutput::new(e, a, SparseMatrix::from_dense_column(&b), forms.outputs.clone(), dofs.clone()).unwrap()
    }

    #[test]
    fn fresh_assembly_passes() {
        let asm = assemble(&two_triangles().refine()).unwrap();
        let r = validate_assembly(&asm);
        assert!(r.passed, "{:#?}", r.failed().collect::<Vec<_>>());
        assert_eq!(r.surgery, Some(Surgery::Symmetric));
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["surgery"], "symmetric");
        assert_eq!(json["passed"], true);
    }

    #[test]
    fn row_only_elimination_detected() {
        let asm = assemble(&two_triangles().refine()).unwrap();
        let r = validate_assembly(&row_only(&asm));
        assert!(!r.passed);
        assert_eq!(r.surgery, Some(Surgery::RowOnly));
        assert!(r.check("left_eigenvectors").unwrap().passed);
        assert!(!r.check("right_eigenvectors").unwrap().passed);
        assert!(r.check("dirichlet_rows").unwrap().passed);
        assert!(!r.check("dirichlet_columns").unwrap().passed);
    }

    #[test]
    fn perturbed_entry_breaks_symmetry() {
        let mut asm = assemble(&two_triangles().refine()).unwrap();
        let t: Vec<_> = asm.a[1]
            .triplets()
            .map(|(r, c, v)| if r < c && v != 0.0 { (r, c, v * (1.0 + 1e-9)) } else { (r, c, v) })
            .collect();
        asm.a[1] = SparseMatrix::from_triplets(asm.n, asm.n, &t).unwrap();
        let r = validate_assembly(&asm);
        assert!(!r.check("symmetry:A1").unwrap().passed);
        assert!(r.check("symmetry:A0").unwrap().passed);
    }

    #[test]
    fn unit_row_structure() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 0.0), (1, 0, 1e-300), (1, 1, 1.0)]).unwrap();
        assert!(unit_row(&m, 0, 1.0).is_none());
        assert!(unit_row(&m, 1, 1.0).is_some());
        assert!(unit_row(&m, 0, -1.0).is_some());
    }
}

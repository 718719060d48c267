//! P1 finite-element assembly of the thermal-block system matrices.
//!
//! Sign convention: the stored `A_i` are the *negated* stiffness matrices,
//! `A_i = -K_i` with `K_i[j][l] = ∫_{Ω_i} ∇φ_j·∇φ_l`, so that the state
//! equation reads `E x' = (A_0 + Σ μ_i A_i) x + B u` with decaying dynamics.
//!
//! Dirichlet degrees of freedom (vertices on `x = 1`) are eliminated
//! symmetrically: their rows and columns are cleared in `E` and every `A_i`,
//! after which `E` gets a unit diagonal, `A_0` a `-1` diagonal, and the
//! parametric `A_i` keep an empty row and column. `B` is zeroed there. Each
//! Dirichlet unit vector is then an eigenvector of `A(μ)` and of the pencil
//! `(A(μ), E)` with eigenvalue `-1`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::BoundaryTag;
use crate::mesh::Mesh;
use crate::sparse::SparseMatrix;

/// Unconstrained forms over the full P1 space.
#[derive(Debug, Clone)]
pub struct FemForms {
    /// `m(w, v) = ∫_Ω w v`.
    pub mass: SparseMatrix,
    /// Positive stiffness `K_i` per subdomain, index 0 = background.
    pub stiffness: Vec<SparseMatrix>,
    /// `φ(v) = ∫_{Γ_in} v` as a dense vector.
    pub inflow: Vec<f64>,
    /// Row `i` is the average over disk `i + 1`.
    pub outputs: SparseMatrix,
    pub subdomain_areas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyOutput {
    pub e: SparseMatrix,
    /// `A_0, A_1, …, A_p` (negated stiffness, after Dirichlet elimination).
    pub a: Vec<SparseMatrix>,
    /// `n×1` input matrix.
    pub b: SparseMatrix,
    /// `p×n` output matrix.
    pub c: SparseMatrix,
    /// Sorted Dirichlet vertex indices.
    pub dirichlet_dofs: Vec<usize>,
    pub n: usize,
}

/// Element mass and stiffness of a P1 triangle.
pub(crate) fn element_matrices(p: [[f64; 2]; 3]) -> (f64, [[f64; 3]; 3], [[f64; 3]; 3]) {
    let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
    // (2A)·∇λ_k = (y_{k+1} - y_{k+2}, x_{k+2} - x_{k+1})
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
        g[k] = [a[1] - b[1], b[0] - a[0]];
    }
    let mut mass = [[0.0; 3]; 3];
    let mut stiff = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            mass[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
            stiff[i][j] = (g[i][0] * g[j][0] + g[i][1] * g[j][1]) / (4.0 * area);
        }
    }
    (area, mass, stiff)
}

/// Assembles `m`, `a_0 … a_p`, `φ` and `ψ_i` without boundary treatment.
pub fn assemble_forms(mesh: &Mesh) -> Result<FemForms> {
    let n = mesh.n_vertices();
    let p = mesh.n_disks;
    let mut mass_t = Vec::with_capacity(9 * mesh.n_triangles());
    let mut stiff_t: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); p + 1];
    let mut areas = vec![0.0; p + 1];
    let mut c_t = Vec::new();

    for (t, tri) in mesh.triangles.iter().enumerate() {
        let tag = mesh.triangle_tags[t];
        if tag > p {
            return Err(Error::Assembly(format!("triangle {t} has tag {tag} > {p}")));
        }
        let (area, me, ke) = element_matrices(mesh.triangle_points(t));
        if !(area > 0.0) {
            return Err(Error::Assembly(format!("triangle {t} has nonpositive area")));
        }
        areas[tag] += area;
        for i in 0..3 {
            for j in 0..3 {
                mass_t.push((tri[i], tri[j], me[i][j]));
                stiff_t[tag].push((tri[i], tri[j], ke[i][j]));
            }
            if tag > 0 {
                c_t.push((tag - 1, tri[i], area / 3.0));
            }
        }
    }
    for (i, &a) in areas.iter().enumerate().skip(1) {
        if !(a > 0.0) {
            return Err(Error::Assembly(format!("subdomain {i} contains no triangles")));
        }
    }
    for entry in &mut c_t {
        entry.2 /= areas[entry.0 + 1];
    }

    let mut inflow = vec![0.0; n];
    for &([a, b], tag) in &mesh.boundary_edges {
        if tag == BoundaryTag::Inflow {
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let half = 0.5 * (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
            inflow[a] += half;
            inflow[b] += half;
        }
    }

    Ok(FemForms {
        mass: SparseMatrix::from_triplets(n, n, &mass_t)?,
        stiffness: stiff_t
            .iter()
            .map(|t| SparseMatrix::from_triplets(n, n, t))
            .collect::<Result<_>>()?,
        inflow,
        outputs: SparseMatrix::from_triplets(p, n, &c_t)?,
        subdomain_areas: areas,
    })
}

fn eliminate(m: &SparseMatrix, fixed: &BTreeSet<usize>, diag: Option<f64>) -> Result<SparseMatrix> {
    let mut t: Vec<(usize, usize, f64)> = m
        .triplets()
        .filter(|(r, c, _)| !fixed.contains(r) && !fixed.contains(c))
        .collect();
    if let Some(d) = diag {
        t.extend(fixed.iter().map(|&j| (j, j, d)));
    }
    SparseMatrix::from_triplets(m.n_rows(), m.n_cols(), &t)
}

/// Symmetric Dirichlet elimination of the unconstrained forms.
pub fn apply_dirichlet(forms: &FemForms, dirichlet_dofs: &[usize]) -> Result<AssemblyOutput> {
    let n = forms.mass.n_rows();
    let fixed: BTreeSet<usize> = dirichlet_dofs.iter().copied().collect();
    if fixed.iter().any(|&j| j >= n) {
        return Err(Error::Dimension("Dirichlet index out of range".into()));
    }
    let e = eliminate(&forms.mass, &fixed, Some(1.0))?;
    let mut a = Vec::with_capacity(forms.stiffness.len());
    for (i, k) in forms.stiffness.iter().enumerate() {
        let neg = k.scale(-1.0);
        a.push(eliminate(&neg, &fixed, if i == 0 { Some(-1.0) } else { None })?);
    }
    let mut bvec = forms.inflow.clone();
    for &j in &fixed {
        bvec[j] = 0.0;
    }
    Ok(AssemblyOutput {
        e,
        a,
        b: SparseMatrix::from_dense_column(&bvec),
        c: forms.outputs.clone(),
        dirichlet_dofs: fixed.into_iter().collect(),
        n,
    })
}

/// Full assembly: forms plus Dirichlet treatment on the `x = 1` edge.
pub fn assemble(mesh: &Mesh) -> Result<AssemblyOutput> {
    let dirichlet = mesh.vertices_on(BoundaryTag::Dirichlet);
    if dirichlet.is_empty() {
        return Err(Error::Assembly(
            "mesh has no Dirichlet vertex; the system would be singular".into(),
        ));
    }
    if !mesh.boundary_edges.iter().any(|(_, t)| *t == BoundaryTag::Inflow) {
        return Err(Error::Assembly("mesh has no inflow edge".into()));
    }
    let forms = assemble_forms(mesh)?;
    apply_dirichlet(&forms, &dirichlet)
}

impl AssemblyOutput {
    /// Bundles externally provided matrices after checking dimensions.
    pub fn new(
        e: SparseMatrix,
        a: Vec<SparseMatrix>,
        b: SparseMatrix,
        c: SparseMatrix,
        dirichlet_dofs: Vec<usize>,
    ) -> Result<Self> {
        let n = e.n_rows();
        let square = |m: &SparseMatrix| m.n_rows() == n && m.n_cols() == n;
        if !square(&e) {
            return Err(Error::Dimension(format!("E is {}x{}, expected square", n, e.n_cols())));
        }
        if a.is_empty() {
            return Err(Error::Dimension("at least A_0 is required".into()));
        }
        for (i, ai) in a.iter().enumerate() {
            if !square(ai) {
                return Err(Error::Dimension(format!(
                    "A_{i} is {}x{}, expected {n}x{n}",
                    ai.n_rows(),
                    ai.n_cols()
                )));
            }
        }
        if b.n_rows() != n || b.n_cols() != 1 {
            return Err(Error::Dimension(format!("B is {}x{}, expected {n}x1", b.n_rows(), b.n_cols())));
        }
        let p = a.len() - 1;
        if c.n_rows() != p || c.n_cols() != n {
            return Err(Error::Dimension(format!("C is {}x{}, expected {p}x{n}", c.n_rows(), c.n_cols())));
        }
        let mut d = dirichlet_dofs;
        d.sort_unstable();
        d.dedup();
        if d.last().is_some_and(|&j| j >= n) {
            return Err(Error::Dimension("Dirichlet index out of range".into()));
        }
        Ok(AssemblyOutput {
            e,
            a,
            b,
            c,
            dirichlet_dofs: d,
            n,
        })
    }

    /// Number of parameters `p`.
    pub fn n_params(&self) -> usize {
        self.a.len() - 1
    }

    /// Number of Dirichlet degrees of freedom `k`.
    pub fn k(&self) -> usize {
        self.dirichlet_dofs.len()
    }

    pub fn b_vec(&self) -> Vec<f64> {
        self.b.to_dense_column()
    }

    /// `A(μ) = A_0 + Σ μ_i A_i`. Parameters must be positive.
    pub fn eval_a(&self, mu: &[f64]) -> Result<SparseMatrix> {
        check_mu(mu, self.n_params())?;
        let mats: Vec<&SparseMatrix> = self.a.iter().collect();
        let mut coefs = Vec::with_capacity(mu.len() + 1);
        coefs.push(1.0);
        coefs.extend_from_slice(mu);
        SparseMatrix::linear_combination(&mats, &coefs)
    }
}

pub(crate) fn check_mu(mu: &[f64], p: usize) -> Result<()> {
    if mu.len() != p {
        return Err(Error::Dimension(format!("expected {p} parameters, got {}", mu.len())));
    }
    for (i, &v) in mu.iter().enumerate() {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::NonPositiveParameter { index: i + 1, value: v });
        }
    }
    Ok(())
}

/// Free-function form of [`AssemblyOutput::eval_a`].
pub fn eval_a(out: &AssemblyOutput, mu: &[f64]) -> Result<SparseMatrix> {
    out.eval_a(mu)
}

//! Affine-parametric LTI model and its parameter variants.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{check_mu, AssemblyOutput};
use crate::ldl::{LdlFactor, LdlSymbolic};
use crate::sparse::{CsrMatrix, Scalar, SparseMatrix};

/// Lower end of the canonical parameter box.
pub const MU_MIN: f64 = 1e-6;
/// Upper end of the canonical parameter box.
pub const MU_MAX: f64 = 1e2;
/// `√10`, the preset of the non-parametric variant.
pub const NONPARAMETRIC_MU_TILDE: f64 = 3.162_277_660_168_379_5;

/// Relative residual required from every linear solve.
pub const SOLVE_TOL: f64 = 1e-10;

/// Scaling vector of the single-parameter variant.
///
/// For four disks this is `(0.2, 0.4, 0.6, 0.8)`; other layouts use
/// `0.8·i/p` for `i = 1…p`, which reduces to the same vector at `p = 4`.
pub fn default_scaling(p: usize) -> Vec<f64> {
    if p == 4 {
        vec![0.2, 0.4, 0.6, 0.8]
    } else {
        (1..=p).map(|i| 0.8 * i as f64 / p as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint(pub Vec<f64>);

impl ParameterPoint {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for ParameterPoint {
    fn from(v: Vec<f64>) -> Self {
        ParameterPoint(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParameterVariant {
    /// All `p` conductivities are independent parameters.
    Four,
    /// `μ = μ̃ · scaling` for a scalar `μ̃`.
    Single { scaling: Vec<f64> },
    /// The single-parameter model frozen at `mu_tilde` (default `√10`).
    Fixed { scaling: Vec<f64>, mu_tilde: f64 },
}

/// Raw user input for [`resolve`].
#[derive(Debug, Clone, PartialEq)]
pub enum RawParameter {
    /// Use the variant's preset (only meaningful for `Fixed`).
    Default,
    Scalar(f64),
    Vector(Vec<f64>),
}

impl ParameterVariant {
    pub fn single(p: usize) -> Self {
        ParameterVariant::Single {
            scaling: default_scaling(p),
        }
    }

    pub fn fixed(p: usize) -> Self {
        ParameterVariant::Fixed {
            scaling: default_scaling(p),
            mu_tilde: NONPARAMETRIC_MU_TILDE,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ParameterVariant::Four => "four",
            ParameterVariant::Single { .. } => "single",
            ParameterVariant::Fixed { .. } => "fixed",
        }
    }

    /// Dimension of the raw parameter space.
    pub fn raw_dim(&self, p: usize) -> usize {
        match self {
            ParameterVariant::Four => p,
            _ => 1,
        }
    }

    /// Number of model parameters this variant expects, if it fixes one.
    pub fn scaling(&self) -> Option<&[f64]> {
        match self {
            ParameterVariant::Four => None,
            ParameterVariant::Single { scaling } | ParameterVariant::Fixed { scaling, .. } => Some(scaling),
        }
    }

    /// Canonical box `[1e-6, 1e2]` over the raw parameter space.
    pub fn canonical_box(&self, p: usize) -> Vec<[f64; 2]> {
        vec![[MU_MIN, MU_MAX]; self.raw_dim(p)]
    }
}

fn check_box(raw: &[f64], bounds: &[[f64; 2]]) -> Result<()> {
    for (i, (&v, b)) in raw.iter().zip(bounds).enumerate() {
        if !(v >= b[0] && v <= b[1]) {
            return Err(Error::ParameterRange {
                index: i + 1,
                value: v,
                lo: b[0],
                hi: b[1],
            });
        }
    }
    Ok(())
}

fn resolve_unchecked(variant: &ParameterVariant, raw: &RawParameter, p: usize) -> Result<(Vec<f64>, ParameterPoint)> {
    let arity = |what: &str| Error::InvalidArgument(format!("variant '{}' expects {what}", variant.name()));
    match (variant, raw) {
        (ParameterVariant::Four, RawParameter::Vector(v)) => {
            if v.len() != p {
                return Err(Error::Dimension(format!("expected {p} parameters, got {}", v.len())));
            }
            Ok((v.clone(), ParameterPoint(v.clone())))
        }
        (ParameterVariant::Four, _) => Err(arity(&format!("a vector of {p} values"))),
        (ParameterVariant::Single { scaling }, RawParameter::Scalar(t))
        | (ParameterVariant::Fixed { scaling, .. }, RawParameter::Scalar(t)) => {
            Ok((vec![*t], ParameterPoint(scaling.iter().map(|s| t * s).collect())))
        }
        (ParameterVariant::Fixed { scaling, mu_tilde }, RawParameter::Default) => Ok((
            vec![*mu_tilde],
            ParameterPoint(scaling.iter().map(|s| mu_tilde * s).collect()),
        )),
        (ParameterVariant::Single { .. }, _) | (ParameterVariant::Fixed { .. }, _) => {
            Err(arity("a scalar mu_tilde"))
        }
    }
}

/// Turns raw input into a concrete `μ`, enforcing the canonical box
/// `[1e-6, 1e2]` on the raw parameter.
pub fn resolve(variant: &ParameterVariant, raw: &RawParameter, p: usize) -> Result<ParameterPoint> {
    let (raw_vals, point) = resolve_unchecked(variant, raw, p)?;
    check_box(&raw_vals, &variant.canonical_box(p))?;
    Ok(point)
}

/// Union sparsity pattern of `E, A_0 … A_p` with aligned value arrays, for
/// fast evaluation of `αE + Σ β_i A_i`.
#[derive(Debug, Clone)]
pub struct AffinePencil {
    pattern: SparseMatrix,
    e: Vec<f64>,
    a: Vec<Vec<f64>>,
}

fn align(pattern: &SparseMatrix, m: &SparseMatrix) -> Vec<f64> {
    let mut out = vec![0.0; pattern.nnz()];
    let ptr = pattern.row_ptr();
    for r in 0..m.n_rows() {
        let cols = pattern.row(r).0;
        let (mc, mv) = m.row(r);
        for (&c, &v) in mc.iter().zip(mv) {
            let k = cols.binary_search(&c).expect("pattern is a superset");
            out[ptr[r] + k] = v;
        }
    }
    out
}

impl AffinePencil {
    pub fn new(assembly: &AssemblyOutput) -> Result<Self> {
        let mut mats: Vec<&SparseMatrix> = vec![&assembly.e];
        mats.extend(assembly.a.iter());
        let ones = vec![1.0; mats.len()];
        let pattern = SparseMatrix::linear_combination(&mats, &ones)?;
        Ok(AffinePencil {
            e: align(&pattern, &assembly.e),
            a: assembly.a.iter().map(|m| align(&pattern, m)).collect(),
            pattern,
        })
    }

    /// `e_coef · E + Σ a_coefs[i] · A_i` on the union pattern.
    pub fn combine<T: Scalar>(&self, e_coef: T, a_coefs: &[T]) -> CsrMatrix<T> {
        assert_eq!(a_coefs.len(), self.a.len());
        let mut m = self.pattern.map(|_| T::zero());
        for (k, v) in m.values_mut().iter_mut().enumerate() {
            let mut acc = e_coef * T::from_real(self.e[k]);
            for (ai, &c) in self.a.iter().zip(a_coefs) {
                acc += c * T::from_real(ai[k]);
            }
            *v = acc;
        }
        m
    }

    /// `s E - A(μ)`.
    pub fn shifted<T: Scalar>(&self, s: T, mu: &[f64]) -> CsrMatrix<T> {
        let mut coefs = Vec::with_capacity(mu.len() + 1);
        coefs.push(-T::one());
        coefs.extend(mu.iter().map(|&m| T::from_real(-m)));
        self.combine(s, &coefs)
    }

    pub fn pattern(&self) -> &SparseMatrix {
        &self.pattern
    }
}

/// The benchmark as an affine-parametric descriptor system
/// `E x' = A(μ) x + B u`, `y = C x`.
#[derive(Debug, Clone)]
pub struct AffineLtiModel {
    pub assembly: AssemblyOutput,
    pub variant: ParameterVariant,
    /// Bounds on the raw parameter (μ for `Four`, μ̃ otherwise).
    pub parameter_box: Vec<[f64; 2]>,
    /// When false, [`AffineLtiModel::resolve`] accepts any positive value.
    pub box_check: bool,
    pencil: OnceLock<Arc<(AffinePencil, Arc<LdlSymbolic>)>>,
}

impl AffineLtiModel {
    pub fn new(assembly: AssemblyOutput, variant: ParameterVariant) -> Result<Self> {
        let p = assembly.n_params();
        if let Some(s) = variant.scaling() {
            if s.len() != p {
                return Err(Error::Dimension(format!(
                    "scaling vector has {} entries but the model has {p} parameters",
                    s.len()
                )));
            }
            if s.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument("scaling entries must be positive".into()));
            }
        }
        let parameter_box = variant.canonical_box(p);
        Ok(AffineLtiModel {
            assembly,
            variant,
            parameter_box,
            box_check: true,
            pencil: OnceLock::new(),
        })
    }

    /// Replaces the parameter box; it must lie within `[1e-6, 1e2]`.
    pub fn with_box(mut self, parameter_box: Vec<[f64; 2]>) -> Result<Self> {
        let dim = self.variant.raw_dim(self.p());
        if parameter_box.len() != dim {
            return Err(Error::Dimension(format!("box needs {dim} intervals")));
        }
        if parameter_box
            .iter()
            .any(|b| !(b[0] >= MU_MIN && b[1] <= MU_MAX && b[0] <= b[1]))
        {
            return Err(Error::InvalidArgument("parameter box must lie within [1e-6, 1e2]".into()));
        }
        self.parameter_box = parameter_box;
        Ok(self)
    }

    pub fn without_box_check(mut self) -> Self {
        self.box_check = false;
        self
    }

    pub fn n(&self) -> usize {
        self.assembly.n
    }

    pub fn p(&self) -> usize {
        self.assembly.n_params()
    }

    pub fn resolve(&self, raw: &RawParameter) -> Result<ParameterPoint> {
        let (raw_vals, point) = resolve_unchecked(&self.variant, raw, self.p())?;
        if self.box_check {
            check_box(&raw_vals, &self.parameter_box)?;
        }
        check_mu(point.values(), self.p())?;
        Ok(point)
    }

    pub fn eval_a(&self, mu: &ParameterPoint) -> Result<SparseMatrix> {
        self.assembly.eval_a(mu.values())
    }

    /// `y = C x`.
    pub fn outputs(&self, x: &[f64]) -> Vec<f64> {
        self.assembly.c.mul_vec(x)
    }

    /// Union pattern and its symbolic factorization, computed once.
    pub fn pencil(&self) -> Result<Arc<(AffinePencil, Arc<LdlSymbolic>)>> {
        if let Some(p) = self.pencil.get() {
            return Ok(Arc::clone(p));
        }
        let pencil = AffinePencil::new(&self.assembly)?;
        let symbolic = LdlSymbolic::analyze(pencil.pattern())?;
        Ok(Arc::clone(self.pencil.get_or_init(|| Arc::new((pencil, symbolic)))))
    }

    /// Solves `A(μ) x + B u_inf = 0`.
    pub fn steady_state(&self, mu: &ParameterPoint, u_inf: f64) -> Result<Vec<f64>> {
        let a = self.eval_a(mu)?;
        let rhs: Vec<f64> = self.assembly.b_vec().iter().map(|b| -b * u_inf).collect();
        let factor = LdlFactor::new(&a)?;
        factor.solve_checked(&a, &rhs, SOLVE_TOL)
    }
}

/// Free-function form of [`AffineLtiModel::steady_state`].
pub fn steady_state(model: &AffineLtiModel, mu: &ParameterPoint, u_inf: f64) -> Result<Vec<f64>> {
    model.steady_state(mu, u_inf)
}

//! Transfer function and sigma-magnitude surfaces.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AffineLtiModel, ParameterPoint, ParameterVariant, RawParameter, SOLVE_TOL};

/// Environment variable capping the worker count of parallel sweeps.
pub const THREADS_ENV: &str = "THERMOBLOCK_THREADS";

/// `count` log-spaced points from `lo` to `hi`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if count < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points".into()));
    }
    let (a, b) = (lo.log10(), hi.log10());
    let mut g: Vec<f64> = (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect();
    g[0] = lo;
    g[count - 1] = hi;
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub omegas: Vec<f64>,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid::log_spaced(1e-2, 1e4, 100).expect("valid default grid")
    }
}

impl FrequencyGrid {
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Ok(FrequencyGrid {
            omegas: log_grid(lo, hi, count)?,
        })
    }
}

/// `H(s) = C (sE - A(μ))⁻¹ B`, one entry per output.
pub fn transfer_function(model: &AffineLtiModel, mu: &ParameterPoint, s: Complex64) -> Result<Vec<Complex64>> {
    crate::fem::check_mu(mu.values(), model.p())?;
    let pencil = model.pencil()?;
    let (pencil, symbolic) = &*pencil;
    let m = pencil.shifted(s, mu.values());
    let factor = symbolic.factor(&m).map_err(|e| match e {
        Error::Singular { .. } => Error::SingularShift { re: s.re, im: s.im },
        other => other,
    })?;
    let b: Vec<Complex64> = model.assembly.b_vec().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let x = factor.solve_checked(&m, &b, SOLVE_TOL)?;
    let c = &model.assembly.c;
    Ok((0..c.n_rows())
        .map(|r| {
            let (cols, vals) = c.row(r);
            cols.iter().zip(vals).map(|(&j, &v)| x[j] * v).sum()
        })
        .collect())
}

/// Largest singular value of a single-input transfer vector.
pub fn sigma_max(h: &[Complex64]) -> f64 {
    h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSurface {
    pub mu_tilde: Vec<f64>,
    pub omegas: Vec<f64>,
    /// `values[i][j]` is `σ_max(H(iω_j; μ̃_i))`.
    pub values: Vec<Vec<f64>>,
}

impl SigmaSurface {
    /// Rows are `μ̃`; the header lists the frequencies.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mu_tilde");
        for w in &self.omegas {
            s.push(',');
            s.push_str(&crate::io::fmt_f64(*w));
        }
        s.push('\n');
        for (mt, row) in self.mu_tilde.iter().zip(&self.values) {
            s.push_str(&crate::io::fmt_f64(*mt));
            for v in row {
                s.push(',');
                s.push_str(&crate::io::fmt_f64(*v));
            }
            s.push('\n');
        }
        s
    }
}

/// Runs `f` on a pool sized by `THERMOBLOCK_THREADS` (default: all cores).
pub fn with_thread_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `σ_max` over a `μ̃ × ω` grid for the single-parameter variant.
pub fn sigma_surface(model: &AffineLtiModel, mu_grid: &[f64], omega_grid: &FrequencyGrid) -> Result<SigmaSurface> {
    if !matches!(model.variant, ParameterVariant::Single { .. }) {
        return Err(Error::InvalidArgument(format!(
            "sigma surfaces need the single-parameter variant, model is '{}'",
            model.variant.name()
        )));
    }
    let points = mu_grid
        .iter()
        .map(|&t| model.resolve(&RawParameter::Scalar(t)))
        .collect::<Result<Vec<_>>>()?;
    model.pencil()?;
    let omegas = &omega_grid.omegas;
    let nw = omegas.len();
    let flat: Vec<f64> = with_thread_pool(|| {
        (0..points.len() * nw)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / nw, idx % nw);
                transfer_function(model, &points[i], Complex64::new(0.0, omegas[j])).map(|h| sigma_max(&h))
            })
            .collect::<Result<Vec<f64>>>()
    })??;
    Ok(SigmaSurface {
        mu_tilde: mu_grid.to_vec(),
        omegas: omegas.clone(),
        values: flat.chunks(nw.max(1)).map(|c| c.to_vec()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use crate::geometry::default_spec;
    use crate::mesher::generate_mesh;

    fn coarse(variant: ParameterVariant) -> AffineLtiModel {
        let mesh = generate_mesh(&default_spec().with_mesh_scale(0.3).with_circle_segments(16)).unwrap();
        AffineLtiModel::new(assemble(&mesh).unwrap(), variant).unwrap()
    }

    #[test]
    fn grid_shape() {
        let g = log_grid(1e-2, 1e4, 7).unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[6], 1e4);
        assert!((g[1] - 1e-1).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(log_grid(0.0, 1.0, 3).is_err());
        assert!(log_grid(1.0, 1.0, 3).is_err());
        assert_eq!(FrequencyGrid::default().omegas.len(), 100);
    }

    #[test]
    fn dc_gain_matches_steady_state() {
        let m = coarse(ParameterVariant::Four);
        let mu = ParameterPoint(vec![0.3, 4.0, 1e-2, 1.0]);
        let h = transfer_function(&m, &mu, Complex64::new(0.0, 0.0)).unwrap();
        let y = m.outputs(&m.steady_state(&mu, 1.0).unwrap());
        for (a, b) in h.iter().zip(&y) {
            assert!((a.re - b).abs() < 1e-12 && a.im == 0.0);
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let m = coarse(ParameterVariant::Four);
        let mu = ParameterPoint(vec![1.0; 4]);
        let hp = transfer_function(&m, &mu, Complex64::new(0.0, 7.0)).unwrap();
        let hm = transfer_function(&m, &mu, Complex64::new(0.0, -7.0)).unwrap();
        for (a, b) in hp.iter().zip(&hm) {
            assert!((a - b.conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn surface_rejects_other_variants() {
        let m = coarse(ParameterVariant::Four);
        assert!(sigma_surface(&m, &[1.0], &FrequencyGrid::default()).is_err());
        let s = coarse(ParameterVariant::single(4));
        assert!(matches!(
            sigma_surface(&s, &[1e3], &FrequencyGrid::default()),
            Err(Error::ParameterRange { .. })
        ));
    }

    #[test]
    fn surface_is_deterministic_and_rolls_off() {
        let s = coarse(ParameterVariant::single(4));
        let mus = log_grid(1e-6, 1e2, 4).unwrap();
        let grid = FrequencyGrid::log_spaced(1e-2, 1e4, 12).unwrap();
        let a = sigma_surface(&s, &mus, &grid).unwrap();
        let b = sigma_surface(&s, &mus, &grid).unwrap();
        assert_eq!(a, b);
        for row in &a.values {
            assert!(row[11] < row[0]);
        }
        let csv = a.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 13);
    }

    #[test]
    fn fixed_variant_agrees_with_surface() {
        let single = coarse(ParameterVariant::single(4));
        let fixed = coarse(ParameterVariant::fixed(4));
        let mu = fixed.resolve(&RawParameter::Default).unwrap();
        let grid = FrequencyGrid::log_spaced(1e-1, 1e3, 5).unwrap();
        let surf = sigma_surface(&single, &[crate::model::NONPARAMETRIC_MU_TILDE], &grid).unwrap();
        for (j, &w) in grid.omegas.iter().enumerate() {
            let h = sigma_max(&transfer_function(&fixed, &mu, Complex64::new(0.0, w)).unwrap());
            assert!((h - surf.values[0][j]).abs() <= 1e-12 * h);
        }
    }
}

//! Dense brute-force oracles on coarse meshes.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thermoblock::freq::{log_grid, sigma_max, sigma_surface, transfer_function, FrequencyGrid};
use thermoblock::model::{AffineLtiModel, ParameterPoint, ParameterVariant};
use thermoblock::sparse::SparseMatrix;
use thermoblock::{build, default_spec, GeometrySpec};

fn coarse_spec() -> GeometrySpec {
    default_spec().with_mesh_scale(0.3).with_circle_segments(16)
}

fn coarse(variant: ParameterVariant) -> AffineLtiModel {
    let b = build(&coarse_spec(), 0).unwrap();
    assert!(b.assembly.n <= 300);
    b.model(variant).unwrap()
}

fn dense(m: &SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.n_rows(), m.n_cols());
    for (r, c, v) in m.triplets() {
        d[(r, c)] += v;
    }
    d
}

/// Eigenvalues of the symmetric-definite pencil `(A, E)`.
fn generalized_eigenvalues(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Vec<f64> {
    let l = Cholesky::new(e.clone()).expect("E positive definite").l();
    let linv = l.clone().try_inverse().unwrap();
    let s = &linv * a * linv.transpose();
    let s = (&s + s.transpose()) * 0.5;
    SymmetricEigen::new(s).eigenvalues.iter().copied().collect()
}

#[test]
fn pencil_eigenvalues_are_negative() {
    let m = coarse(ParameterVariant::Four);
    let e = dense(&m.assembly.e);
    for mu in [[1.0; 4], [1e-6; 4], [1e2; 4], [1e2, 1e-2, 1e-3, 1e-4]] {
        let a = dense(&m.assembly.eval_a(&mu).unwrap());
        let ev = generalized_eigenvalues(&a, &e);
        let top = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(top < 0.0, "mu {mu:?}: largest eigenvalue {top}");
        // each Dirichlet unit vector contributes an eigenvalue -1
        let at_minus_one = ev.iter().filter(|&&l| (l + 1.0).abs() < 1e-8).count();
        assert!(at_minus_one >= m.assembly.k());
    }
}

/// `H(iω) = Σ_k c_k b_k / (iω - λ_k)` from the dense eigendecomposition.
fn modal_transfer(m: &AffineLtiModel, mu: &[f64], omega: f64) -> Vec<Complex64> {
    let e = dense(&m.assembly.e);
    let a = dense(&m.assembly.eval_a(mu).unwrap());
    let l = Cholesky::new(e).unwrap().l();
    let linv = l.try_inverse().unwrap();
    let s = &linv * &a * linv.transpose();
    let eig = SymmetricEigen::new((&s + s.transpose()) * 0.5);
    // x = L^{-T} V (iω - Λ)^{-1} V^T L^{-1} b
    let b = DVector::from_vec(m.assembly.b_vec());
    let c = dense(&m.assembly.c);
    let vb = eig.eigenvectors.transpose() * (&linv * b);
    let cv = &c * linv.transpose() * &eig.eigenvectors;
    (0..c.nrows())
        .map(|i| {
            (0..vb.len())
                .map(|k| Complex64::new(cv[(i, k)] * vb[k], 0.0) / Complex64::new(-eig.eigenvalues[k], omega))
                .sum()
        })
        .collect()
}

#[test]
fn transfer_function_matches_modal_oracle() {
    let m = coarse(ParameterVariant::Four);
    let mu = [0.5, 3.0, 1e-3, 20.0];
    for omega in [0.0, 1e-2, 1.0, 1e2, 1e6] {
        let h = transfer_function(&m, &ParameterPoint(mu.to_vec()), Complex64::new(0.0, omega)).unwrap();
        let o = modal_transfer(&m, &mu, omega);
        for (a, b) in h.iter().zip(&o) {
            assert!((a - b).norm() <= 1e-8 * b.norm().max(1e-12), "omega {omega}: {a} vs {b}");
        }
    }
    let lo = sigma_max(&modal_transfer(&m, &mu, 1e-2));
    let hi = sigma_max(&modal_transfer(&m, &mu, 1e6));
    assert!(hi < lo);
    let hi_sparse = sigma_max(&transfer_function(&m, &ParameterPoint(mu.to_vec()), Complex64::new(0.0, 1e6)).unwrap());
    assert!(hi_sparse < lo);
}

#[test]
fn dc_gain_is_real() {
    let m = coarse(ParameterVariant::Four);
    let h = transfer_function(&m, &ParameterPoint(vec![1.0; 4]), Complex64::new(0.0, 0.0)).unwrap();
    for (z, expect) in h.iter().zip([0.7, 0.3, 0.3, 0.7]) {
        assert!(z.im.abs() <= 1e-10);
        assert!((z.re - expect).abs() <= 1e-2);
    }
}

#[test]
fn sigma_examples() {
    assert_eq!(sigma_max(&[Complex64::new(3.0, 4.0), 0.0.into(), 0.0.into(), 0.0.into()]), 5.0);
    assert_eq!(sigma_max(&[Complex64::new(0.0, 0.0); 4]), 0.0);
    assert_eq!(sigma_max(&[Complex64::new(1.0, 0.0); 4]), 2.0);
}

#[test]
fn surface_columns_and_continuity() {
    let m = coarse(ParameterVariant::single(4));
    let mus = log_grid(1e-6, 1e2, 9).unwrap();
    let grid = FrequencyGrid::log_spaced(1e-2, 1e4, 13).unwrap();
    let s = sigma_surface(&m, &mus, &grid).unwrap();
    for (i, &mt) in mus.iter().enumerate() {
        let mu = m.resolve(&thermoblock::RawParameter::Scalar(mt)).unwrap();
        for (j, &w) in grid.omegas.iter().enumerate() {
            let h = sigma_max(&transfer_function(&m, &mu, Complex64::new(0.0, w)).unwrap());
            assert_eq!(h, s.values[i][j]);
            assert!(h.is_finite() && h >= 0.0);
        }
    }
    // adjacent μ̃ rows differ by at most the grid ratio, with generous slack
    let ratio = mus[1] / mus[0];
    for j in 0..grid.omegas.len() {
        for i in 1..mus.len() {
            let q = s.values[i][j] / s.values[i - 1][j];
            assert!(q < 10.0 * ratio && q > 1.0 / (10.0 * ratio), "row {i} col {j}: {q}");
        }
    }
}

#[test]
fn steady_outputs_converge_at_second_order() {
    let mu = ParameterPoint(vec![0.1, 10.0, 1.0, 0.01]);
    let mut mesh = thermoblock::generate_mesh(&default_spec().with_mesh_scale(0.2)).unwrap();
    let mut ys = Vec::new();
    for _ in 0..4 {
        let asm = thermoblock::fem::assemble(&mesh).unwrap();
        let model = AffineLtiModel::new(asm, ParameterVariant::Four).unwrap();
        ys.push(model.outputs(&model.steady_state(&mu, 1.0).unwrap()));
        mesh = mesh.refine();
    }
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let d: Vec<f64> = ys.windows(2).map(|w| diff(&w[0], &w[1])).collect();
    let order = (d[1] / d[2]).log2();
    assert!(order >= 1.7, "differences {d:?}, order {order}");
}

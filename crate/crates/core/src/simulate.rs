//! Implicit-Euler time integration.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ldl::LdlFactor;
use crate::mesh::Mesh;
use crate::model::{AffineLtiModel, ParameterPoint, SOLVE_TOL};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_end: f64,
    pub n_steps: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { t_end: 1.0, n_steps: 100 }
    }
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_end must be positive, got {t_end}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
        }
        Ok(TimeGrid { t_end, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_end * k as f64 / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }
}

/// Scalar inflow heat flux `u(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    UnitStep,
    Constant(f64),
    /// Values at `t_0 … t_N`; held constant within each step.
    Samples(Vec<f64>),
}

impl InputSignal {
    fn check(&self, grid: &TimeGrid) -> Result<()> {
        match self {
            InputSignal::Constant(c) if !c.is_finite() => {
                Err(Error::InvalidArgument("input value must be finite".into()))
            }
            InputSignal::Samples(s) => {
                if s.len() != grid.n_steps + 1 {
                    return Err(Error::Dimension(format!(
                        "input has {} samples, time grid needs {}",
                        s.len(),
                        grid.n_steps + 1
                    )));
                }
                if s.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("input samples must be finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `u(t_k)`.
    pub fn value(&self, k: usize) -> f64 {
        match self {
            InputSignal::UnitStep => 1.0,
            InputSignal::Constant(c) => *c,
            InputSignal::Samples(s) => s[k],
        }
    }
}

/// Which states a simulation keeps in memory.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum StateStorage {
    #[default]
    Last,
    All,
    Steps(Vec<usize>),
}

impl StateStorage {
    fn keeps(&self, k: usize, n_steps: usize) -> bool {
        match self {
            StateStorage::Last => k == n_steps,
            StateStorage::All => true,
            StateStorage::Steps(s) => s.contains(&k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `outputs[k]` is `y(t_k)`.
    pub outputs: Vec<Vec<f64>>,
    pub states: BTreeMap<usize, Vec<f64>>,
}

impl Trajectory {
    pub fn final_output(&self) -> &[f64] {
        self.outputs.last().expect("trajectory holds t_0")
    }

    pub fn state(&self, step: usize) -> Result<&[f64]> {
        self.states
            .get(&step)
            .map(|v| v.as_slice())
            .ok_or(Error::NotStored { step })
    }

    pub fn final_state(&self) -> Result<&[f64]> {
        self.state(self.times.len() - 1)
    }
}

/// `E - Δt A(μ)`, the implicit-Euler system matrix.
pub fn euler_matrix(model: &AffineLtiModel, mu: &ParameterPoint, dt: f64) -> Result<SparseMatrix> {
    let a = model.eval_a(mu)?;
    SparseMatrix::linear_combination(&[&model.assembly.e, &a], &[1.0, -dt])
}

/// Zero initial state, keeping only the final state.
pub fn implicit_euler(
    model: &AffineLtiModel,
    mu: &ParameterPoint,
    grid: &TimeGrid,
    input: &InputSignal,
) -> Result<Trajectory> {
    implicit_euler_with(model, mu, grid, input, &StateStorage::Last)
}

pub fn implicit_euler_with(
    model: &AffineLtiModel,
    mu: &ParameterPoint,
    grid: &TimeGrid,
    input: &InputSignal,
    storage: &StateStorage,
) -> Result<Trajectory> {
    input.check(grid)?;
    let n = model.n();
    let dt = grid.dt();
    let m = euler_matrix(model, mu, dt)?;
    let factor = LdlFactor::new(&m)?;
    let b = model.assembly.b_vec();

    let mut x = vec![0.0; n];
    let mut outputs = Vec::with_capacity(grid.n_steps + 1);
    let mut states = BTreeMap::new();
    outputs.push(model.outputs(&x));
    if storage.keeps(0, grid.n_steps) {
        states.insert(0, x.clone());
    }
    for k in 1..=grid.n_steps {
        let u = input.value(k);
        let mut rhs = model.assembly.e.mul_vec(&x);
        for (r, bi) in rhs.iter_mut().zip(&b) {
            *r += dt * u * bi;
        }
        x = match factor.solve_checked(&m, &rhs, SOLVE_TOL) {
            Ok(v) => v,
            Err(Error::Residual { residual, .. }) if !residual.is_finite() => {
                return Err(Error::NonFinite { step: k })
            }
            Err(e) => return Err(e),
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: k });
        }
        outputs.push(model.outputs(&x));
        if storage.keeps(k, grid.n_steps) {
            states.insert(k, x.clone());
        }
    }
    Ok(Trajectory {
        times: grid.times(),
        outputs,
        states,
    })
}

/// Vertex-valued temperature at a stored step, checked against the mesh.
pub fn snapshot_field(traj: &Trajectory, mesh: &Mesh, step: usize) -> Result<Vec<f64>> {
    let x = traj.state(step)?;
    if x.len() != mesh.n_vertices() {
        return Err(Error::Dimension(format!(
            "state has {} entries, mesh has {} vertices",
            x.len(),
            mesh.n_vertices()
        )));
    }
    Ok(x.to_vec())
}

/// Area-weighted mean of a P1 field over each subdomain (index 0 is the
/// background).
pub fn subdomain_means(mesh: &Mesh, field: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0; mesh.n_disks + 1];
    let mut areas = vec![0.0; mesh.n_disks + 1];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.triangle_area(t);
        let tag = mesh.triangle_tags[t];
        sums[tag] += a * tri.iter().map(|&v| field[v]).sum::<f64>() / 3.0;
        areas[tag] += a;
    }
    sums.iter().zip(&areas).map(|(s, a)| s / a).collect()
}

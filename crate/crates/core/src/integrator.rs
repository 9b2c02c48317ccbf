//! Euclidean-metric Hamiltonian dynamics and the velocity Verlet integrator.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::rng::RngKey;
use crate::target::LogDensity;

/// Mass matrix `M`; momenta are drawn from `N(0, M)` and the kinetic energy
/// is `p^T M^{-1} p / 2`.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Identity(usize),
    Diagonal {
        inverse_mass: Vec<f64>,
        /// `sqrt(1 / inverse_mass)`, the diagonal Cholesky factor of `M`.
        mass_sqrt: Vec<f64>,
    },
    Dense {
        inverse_mass: DMatrix<f64>,
        /// Lower-triangular `L` with `L L^T = M`.
        mass_cholesky: DMatrix<f64>,
    },
}

impl Metric {
    pub fn identity(dim: usize) -> Self {
        Metric::Identity(dim)
    }

    pub fn diagonal(inverse_mass: Vec<f64>) -> Result<Self> {
        if inverse_mass.is_empty() {
            return Err(Error::invalid("inverse_mass", "empty"));
        }
        if let Some(bad) = inverse_mass.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::invalid(
                "inverse_mass",
                format!("entries must be positive and finite, found {bad}"),
            ));
        }
        let mass_sqrt = inverse_mass.iter().map(|v| v.recip().sqrt()).collect();
        Ok(Metric::Diagonal {
            inverse_mass,
            mass_sqrt,
        })
    }

    pub fn dense(inverse_mass: DMatrix<f64>) -> Result<Self> {
        let n = inverse_mass.nrows();
        if n == 0 || inverse_mass.ncols() != n {
            return Err(Error::invalid(
                "inverse_mass",
                "must be a non-empty square matrix",
            ));
        }
        let asym = (&inverse_mass - inverse_mass.transpose()).abs().max();
        if !(asym <= 1e-12 * inverse_mass.abs().max()) {
            return Err(Error::invalid("inverse_mass", "must be symmetric"));
        }
        let chol = inverse_mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::invalid("inverse_mass", "must be positive definite"))?;
        let mass = chol.inverse();
        let mass = (&mass + mass.transpose()) * 0.5;
        let mass_cholesky = mass
            .cholesky()
            .ok_or_else(|| Error::invalid("inverse_mass", "mass matrix is not positive definite"))?
            .l();
        Ok(Metric::Dense {
            inverse_mass,
            mass_cholesky,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Metric::Identity(d) => *d,
            Metric::Diagonal { inverse_mass, .. } => inverse_mass.len(),
            Metric::Dense { inverse_mass, .. } => inverse_mass.nrows(),
        }
    }

    /// `M^{-1} p`.
    pub fn velocity(&self, momentum: &[f64]) -> Vec<f64> {
        match self {
            Metric::Identity(_) => momentum.to_vec(),
            Metric::Diagonal { inverse_mass, .. } => momentum
                .iter()
                .zip(inverse_mass)
                .map(|(p, m)| p * m)
                .collect(),
            Metric::Dense { inverse_mass, .. } => (inverse_mass
                * DVector::from_column_slice(momentum))
            .iter()
            .copied()
            .collect(),
        }
    }

    /// Diagonal of `M^{-1}`.
    pub fn inverse_mass_diagonal(&self) -> Vec<f64> {
        match self {
            Metric::Identity(d) => vec![1.0; *d],
            Metric::Diagonal { inverse_mass, .. } => inverse_mass.clone(),
            Metric::Dense { inverse_mass, .. } => inverse_mass.diagonal().iter().copied().collect(),
        }
    }
}

pub fn kinetic_energy(momentum: &[f64], metric: &Metric) -> Result<f64> {
    check_dim(metric.dim(), momentum.len())?;
    Ok(kinetic_unchecked(momentum, metric))
}

pub(crate) fn kinetic_unchecked(momentum: &[f64], metric: &Metric) -> f64 {
    let v = metric.velocity(momentum);
    0.5 * momentum.iter().zip(&v).map(|(p, v)| p * v).sum::<f64>()
}

/// Draw from `N(0, M)`.
pub fn sample_momentum(key: RngKey, metric: &Metric) -> Vec<f64> {
    let z = key.normal_vector(metric.dim());
    match metric {
        Metric::Identity(_) => z,
        Metric::Diagonal { mass_sqrt, .. } => z.iter().zip(mass_sqrt).map(|(z, s)| z * s).collect(),
        Metric::Dense { mass_cholesky, .. } => (mass_cholesky * DVector::from_vec(z))
            .iter()
            .copied()
            .collect(),
    }
}

/// Phase-space point with cached density evaluations at `position`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorState {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
    pub logdensity: f64,
    pub gradient: Vec<f64>,
}

impl IntegratorState {
    pub fn new(position: Vec<f64>, momentum: Vec<f64>, target: &dyn LogDensity) -> Result<Self> {
        check_dim(target.dim(), position.len())?;
        check_dim(target.dim(), momentum.len())?;
        let (logdensity, gradient) = target.logdensity_and_gradient(&position);
        Ok(IntegratorState {
            position,
            momentum,
            logdensity,
            gradient,
        })
    }

    /// Hamiltonian `-log pi(q) + K(p)`.
    pub fn energy(&self, metric: &Metric) -> f64 {
        -self.logdensity + kinetic_unchecked(&self.momentum, metric)
    }

    pub fn flip_momentum(mut self) -> Self {
        self.momentum.iter_mut().for_each(|p| *p = -*p);
        self
    }
}

/// One step of a symplectic integrator; kernels take this as a parameter so
/// other schemes can be slotted in.
pub type Integrator = fn(&IntegratorState, f64, &Metric, &dyn LogDensity) -> IntegratorState;

/// Velocity Verlet: half kick, drift, half kick.
pub fn leapfrog(
    state: &IntegratorState,
    step_size: f64,
    metric: &Metric,
    target: &dyn LogDensity,
) -> IntegratorState {
    let half = 0.5 * step_size;
    let momentum: Vec<f64> = state
        .momentum
        .iter()
        .zip(&state.gradient)
        .map(|(p, g)| p + half * g)
        .collect();
    let velocity = metric.velocity(&momentum);
    let position: Vec<f64> = state
        .position
        .iter()
        .zip(&velocity)
        .map(|(q, v)| q + step_size * v)
        .collect();
    let (logdensity, gradient) = target.logdensity_and_gradient(&position);
    let momentum = momentum
        .iter()
        .zip(&gradient)
        .map(|(p, g)| p + half * g)
        .collect();
    IntegratorState {
        position,
        momentum,
        logdensity,
        gradient,
    }
}

pub fn trajectory(
    state: &IntegratorState,
    step_size: f64,
    metric: &Metric,
    target: &dyn LogDensity,
    num_steps: usize,
) -> IntegratorState {
    integrate_with(leapfrog, state, step_size, metric, target, num_steps)
}

pub fn integrate_with(
    integrator: Integrator,
    state: &IntegratorState,
    step_size: f64,
    metric: &Metric,
    target: &dyn LogDensity,
    num_steps: usize,
) -> IntegratorState {
    let mut current = state.clone();
    for _ in 0..num_steps {
        current = integrator(&current, step_size, metric, target);
    }
    current
}

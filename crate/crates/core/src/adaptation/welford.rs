use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::integrator::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassMatrixKind {
    #[default]
    Diagonal,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
enum SecondMoment {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

/// Streaming mean and (co)variance accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfordState {
    pub count: usize,
    pub mean: Vec<f64>,
    m2: SecondMoment,
}

impl WelfordState {
    pub fn new(dim: usize, kind: MassMatrixKind) -> Self {
        let m2 = match kind {
            MassMatrixKind::Diagonal => SecondMoment::Diagonal(vec![0.0; dim]),
            MassMatrixKind::Dense => SecondMoment::Dense(DMatrix::zeros(dim, dim)),
        };
        WelfordState {
            count: 0,
            mean: vec![0.0; dim],
            m2,
        }
    }

    pub fn kind(&self) -> MassMatrixKind {
        match self.m2 {
            SecondMoment::Diagonal(_) => MassMatrixKind::Diagonal,
            SecondMoment::Dense(_) => MassMatrixKind::Dense,
        }
    }

    pub fn reset(&self) -> Self {
        WelfordState::new(self.mean.len(), self.kind())
    }

    /// Unbiased sample (co)variance matrix, `m2 / (count - 1)`.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        if self.count < 2 {
            return Err(Error::InsufficientSamples {
                required: 2,
                actual: self.count,
            });
        }
        let denom = (self.count - 1) as f64;
        Ok(match &self.m2 {
            SecondMoment::Diagonal(v) => DMatrix::from_diagonal(&DVector::from_iterator(
                v.len(),
                v.iter().map(|m| m / denom),
            )),
            SecondMoment::Dense(m) => m / denom,
        })
    }
}

pub fn welford_update(state: &WelfordState, sample: &[f64]) -> Result<WelfordState> {
    check_dim(state.mean.len(), sample.len())?;
    let count = state.count + 1;
    let n = count as f64;
    let delta: Vec<f64> = sample.iter().zip(&state.mean).map(|(x, m)| x - m).collect();
    let mean: Vec<f64> = state
        .mean
        .iter()
        .zip(&delta)
        .map(|(m, d)| m + d / n)
        .collect();
    let delta_after: Vec<f64> = sample.iter().zip(&mean).map(|(x, m)| x - m).collect();
    let m2 = match &state.m2 {
        SecondMoment::Diagonal(v) => SecondMoment::Diagonal(
            v.iter()
                .zip(delta.iter().zip(&delta_after))
                .map(|(m, (d, e))| m + d * e)
                .collect(),
        ),
        SecondMoment::Dense(m) => {
            let d = DVector::from_vec(delta);
            let e = DVector::from_vec(delta_after);
            SecondMoment::Dense(m + d * e.transpose())
        }
    };
    Ok(WelfordState { count, mean, m2 })
}

/// Builds a metric whose inverse mass is the (optionally regularized)
/// sample covariance: `n/(n+5) * S + 1e-3 * 5/(n+5) * I`.
pub fn welford_finalize(state: &WelfordState, regularize: bool) -> Result<Metric> {
    let mut cov = state.covariance()?;
    if regularize {
        let n = state.count as f64;
        let shrink = n / (n + 5.0);
        let jitter = 1e-3 * 5.0 / (n + 5.0);
        cov *= shrink;
        for i in 0..cov.nrows() {
            cov[(i, i)] += jitter;
        }
    }
    match state.kind() {
        MassMatrixKind::Diagonal => Metric::diagonal(cov.diagonal().iter().copied().collect()),
        MassMatrixKind::Dense => Metric::dense((&cov + cov.transpose()) * 0.5),
    }
}

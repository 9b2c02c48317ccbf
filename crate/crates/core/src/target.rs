//! The model contract: an un-normalized log density and its gradient over a
//! flat parameter vector.

use crate::error::{check_dim, Result};

/// Un-normalized log density with a caller-supplied gradient.
///
/// `logdensity` may return `-inf` for zero-probability regions but never `+inf`.
pub trait LogDensity: Send + Sync {
    fn dim(&self) -> usize;

    fn logdensity(&self, position: &[f64]) -> f64;

    fn gradient(&self, position: &[f64]) -> Vec<f64>;

    fn logdensity_and_gradient(&self, position: &[f64]) -> (f64, Vec<f64>) {
        (self.logdensity(position), self.gradient(position))
    }
}

impl<T: LogDensity + ?Sized> LogDensity for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn logdensity(&self, position: &[f64]) -> f64 {
        (**self).logdensity(position)
    }
    fn gradient(&self, position: &[f64]) -> Vec<f64> {
        (**self).gradient(position)
    }
    fn logdensity_and_gradient(&self, position: &[f64]) -> (f64, Vec<f64>) {
        (**self).logdensity_and_gradient(position)
    }
}

impl<T: LogDensity + ?Sized> LogDensity for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn logdensity(&self, position: &[f64]) -> f64 {
        (**self).logdensity(position)
    }
    fn gradient(&self, position: &[f64]) -> Vec<f64> {
        (**self).gradient(position)
    }
    fn logdensity_and_gradient(&self, position: &[f64]) -> (f64, Vec<f64>) {
        (**self).logdensity_and_gradient(position)
    }
}

/// A target assembled from two closures.
pub struct Target<L, G> {
    dim: usize,
    logdensity: L,
    gradient: G,
}

impl<L, G> Target<L, G>
where
    L: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(dim: usize, logdensity: L, gradient: G) -> Self {
        assert!(dim > 0, "target dimension must be positive");
        Target {
            dim,
            logdensity,
            gradient,
        }
    }
}

impl<L, G> LogDensity for Target<L, G>
where
    L: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn logdensity(&self, position: &[f64]) -> f64 {
        (self.logdensity)(position)
    }
    fn gradient(&self, position: &[f64]) -> Vec<f64> {
        (self.gradient)(position)
    }
}

/// Largest discrepancy between the analytic gradient and central finite
/// differences at `position`, measured as `|fd - g| / max(1, |g|)`.
///
/// The step for coordinate `i` is `1e-5 * (1 + |x_i|)`.
pub fn gradient_error<T: LogDensity + ?Sized>(target: &T, position: &[f64]) -> Result<f64> {
    check_dim(target.dim(), position.len())?;
    let grad = target.gradient(position);
    check_dim(target.dim(), grad.len())?;
    let mut x = position.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let h = 1e-5 * (1.0 + position[i].abs());
        x[i] = position[i] + h;
        let up = target.logdensity(&x);
        x[i] = position[i] - h;
        let down = target.logdensity(&x);
        x[i] = position[i];
        let fd = (up - down) / (2.0 * h);
        let err = (fd - grad[i]).abs() / grad[i].abs().max(1.0);
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
    }
    Ok(worst)
}

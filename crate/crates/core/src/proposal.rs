//! Metropolis-Hastings acceptance atoms.
//!
//! Energies follow one convention throughout the crate: energy is the negative
//! log density (plus kinetic energy where momenta exist), so the log
//! acceptance ratio of a move is `prev_energy - new_energy`.

use crate::error::{Error, Result};
use crate::rng::RngKey;

/// Log acceptance ratio for a symmetric proposal.
///
/// A NaN or `+inf` proposal energy yields `-inf`, i.e. certain rejection.
pub fn safe_energy_diff(prev_energy: f64, new_energy: f64) -> f64 {
    if new_energy.is_nan() || new_energy == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    let diff = prev_energy - new_energy;
    if diff.is_nan() {
        f64::NEG_INFINITY
    } else {
        diff
    }
}

/// Log acceptance ratio for an asymmetric proposal with forward density
/// `q(new | prev)` and reverse density `q(prev | new)`.
pub fn asymmetric_log_ratio(
    prev_energy: f64,
    new_energy: f64,
    log_q_reverse: f64,
    log_q_forward: f64,
) -> f64 {
    let ratio = safe_energy_diff(prev_energy, new_energy) + (log_q_reverse - log_q_forward);
    if ratio.is_nan() {
        f64::NEG_INFINITY
    } else {
        ratio
    }
}

/// `min(1, exp(log_ratio))`, with NaN mapped to 0.
pub fn acceptance_probability(log_ratio: f64) -> f64 {
    if log_ratio.is_nan() {
        0.0
    } else if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinomialOutcome<S> {
    pub chosen: S,
    pub accepted: bool,
    pub p_accept: f64,
}

/// Classic accept/reject: accept iff `uniform(key) < min(1, exp(log_ratio))`.
pub fn binomial_accept<S>(
    key: RngKey,
    log_ratio: f64,
    proposed: S,
    current: S,
) -> BinomialOutcome<S> {
    let p_accept = acceptance_probability(log_ratio);
    let accepted = key.uniform() < p_accept;
    BinomialOutcome {
        chosen: if accepted { proposed } else { current },
        accepted,
        p_accept,
    }
}

const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Persistent slice variable `u` in `(-1, 1)` for nonreversible acceptance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceVariable(f64);

impl SliceVariable {
    pub fn new(u: f64) -> Result<Self> {
        if u.is_finite() && u.abs() < 1.0 {
            Ok(SliceVariable(u))
        } else {
            Err(Error::invalid("slice", format!("|u| must be < 1, got {u}")))
        }
    }

    /// Uniform draw on `(-1, 1)`.
    pub fn random(key: RngKey) -> Self {
        SliceVariable::clamped(2.0 * key.uniform() - 1.0)
    }

    fn clamped(u: f64) -> Self {
        SliceVariable(u.clamp(-BELOW_ONE, BELOW_ONE))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceOutcome<S> {
    pub chosen: S,
    pub accepted: bool,
    pub slice: SliceVariable,
}

/// Nonreversible slice acceptance: accept iff `log|u| < log_ratio`, then
/// rescale `u` by `exp(-log_ratio)` so that `|u| * exp(-energy)` is preserved.
pub fn nonreversible_slice_accept<S>(
    slice: SliceVariable,
    log_ratio: f64,
    proposed: S,
    current: S,
) -> SliceOutcome<S> {
    let accepted = slice.0.abs().ln() < log_ratio;
    if accepted {
        SliceOutcome {
            chosen: proposed,
            accepted,
            slice: SliceVariable::clamped(slice.0 * (-log_ratio).exp()),
        }
    } else {
        SliceOutcome {
            chosen: current,
            accepted,
            slice,
        }
    }
}

/// Translates `u` by `shift` on the circle `[-1, 1)`.
pub fn shift_slice(slice: SliceVariable, shift: f64) -> SliceVariable {
    SliceVariable::clamped((slice.0 + 1.0 + shift).rem_euclid(2.0) - 1.0)
}

/// Random translation by `2 * jitter * uniform(key)`; preserves the
/// Uniform(-1, 1) marginal of `u`.
pub fn perturb_slice(key: RngKey, slice: SliceVariable, jitter: f64) -> SliceVariable {
    if jitter == 0.0 {
        return slice;
    }
    shift_slice(slice, 2.0 * jitter * key.uniform())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn energy_diff_examples() {
        assert_eq!(safe_energy_diff(1.0, 1.0), 0.0);
        assert_eq!(safe_energy_diff(2.0, 1.0), 1.0);
        assert_eq!(safe_energy_diff(0.0, f64::NAN), f64::NEG_INFINITY);
        assert_eq!(safe_energy_diff(0.0, f64::INFINITY), f64::NEG_INFINITY);
    }

    #[test]
    fn asymmetric_examples() {
        assert_eq!(asymmetric_log_ratio(0.0, 0.0, -1.0, -2.0), 1.0);
        assert_eq!(
            asymmetric_log_ratio(3.0, 1.5, -0.7, -0.7),
            safe_energy_diff(3.0, 1.5)
        );
        assert_eq!(
            asymmetric_log_ratio(0.0, f64::NAN, 0.0, 0.0),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn binomial_branches() {
        for key in RngKey::new(1).split(200) {
            let out = binomial_accept(key, 0.3, 1, 0);
            assert!(out.accepted && out.p_accept == 1.0 && out.chosen == 1);
            let out = binomial_accept(key, f64::NEG_INFINITY, 1, 0);
            assert!(!out.accepted && out.p_accept == 0.0 && out.chosen == 0);
        }
    }

    #[test]
    fn binomial_frequency() {
        let keys = RngKey::new(2).split(100_000);
        let hits = keys
            .iter()
            .filter(|k| binomial_accept(**k, 0.5f64.ln(), (), ()).accepted)
            .count();
        let freq = hits as f64 / keys.len() as f64;
        assert!((freq - 0.5).abs() < 0.01, "{freq}");
    }

    #[test]
    fn slice_examples() {
        let zero = SliceVariable::new(0.0).unwrap();
        assert!(nonreversible_slice_accept(zero, -50.0, 1, 0).accepted);
        assert!(!nonreversible_slice_accept(zero, f64::NEG_INFINITY, 1, 0).accepted);

        let half = SliceVariable::new(0.5).unwrap();
        let out = nonreversible_slice_accept(half, 0.25f64.ln(), 1, 0);
        assert!(!out.accepted);
        assert_eq!(out.chosen, 0);
        assert_eq!(out.slice.value(), 0.5);

        let out = nonreversible_slice_accept(half, 0.75f64.ln(), 1, 0);
        assert!(out.accepted);
        assert!((out.slice.value() - 0.5 / 0.75).abs() < 1e-15);
    }

    #[test]
    fn slice_rejects_out_of_range() {
        assert!(SliceVariable::new(1.0).is_err());
        assert!(SliceVariable::new(-1.2).is_err());
        assert!(SliceVariable::new(f64::NAN).is_err());
    }

    #[test]
    fn shift_wraps() {
        let u = SliceVariable::new(0.9).unwrap();
        assert!((shift_slice(u, 0.3).value() + 0.8).abs() < 1e-12);
        assert_eq!(perturb_slice(RngKey::new(3), u, 0.0), u);
    }

    #[test]
    fn perturbation_keeps_uniform_marginal() {
        let mut u = SliceVariable::new(0.99).unwrap();
        let root = RngKey::new(4);
        let mut draws: Vec<f64> = (0..100_000u64)
            .map(|i| {
                u = perturb_slice(root.child(i), u, 1.0);
                u.value()
            })
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = draws.len() as f64;
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let cdf = (x + 1.0) / 2.0;
                (cdf - i as f64 / n)
                    .abs()
                    .max(((i + 1) as f64 / n - cdf).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS = {ks}");
    }

    proptest! {
        #[test]
        fn slice_stays_open(u in -0.999_999f64..0.999_999, lr in -50.0f64..50.0, shift in 0.0f64..2.0) {
            let s = SliceVariable::new(u).unwrap();
            let out = nonreversible_slice_accept(s, lr, (), ());
            prop_assert!(out.slice.value().abs() < 1.0);
            prop_assert!(shift_slice(out.slice, shift).value().abs() < 1.0);
        }

        #[test]
        fn binomial_indicator_is_exact(seed in any::<u64>(), lr in -10.0f64..2.0) {
            let key = RngKey::new(seed);
            let out = binomial_accept(key, lr, (), ());
            prop_assert_eq!(out.accepted, key.uniform() < lr.exp().min(1.0));
        }
    }
}

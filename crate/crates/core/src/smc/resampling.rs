use crate::error::{Error, Result};
use crate::rng::RngKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResampleMethod {
    Multinomial,
    #[default]
    Systematic,
    Stratified,
    Residual,
}

impl std::str::FromStr for ResampleMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multinomial" => Ok(ResampleMethod::Multinomial),
            "systematic" => Ok(ResampleMethod::Systematic),
            "stratified" => Ok(ResampleMethod::Stratified),
            "residual" => Ok(ResampleMethod::Residual),
            other => Err(Error::invalid(
                "resample_method",
                format!("unknown method `{other}` (expected multinomial, systematic, stratified or residual)"),
            )),
        }
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalized weights from log weights.
pub fn normalize(log_weights: &[f64]) -> Result<Vec<f64>> {
    let lse = log_sum_exp(log_weights);
    if !lse.is_finite() {
        return Err(Error::Degenerate(format!(
            "log weights do not normalize (logsumexp = {lse})"
        )));
    }
    Ok(log_weights.iter().map(|w| (w - lse).exp()).collect())
}

/// Indices into the particle set, `n` of them, drawn so that index `i`
/// appears `n * w_i` times in expectation.
pub fn resample(
    key: RngKey,
    log_weights: &[f64],
    n: usize,
    method: ResampleMethod,
) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let weights = normalize(log_weights)?;
    Ok(match method {
        ResampleMethod::Multinomial => multinomial(key, &weights, n),
        ResampleMethod::Systematic => {
            let u = key.uniform();
            let points: Vec<f64> = (0..n).map(|i| i as f64 + u).collect();
            sweep(&weights, &points, n)
        }
        ResampleMethod::Stratified => {
            let points: Vec<f64> = key
                .uniforms(n)
                .iter()
                .enumerate()
                .map(|(i, u)| i as f64 + u)
                .collect();
            sweep(&weights, &points, n)
        }
        ResampleMethod::Residual => residual(key, &weights, n),
    })
}

/// Inverse-CDF lookup of ascending `points` on the `[0, n)` scale.
fn sweep(weights: &[f64], points: &[f64], n: usize) -> Vec<usize> {
    let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
    let mut out = Vec::with_capacity(points.len());
    let mut j = 0;
    let mut cdf = weights[0] * n as f64;
    for &p in points {
        while p >= cdf && j < last {
            j += 1;
            cdf += weights[j] * n as f64;
        }
        out.push(j);
    }
    out
}

/// I.i.d. draws. The CDF is laid out in descending-weight order so that the
/// output depends on particle weights, not on their positions in the array.
fn multinomial(key: RngKey, weights: &[f64], n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut cdf = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &i in &order {
        acc += weights[i];
        cdf.push(acc);
    }
    let last = order.iter().rposition(|&i| weights[i] > 0.0).unwrap_or(0);
    key.uniforms(n)
        .into_iter()
        .map(|u| {
            let pos = cdf.partition_point(|&c| c <= u * acc).min(last);
            order[pos]
        })
        .collect()
}

/// Deterministic `floor(n w_i)` copies, remainder drawn multinomially from
/// the fractional parts.
fn residual(key: RngKey, weights: &[f64], n: usize) -> Vec<usize> {
    let scaled: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut out = Vec::with_capacity(n);
    for (i, s) in scaled.iter().enumerate() {
        out.extend(std::iter::repeat_n(i, s.floor() as usize));
    }
    out.truncate(n);
    let remaining = n - out.len();
    if remaining > 0 {
        let fractional: Vec<f64> = scaled.iter().map(|s| s - s.floor()).collect();
        let total: f64 = fractional.iter().sum();
        if total > 0.0 {
            let normalized: Vec<f64> = fractional.iter().map(|f| f / total).collect();
            out.extend(multinomial(key, &normalized, remaining));
        } else {
            out.extend(multinomial(key, weights, remaining));
        }
    }
    out
}

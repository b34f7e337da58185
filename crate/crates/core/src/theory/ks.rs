use crate::error::{Error, Result};

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `samples` and `Exponential(rate)`.
pub fn ks_exponential(samples: &[f64], rate: f64) -> Result<f64> {
    if rate.is_nan() || rate <= 0.0 {
        return Err(Error::Argument("rate must be positive".into()));
    }
    ks_continuous(
        samples,
        |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() },
    )
}

/// Kolmogorov-Smirnov distance between the empirical distribution of step
/// counts (support `1, 2, ...`) and `Geometric(p)`, evaluated at every
/// integer in the sample's range.
pub fn ks_geometric(samples: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Argument("p must lie in (0, 1]".into()));
    }
    if samples.is_empty() {
        return Err(Error::Argument("empty sample".into()));
    }
    if samples.iter().any(|k| *k < 1.0 || k.fract() != 0.0) {
        return Err(Error::Argument("step counts must be integers >= 1".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let max = *sorted.last().expect("nonempty") as u64;
    let mut idx = 0;
    let mut d: f64 = 0.0;
    for k in 1..=max {
        while idx < sorted.len() && sorted[idx] <= k as f64 {
            idx += 1;
        }
        let model = 1.0 - (1.0 - p).powi(k as i32);
        d = d.max((idx as f64 / n - model).abs());
    }
    Ok(d)
}

fn ks_continuous(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("empty sample".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max))
}

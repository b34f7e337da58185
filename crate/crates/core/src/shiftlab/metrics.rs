use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::TrainedModel;
use crate::recourse::RecourseSet;

/// Fraction of `cf1`'s recourses that `m2` classifies as negative.
pub fn invalidation_fraction(cf1: &RecourseSet, m2: &TrainedModel) -> Result<f64> {
    if cf1.is_empty() {
        return Err(Error::UndefinedMetric(
            "invalidation of an empty recourse set".into(),
        ));
    }
    let flags = invalidation_flags(cf1, m2)?;
    Ok(flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64)
}

/// Per record: does `m2` reject the recourse?
pub fn invalidation_flags(cf1: &RecourseSet, m2: &TrainedModel) -> Result<Vec<bool>> {
    cf1.records()
        .iter()
        .map(|r| Ok(!m2.predict(r.recourse())?.is_positive()))
        .collect()
}

/// Invalidation rate per cost quartile and the cost/invalidation rank
/// correlation, pooled over several second models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TradeoffCheck {
    /// Cheapest quartile first.
    pub quartile_rates: [f64; 4],
    /// Spearman correlation between cost and each record's mean
    /// invalidation indicator; NaN if every record has the same mean.
    pub spearman: f64,
}

/// Pools `(cost, invalidated)` over every draw in `m2_draws`.
///
/// Records are sorted by cost (ties keep input order) and cut into four
/// groups whose sizes differ by at most one.
pub fn cost_invalidation_check(
    cf1: &RecourseSet,
    m2_draws: &[TrainedModel],
) -> Result<TradeoffCheck> {
    if m2_draws.is_empty() {
        return Err(Error::Argument("need at least one model draw".into()));
    }
    let costs: Vec<f64> = cf1.records().iter().map(|r| r.cost()).collect();
    let mut rates = vec![0.0; costs.len()];
    for m2 in m2_draws {
        for (r, f) in rates.iter_mut().zip(invalidation_flags(cf1, m2)?) {
            if f {
                *r += 1.0;
            }
        }
    }
    rates.iter_mut().for_each(|r| *r /= m2_draws.len() as f64);
    tradeoff(&costs, &rates)
}

/// [`cost_invalidation_check`] on precomputed per-record costs and mean
/// invalidation indicators.
pub fn tradeoff(costs: &[f64], rates: &[f64]) -> Result<TradeoffCheck> {
    if costs.len() != rates.len() {
        return Err(Error::Dimension {
            expected: costs.len(),
            got: rates.len(),
        });
    }
    if costs.len() < 4 {
        return Err(Error::DegenerateMetric(format!(
            "{} recourses cannot fill four cost quartiles",
            costs.len()
        )));
    }
    if costs.iter().all(|c| *c == costs[0]) {
        return Err(Error::DegenerateMetric(
            "all recourse costs are identical".into(),
        ));
    }
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|a, b| costs[*a].total_cmp(&costs[*b]));
    let n = costs.len();
    let mut quartile_rates = [0.0; 4];
    for (q, rate) in quartile_rates.iter_mut().enumerate() {
        let group = &order[q * n / 4..(q + 1) * n / 4];
        *rate = group.iter().map(|&i| rates[i]).sum::<f64>() / group.len() as f64;
    }
    Ok(TradeoffCheck {
        quartile_rates,
        spearman: spearman(costs, rates),
    })
}

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "spearman needs paired samples");
    pearson(&ranks(xs), &ranks(ys))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab / (saa * sbb).sqrt()
}

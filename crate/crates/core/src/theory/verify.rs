use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{BoundInput, BoundKind};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{numeric_gradient, parallel_perturb, TrainedModel};
use crate::recourse::{markov_walk, CostFn, MarkovParams, MarkovWalk, StopRule};
use crate::seed;

const MIN_NEGATIVES: usize = 100;
const GRADIENT_STEP: f64 = 1e-5;

/// Settings shared by every `delta_m` in one verification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyParams {
    pub rho: f64,
    /// Walk step on continuous schemas.
    pub step: f64,
    /// Number of walks; start points cycle through the model's negatives.
    pub n_trials: usize,
    pub seed: u64,
}

impl VerifyParams {
    pub fn new(rho: f64, n_trials: usize, seed: u64) -> Self {
        VerifyParams {
            rho,
            step: 1e-3,
            n_trials,
            seed,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// Linear model, parallel boundary shift: empirical should equal the bound.
    Exactness,
    /// Nonlinear model, output-bias shift: empirical should not fall below
    /// the linear bound.
    Comparison,
}

/// Outcome for one `(rho, delta_m)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub rho: f64,
    pub delta_m: f64,
    pub kind: BoundKind,
    pub mode: CheckMode,
    pub empirical_q: f64,
    pub theoretical_q: f64,
    pub abs_gap: f64,
    /// Recourses the empirical fraction is taken over.
    pub n: usize,
}

impl BoundCheck {
    pub const CSV_HEADER: [&'static str; 6] = [
        "rho",
        "delta_m",
        "empirical_Q",
        "theoretical_Q",
        "abs_gap",
        "n",
    ];

    /// `abs_gap <= tolerance` in exactness mode,
    /// `empirical_q >= theoretical_q - tolerance` in comparison mode.
    pub fn passes(&self, tolerance: f64) -> bool {
        match self.mode {
            CheckMode::Exactness => self.abs_gap <= tolerance,
            CheckMode::Comparison => self.empirical_q >= self.theoretical_q - tolerance,
        }
    }

    pub fn write_csv<W: Write>(checks: &[BoundCheck], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for c in checks {
            w.write_record([
                c.rho.to_string(),
                c.delta_m.to_string(),
                c.empirical_q.to_string(),
                c.theoretical_q.to_string(),
                c.abs_gap.to_string(),
                c.n.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<bounds csv>", e))?;
        Ok(())
    }
}

fn kind_of(data: &Dataset) -> BoundKind {
    if data.schema().is_discrete() {
        BoundKind::Ordinal
    } else {
        BoundKind::Continuous
    }
}

/// Markov walks from the negatives of `m` in `data`, `params.n_trials` of
/// them, each with its own derived seed. Continuous schemas stop at rate
/// `rho` per unit of distance walked; discrete schemas stop with
/// probability `rho` per grid step. Walks that fail to stop are dropped.
pub fn sample_walks(
    m: &TrainedModel,
    data: &Dataset,
    params: &VerifyParams,
) -> Result<Vec<MarkovWalk>> {
    if !m.schema().is_compatible(data.schema()) {
        return Err(Error::Argument("model and data schemas differ".into()));
    }
    let kind = kind_of(data);
    BoundInput {
        rho: params.rho,
        delta_m: 0.0,
        kind,
    }
    .validate()?;
    let negatives: Vec<usize> = (0..data.len())
        .filter(|&i| m.score(data.row(i)) < 0.0)
        .collect();
    if negatives.len() < MIN_NEGATIVES {
        return Err(Error::InsufficientSample {
            needed: MIN_NEGATIVES,
            got: negatives.len(),
        });
    }
    let stop = match kind {
        BoundKind::Continuous => StopRule::Rate(params.rho),
        BoundKind::Ordinal => StopRule::PerStep(params.rho),
    };
    let walk = MarkovParams::new(params.step, stop);
    let walks: Vec<Option<MarkovWalk>> = (0..params.n_trials)
        .into_par_iter()
        .map(|t| {
            let x = data.row(negatives[t % negatives.len()]);
            markov_walk(m, x, CostFn::L2, &walk, seed::derive(params.seed, t as u64))
        })
        .collect::<Result<_>>()?;
    Ok(walks.into_iter().flatten().collect())
}

/// [`verify_bounds`] for a single `delta_m` with the default walk step.
pub fn verify_bound(
    m1: &TrainedModel,
    data: &Dataset,
    rho: f64,
    delta_m: f64,
    n_trials: usize,
    seed: u64,
) -> Result<BoundCheck> {
    let checks = verify_bounds(
        m1,
        data,
        &VerifyParams::new(rho, n_trials, seed),
        &[delta_m],
    )?;
    Ok(checks[0])
}

/// Builds one set of Markov recourses for `m1` and, for each `delta_m`,
/// the fraction a moved model rejects next to the closed-form bound.
///
/// Linear `m1` is moved with [`parallel_perturb`]. On ordinal data
/// `delta_m` counts grid steps of the feature the walk moves along.
/// Nonlinear `m1` has its output bias lowered by `delta_m` times the mean
/// score gained per unit of walk at the crossing points, which moves the
/// boundary by about `delta_m` locally.
pub fn verify_bounds(
    m1: &TrainedModel,
    data: &Dataset,
    params: &VerifyParams,
    deltas: &[f64],
) -> Result<Vec<BoundCheck>> {
    let kind = kind_of(data);
    for &delta_m in deltas {
        BoundInput {
            rho: params.rho,
            delta_m,
            kind,
        }
        .validate()?;
    }
    let walks = sample_walks(m1, data, params)?;
    if walks.is_empty() {
        return Err(Error::UndefinedMetric("no walk produced a recourse".into()));
    }
    let mode = if m1.is_linear() {
        CheckMode::Exactness
    } else {
        CheckMode::Comparison
    };
    let unit = match mode {
        CheckMode::Exactness => linear_unit(m1, kind),
        CheckMode::Comparison => mean_score_rate(m1, &walks, kind)?,
    };
    deltas
        .iter()
        .map(|&delta_m| {
            let m2 = match mode {
                CheckMode::Exactness => parallel_perturb(m1, delta_m * unit)?,
                CheckMode::Comparison => m1.shift_output_bias(-delta_m * unit),
            };
            let invalid = walks
                .iter()
                .filter(|w| m2.score(w.record.recourse()) < 0.0)
                .count();
            let empirical_q = invalid as f64 / walks.len() as f64;
            let theoretical_q = BoundInput {
                rho: params.rho,
                delta_m,
                kind,
            }
            .bound()?;
            Ok(BoundCheck {
                rho: params.rho,
                delta_m,
                kind,
                mode,
                empirical_q,
                theoretical_q,
                abs_gap: (empirical_q - theoretical_q).abs(),
                n: walks.len(),
            })
        })
        .collect()
}

/// Boundary distance covered by one unit of `delta_m`: 1 on continuous
/// data, one grid step of the walk's feature on ordinal data.
fn linear_unit(m: &TrainedModel, kind: BoundKind) -> f64 {
    match kind {
        BoundKind::Continuous => 1.0,
        BoundKind::Ordinal => {
            let w = m.weights().expect("linear");
            let steepest = m
                .schema()
                .actionable()
                .map(|j| w[j].abs())
                .fold(0.0, f64::max);
            steepest / m.weight_norm()
        }
    }
}

/// Mean score change per unit of `delta_m` at the walks' crossing points:
/// the actionable gradient norm (continuous) or the steepest actionable
/// partial derivative (ordinal).
fn mean_score_rate(m: &TrainedModel, walks: &[MarkovWalk], kind: BoundKind) -> Result<f64> {
    let actionable: Vec<usize> = m.schema().actionable().collect();
    let rates: Vec<f64> = walks
        .par_iter()
        .map(|w| {
            let g = numeric_gradient(m, &w.crossing_point, GRADIENT_STEP)?;
            let g = actionable.iter().map(|&j| g[j]);
            Ok(match kind {
                BoundKind::Continuous => g.map(|v| v * v).sum::<f64>().sqrt(),
                BoundKind::Ordinal => g.map(f64::abs).fold(0.0, f64::max),
            })
        })
        .collect::<Result<_>>()?;
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_base;
    use crate::theory::bound_continuous;

    fn line() -> TrainedModel {
        TrainedModel::logistic(vec![1.0, 1.0], -0.5).unwrap()
    }

    #[test]
    fn zero_shift_invalidates_nothing() {
        let data = synth_base(2000, 1).unwrap();
        let c = verify_bound(&line(), &data, 2.0, 0.0, 500, 3).unwrap();
        assert_eq!(c.empirical_q, 0.0);
        assert_eq!(c.theoretical_q, 0.0);
        assert_eq!(c.n, 500);
        assert_eq!(c.mode, CheckMode::Exactness);
    }

    #[test]
    fn exact_on_a_line() {
        let data = synth_base(2000, 2).unwrap();
        let c = verify_bound(&line(), &data, 2.0, 0.25, 4000, 4).unwrap();
        assert!((c.theoretical_q - bound_continuous(2.0, 0.25).unwrap()).abs() < 1e-15);
        assert!(c.abs_gap <= 0.03, "{c:?}");
        assert!(c.passes(0.03));
    }

    #[test]
    fn too_few_negatives() {
        let data = synth_base(150, 2).unwrap();
        let m = TrainedModel::logistic(vec![1.0, 1.0], 10.0).unwrap();
        let e = verify_bound(&m, &data, 2.0, 0.1, 100, 0);
        assert!(matches!(
            e,
            Err(Error::InsufficientSample { needed: 100, .. })
        ));
    }

    #[test]
    fn bad_inputs() {
        let data = synth_base(500, 2).unwrap();
        assert!(verify_bound(&line(), &data, 0.0, 0.1, 10, 0).is_err());
        assert!(verify_bound(&line(), &data, 1.0, -0.1, 10, 0).is_err());
    }

    #[test]
    fn csv_columns() {
        let data = synth_base(1000, 2).unwrap();
        let checks =
            verify_bounds(&line(), &data, &VerifyParams::new(2.0, 200, 0), &[0.1, 0.5]).unwrap();
        let mut buf = Vec::new();
        BoundCheck::write_csv(&checks, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rho,delta_m,empirical_Q,theoretical_Q,abs_gap,n\n"));
        assert_eq!(text.lines().count(), 3);
    }
}

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, Feature, FeatureSchema, Label};
use crate::error::{Error, Result};
use crate::seed;

/// Largest |alpha| accepted for a target shift.
pub const MAX_TARGET_SHIFT: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Relabel the same predictors with `X0 + c X1 >= 0`.
    TargetShift,
    /// Keep the label rule, move the predictor mean to `(alpha, alpha)`.
    PredictorShift,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "target_shift" => Ok(Scenario::TargetShift),
            "predictor_shift" => Ok(Scenario::PredictorShift),
            other => Err(Error::Argument(format!("unknown scenario `{other}`"))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::TargetShift => "target_shift",
            Scenario::PredictorShift => "predictor_shift",
        })
    }
}

/// How a target-shift alpha becomes the coefficient on `X1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMode {
    /// `c = 1 + alpha`, so `alpha = 0` is the unshifted rule.
    #[default]
    OnePlusAlpha,
    /// `c = alpha`.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpec {
    pub scenario: Scenario,
    pub alpha: f64,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub coefficient: CoefficientMode,
}

impl ShiftSpec {
    pub fn new(scenario: Scenario, alpha: f64, n: usize, seed: u64) -> Self {
        ShiftSpec {
            scenario,
            alpha,
            n,
            seed,
            coefficient: CoefficientMode::default(),
        }
    }

    /// The unshifted distribution.
    pub fn base(n: usize, seed: u64) -> Self {
        Self::new(Scenario::TargetShift, 0.0, n, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Argument("sample count must be at least 1".into()));
        }
        if !self.alpha.is_finite() {
            return Err(Error::Argument(format!(
                "alpha must be finite, got {}",
                self.alpha
            )));
        }
        if self.scenario == Scenario::TargetShift && self.alpha.abs() > MAX_TARGET_SHIFT {
            return Err(Error::Argument(format!(
                "target shift alpha {} outside [-{MAX_TARGET_SHIFT}, {MAX_TARGET_SHIFT}]",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Coefficient on `X1` in the label rule.
    pub fn label_coefficient(&self) -> f64 {
        match (self.scenario, self.coefficient) {
            (Scenario::PredictorShift, _) => 1.0,
            (Scenario::TargetShift, CoefficientMode::OnePlusAlpha) => 1.0 + self.alpha,
            (Scenario::TargetShift, CoefficientMode::Raw) => self.alpha,
        }
    }

    pub fn mean_offset(&self) -> f64 {
        match self.scenario {
            Scenario::PredictorShift => self.alpha,
            Scenario::TargetShift => 0.0,
        }
    }
}

fn normal_pairs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    (0..2 * n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Two i.i.d. standard normal predictors, label `+1` iff `X0 + X1 >= 0`.
pub fn synth_base(n: usize, seed: u64) -> Result<Dataset> {
    synth_shift(&ShiftSpec::base(n, seed))
}

/// Draws the shifted distribution described by `spec`.
///
/// Both scenarios share the base generator's predictor stream, so a zero
/// shift reproduces [`synth_base`] exactly for the same seed.
pub fn synth_shift(spec: &ShiftSpec) -> Result<Dataset> {
    spec.validate()?;
    let c = spec.label_coefficient();
    let offset = spec.mean_offset();
    let mut values = normal_pairs(spec.n, spec.seed);
    let mut labels = Vec::with_capacity(spec.n);
    for row in values.chunks_exact_mut(2) {
        row[0] += offset;
        row[1] += offset;
        labels.push(Label::from_score(row[0] + c * row[1]));
    }
    Ok(Dataset::with_parts(
        FeatureSchema::continuous(2),
        values,
        labels,
    ))
}

/// Standard normal predictors with a parabolic boundary: with
/// `u = (X0 + X1)/sqrt 2` and `v = (X0 - X1)/sqrt 2`, label `+1` iff
/// `u + curvature * v^2 >= 0`.
pub fn synth_curved(n: usize, curvature: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Argument("sample count must be at least 1".into()));
    }
    if !curvature.is_finite() {
        return Err(Error::Argument("curvature must be finite".into()));
    }
    let values = normal_pairs(n, seed);
    let labels = values
        .chunks_exact(2)
        .map(|r| {
            let u = (r[0] + r[1]) / std::f64::consts::SQRT_2;
            let v = (r[0] - r[1]) / std::f64::consts::SQRT_2;
            Label::from_score(u + curvature * v * v)
        })
        .collect();
    Ok(Dataset::with_parts(
        FeatureSchema::continuous(2),
        values,
        labels,
    ))
}

/// Two unbounded ordinal predictors `round(spread * Z)`, label `+1` iff
/// `K0 + K1 >= 0`.
pub fn synth_ordinal(n: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Argument("sample count must be at least 1".into()));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::Argument("spread must be positive".into()));
    }
    let mut values = normal_pairs(n, seed);
    for v in &mut values {
        *v = (spread * *v).round();
    }
    let labels = values
        .chunks_exact(2)
        .map(|r| Label::from_score(r[0] + r[1]))
        .collect();
    let schema = FeatureSchema::new(vec![Feature::ordinal("k0"), Feature::ordinal("k1")], "y")?;
    Ok(Dataset::with_parts(schema, values, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal_cdf(x: f64) -> f64 {
        // Abramowitz-Stegun 7.1.26 on erf, |error| < 1.5e-7
        let z = x / std::f64::consts::SQRT_2;
        let t = 1.0 / (1.0 + 0.3275911 * z.abs());
        let poly = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        let erf = 1.0 - poly * (-z * z).exp();
        0.5 * (1.0 + erf.copysign(z))
    }

    #[test]
    fn base_is_balanced_and_centered() {
        let d = synth_base(10_000, 11).unwrap();
        assert!((d.positive_fraction() - 0.5).abs() <= 0.02);
        for j in 0..2 {
            let mean = d.column(j).iter().sum::<f64>() / d.len() as f64;
            assert!(mean.abs() <= 0.05, "feature {j} mean {mean}");
        }
    }

    #[test]
    fn base_is_seed_deterministic() {
        assert_eq!(synth_base(500, 4).unwrap(), synth_base(500, 4).unwrap());
        assert_ne!(synth_base(500, 4).unwrap(), synth_base(500, 5).unwrap());
    }

    #[test]
    fn zero_target_shift_is_base() {
        let spec = ShiftSpec::new(Scenario::TargetShift, 0.0, 1000, 9);
        assert_eq!(synth_shift(&spec).unwrap(), synth_base(1000, 9).unwrap());
    }

    #[test]
    fn target_shift_disagreement_matches_angle() {
        // Oracle: relabel the same predictors under both rules and count.
        let n = 20_000;
        let shifted = synth_shift(&ShiftSpec::new(Scenario::TargetShift, -0.6, n, 21)).unwrap();
        let disagree = shifted
            .rows()
            .filter(|r| Label::from_score(r[0] + r[1]) != Label::from_score(r[0] + 0.4 * r[1]))
            .count() as f64
            / n as f64;
        let base = synth_base(n, 21).unwrap();
        let flipped = base
            .labels()
            .iter()
            .zip(shifted.labels())
            .filter(|(a, b)| a != b)
            .count() as f64
            / n as f64;
        assert_eq!(flipped, disagree);
        let expected = (1f64.atan() - 0.4f64.atan()).abs() / std::f64::consts::PI;
        assert!((expected - 0.1289).abs() < 1e-3);
        assert!(
            (flipped - expected).abs() <= 0.01,
            "{flipped} vs {expected}"
        );
    }

    #[test]
    fn predictor_shift_positive_rate() {
        let d = synth_shift(&ShiftSpec::new(Scenario::PredictorShift, 1.0, 20_000, 5)).unwrap();
        let expected = std_normal_cdf(2.0 / 2f64.sqrt());
        assert!((expected - 0.921).abs() < 1e-3);
        assert!((d.positive_fraction() - expected).abs() <= 0.01);
    }

    #[test]
    fn labels_follow_rule_exactly() {
        let spec = ShiftSpec::new(Scenario::PredictorShift, -0.7, 2000, 3);
        let d = synth_shift(&spec).unwrap();
        for (r, l) in d.rows().zip(d.labels()) {
            assert_eq!(*l, Label::from_score(r[0] + r[1]));
        }
        let spec = ShiftSpec::new(Scenario::TargetShift, 0.3, 2000, 3);
        let d = synth_shift(&spec).unwrap();
        for (r, l) in d.rows().zip(d.labels()) {
            assert_eq!(*l, Label::from_score(r[0] + 1.3 * r[1]));
        }
    }

    #[test]
    fn raw_coefficient_mode() {
        let mut spec = ShiftSpec::new(Scenario::TargetShift, 0.5, 10, 0);
        spec.coefficient = CoefficientMode::Raw;
        assert_eq!(spec.label_coefficient(), 0.5);
    }

    #[test]
    fn argument_checks() {
        assert!("sideways".parse::<Scenario>().is_err());
        assert!(synth_shift(&ShiftSpec::new(Scenario::TargetShift, 0.7, 10, 0)).is_err());
        assert!(synth_shift(&ShiftSpec::new(Scenario::PredictorShift, 3.0, 10, 0)).is_ok());
        assert!(synth_shift(&ShiftSpec::new(Scenario::PredictorShift, f64::NAN, 10, 0)).is_err());
        assert!(synth_base(0, 0).is_err());
    }

    #[test]
    fn ordinal_values_on_grid() {
        let d = synth_ordinal(300, 3.0, 1).unwrap();
        assert!(d.rows().all(|r| r.iter().all(|v| v.fract() == 0.0)));
    }
}

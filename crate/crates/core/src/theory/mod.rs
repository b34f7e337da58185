//! Closed-form invalidation probabilities and their Monte-Carlo checks.
//!
//! A search that stops with constant probability `rho` per unit of distance
//! past the boundary leaves recourses whose boundary distance is
//! `Exponential(rho)`; on a grid, the number of steps past the boundary is
//! `Geometric(rho)`. Moving a linear boundary by `delta_m` then invalidates
//! a fraction [`bound_continuous`] or [`bound_ordinal`] of them.

mod ks;
mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ks::{ks_exponential, ks_geometric};
pub use verify::{sample_walks, verify_bound, verify_bounds, BoundCheck, CheckMode, VerifyParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Continuous,
    Ordinal,
}

impl std::str::FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(BoundKind::Continuous),
            "ordinal" => Ok(BoundKind::Ordinal),
            other => Err(Error::Argument(format!(
                "unknown kind `{other}` (expected continuous or ordinal)"
            ))),
        }
    }
}

/// `rho` and `delta_m` for one bound evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInput {
    pub rho: f64,
    pub delta_m: f64,
    pub kind: BoundKind,
}

impl BoundInput {
    pub fn new(rho: f64, delta_m: f64, kind: BoundKind) -> Result<Self> {
        let input = BoundInput { rho, delta_m, kind };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Argument(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        if !(self.delta_m >= 0.0 && self.delta_m.is_finite()) {
            return Err(Error::Argument(format!(
                "delta_m must be nonnegative, got {}",
                self.delta_m
            )));
        }
        if self.kind == BoundKind::Ordinal {
            if self.rho > 1.0 {
                return Err(Error::Argument(format!(
                    "ordinal rho is a probability, got {}",
                    self.rho
                )));
            }
            if self.delta_m.fract() != 0.0 {
                return Err(Error::Argument(format!(
                    "ordinal delta_m counts grid steps, got {}",
                    self.delta_m
                )));
            }
        }
        Ok(())
    }

    pub fn bound(&self) -> Result<f64> {
        match self.kind {
            BoundKind::Continuous => bound_continuous(self.rho, self.delta_m),
            BoundKind::Ordinal => bound_ordinal(self.rho, self.delta_m),
        }
    }
}

/// `1 - exp(-rho * delta_m)`.
pub fn bound_continuous(rho: f64, delta_m: f64) -> Result<f64> {
    BoundInput {
        rho,
        delta_m,
        kind: BoundKind::Continuous,
    }
    .validate()?;
    Ok(-(-rho * delta_m).exp_m1())
}

/// `1 - (1 - rho)^delta_m` for an integer number of grid steps.
pub fn bound_ordinal(rho: f64, delta_m: f64) -> Result<f64> {
    BoundInput {
        rho,
        delta_m,
        kind: BoundKind::Ordinal,
    }
    .validate()?;
    if rho == 1.0 {
        return Ok(if delta_m == 0.0 { 0.0 } else { 1.0 });
    }
    Ok(-(delta_m * (-rho).ln_1p()).exp_m1())
}

/// Maximum-likelihood rate (continuous distances) or per-step probability
/// (ordinal step counts, support `1, 2, ...`): `1 / mean` in both cases.
pub fn fit_rho(samples: &[f64], kind: BoundKind) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("cannot fit rho to an empty sample".into()));
    }
    let ok = match kind {
        BoundKind::Continuous => samples.iter().all(|d| *d > 0.0 && d.is_finite()),
        BoundKind::Ordinal => samples.iter().all(|k| *k >= 1.0 && k.fract() == 0.0),
    };
    if !ok {
        return Err(Error::Argument(match kind {
            BoundKind::Continuous => "distances must be positive and finite".into(),
            BoundKind::Ordinal => "step counts must be integers >= 1".into(),
        }));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(1.0 / mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Exp, Geometric};

    #[test]
    fn continuous_values() {
        assert_eq!(bound_continuous(3.0, 0.0).unwrap(), 0.0);
        assert!((bound_continuous(2.0, 0.25).unwrap() - 0.39347).abs() < 1e-5);
        assert!((bound_continuous(1.0, 2f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        assert!(bound_continuous(0.0, 1.0).is_err());
        assert!(bound_continuous(-1.0, 1.0).is_err());
    }

    #[test]
    fn ordinal_values() {
        assert_eq!(bound_ordinal(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(bound_ordinal(0.5, 2.0).unwrap(), 0.75);
        assert_eq!(bound_ordinal(0.3, 0.0).unwrap(), 0.0);
        assert_eq!(bound_ordinal(1.0, 4.0).unwrap(), 1.0);
        assert!(bound_ordinal(1.5, 1.0).is_err());
        assert!(bound_ordinal(0.0, 1.0).is_err());
        assert!(bound_ordinal(0.5, 1.5).is_err());
    }

    #[test]
    fn fit_rho_formula_and_errors() {
        assert_eq!(fit_rho(&[0.25, 0.75], BoundKind::Continuous).unwrap(), 2.0);
        assert_eq!(fit_rho(&[1.0, 3.0], BoundKind::Ordinal).unwrap(), 0.5);
        assert!(fit_rho(&[], BoundKind::Continuous).is_err());
        assert!(fit_rho(&[0.0, 1.0], BoundKind::Continuous).is_err());
        assert!(fit_rho(&[0.0, 1.0], BoundKind::Ordinal).is_err());
        assert!(fit_rho(&[1.5], BoundKind::Ordinal).is_err());
    }

    #[test]
    fn fit_rho_recovers_exponential_rate() {
        let mut rng = seed::rng(11);
        let exp = Exp::new(3.0).unwrap();
        let xs: Vec<f64> = (0..5000).map(|_| exp.sample(&mut rng)).collect();
        let r = fit_rho(&xs, BoundKind::Continuous).unwrap();
        assert!((r - 3.0).abs() <= 0.15, "{r}");
    }

    #[test]
    fn fit_rho_recovers_geometric_p() {
        // rand_distr's Geometric counts failures, support 0, 1, ...
        let mut rng = seed::rng(12);
        let g = Geometric::new(0.4).unwrap();
        let ks: Vec<f64> = (0..5000).map(|_| (g.sample(&mut rng) + 1) as f64).collect();
        let p = fit_rho(&ks, BoundKind::Ordinal).unwrap();
        assert!((p / 0.4 - 1.0).abs() <= 0.05, "{p}");
    }

    #[test]
    fn kind_parses() {
        assert_eq!("ordinal".parse::<BoundKind>().unwrap(), BoundKind::Ordinal);
        assert!("discrete".parse::<BoundKind>().is_err());
    }

    proptest! {
        #[test]
        fn continuous_bound_is_monotone(rho in 0.01f64..10.0, d in 0.0f64..3.0, e in 0.001f64..1.0) {
            let q = bound_continuous(rho, d).unwrap();
            prop_assert!((0.0..1.0).contains(&q));
            prop_assert!(bound_continuous(rho, d + e).unwrap() > q);
            prop_assert!(bound_continuous(rho + e, d + e).unwrap() > bound_continuous(rho, d + e).unwrap());
        }

        #[test]
        fn ordinal_bound_is_monotone(rho in 0.01f64..0.6, k in 0u32..30) {
            let d = k as f64;
            let q = bound_ordinal(rho, d).unwrap();
            prop_assert!((0.0..=1.0).contains(&q));
            prop_assert!(bound_ordinal(rho, d + 1.0).unwrap() > q);
            if k > 0 {
                prop_assert!(bound_ordinal((rho + 0.01).min(1.0), d).unwrap() > q);
            }
        }

        #[test]
        fn continuous_bound_saturates(rho in 0.5f64..5.0) {
            prop_assert!(bound_continuous(rho, 100.0 / rho).unwrap() > 1.0 - 1e-12);
        }
    }
}

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{run_pipeline, DataSource, ExperimentConfig};
use crate::dataset::{Scenario, ShiftSpec};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub alpha: f64,
    /// Absent when CF1 is empty.
    pub invalidation_pct: Option<f64>,
    pub cf1_size: usize,
}

impl SweepPoint {
    pub fn write_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "invalidation_pct", "cf1_size"])?;
        for p in points {
            w.write_record([
                p.alpha.to_string(),
                p.invalidation_pct.map_or("NAN".into(), |v| v.to_string()),
                p.cf1_size.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
        Ok(())
    }
}

/// One pipeline run per alpha, with D1 from `base` fixed and D2 drawn from
/// the shifted distribution using D1's size and seed. Runs execute in
/// parallel; output follows the order of `alphas`.
pub fn sensitivity_sweep(
    scenario: Scenario,
    alphas: &[f64],
    base: &ExperimentConfig,
) -> Result<Vec<SweepPoint>> {
    if alphas.is_empty() {
        return Err(Error::Argument("no alphas to sweep".into()));
    }
    let DataSource::Synthetic(d1) = &base.d1 else {
        return Err(Error::Argument(
            "a sweep needs a synthetic d1 source".into(),
        ));
    };
    alphas
        .par_iter()
        .map(|&alpha| {
            let mut cfg = base.clone();
            cfg.d2 = DataSource::Synthetic(ShiftSpec {
                scenario,
                alpha,
                ..d1.clone()
            });
            let r = run_pipeline(&cfg)?;
            Ok(SweepPoint {
                alpha,
                invalidation_pct: r.invalidation_pct,
                cf1_size: r.cf1_size,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recourse::{ArParams, RecourseMethod};

    fn base() -> ExperimentConfig {
        let mut c = ExperimentConfig::synthetic(ShiftSpec::base(400, 3), ShiftSpec::base(400, 3));
        c.cv_folds = 2;
        c.recourse = RecourseMethod::Ar(ArParams::default());
        c
    }

    #[test]
    fn order_and_length_preserved() {
        let alphas = [0.4, 0.0, 0.2];
        let pts = sensitivity_sweep(Scenario::TargetShift, &alphas, &base()).unwrap();
        assert_eq!(pts.iter().map(|p| p.alpha).collect::<Vec<_>>(), alphas);
        assert_eq!(pts[1].invalidation_pct, Some(0.0));
        let mut buf = Vec::new();
        SweepPoint::write_csv(&pts, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("alpha,invalidation_pct,cf1_size\n"));
    }

    #[test]
    fn empty_alphas_rejected() {
        assert!(sensitivity_sweep(Scenario::TargetShift, &[], &base()).is_err());
    }

    #[test]
    fn out_of_range_alpha_rejected() {
        assert!(sensitivity_sweep(Scenario::TargetShift, &[0.9], &base()).is_err());
    }
}

//! The paired-model experiment: train M1 on D1 and M2 on D2 with the same
//! spec, generate recourses (CF1) against M1, and count how many M2 rejects.

mod config;
mod metrics;
mod sweep;

use std::io::Write;

use serde::{Serialize, Serializer};

use crate::dataset::{split, Dataset, Scaler};
use crate::error::{Error, Result};
use crate::models::{cross_val_accuracy, train, TrainedModel};
use crate::recourse::{batch_recourse, RecourseSet};

pub use config::{DataSource, ExperimentConfig, Seeds};
pub use metrics::{
    cost_invalidation_check, invalidation_flags, invalidation_fraction, spearman, tradeoff,
    TradeoffCheck,
};
pub use sweep::{sensitivity_sweep, SweepPoint};

/// Columns of the summary table, in order.
pub const REPORT_COLUMNS: [&str; 6] = [
    "Algorithm",
    "Model",
    "M1 acc",
    "M2 acc",
    "CF1 Size",
    "Invalidation %",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecordOutcome {
    pub cost: f64,
    pub invalidated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvalidationReport {
    pub algorithm: String,
    pub model_kind: String,
    /// Cross-validated accuracy, percent.
    pub m1_cv_acc: f64,
    pub m2_cv_acc: f64,
    /// Accuracy on the held-out rows, percent; absent without a holdout.
    pub m1_holdout_acc: Option<f64>,
    pub m2_holdout_acc: Option<f64>,
    pub cf1_size: usize,
    pub not_found: usize,
    /// Absent when CF1 is empty.
    #[serde(serialize_with = "nan_as_null")]
    pub invalidation_pct: Option<f64>,
    pub per_record: Vec<RecordOutcome>,
}

fn nan_as_null<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) if x.is_finite() => s.serialize_some(x),
        _ => s.serialize_none(),
    }
}

impl InvalidationReport {
    /// Table cells in [`REPORT_COLUMNS`] order; `NAN` when CF1 is empty.
    pub fn row(&self) -> [String; 6] {
        [
            self.algorithm.clone(),
            self.model_kind.clone(),
            format!("{:.2}", self.m1_cv_acc),
            format!("{:.2}", self.m2_cv_acc),
            self.cf1_size.to_string(),
            match self.invalidation_pct {
                Some(p) => format!("{p:.2}"),
                None => "NAN".into(),
            },
        ]
    }

    pub fn write_csv<W: Write>(reports: &[InvalidationReport], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_COLUMNS)?;
        for r in reports {
            w.write_record(r.row())?;
        }
        w.flush().map_err(|e| Error::io("<report csv>", e))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub report: InvalidationReport,
    pub m1: TrainedModel,
    pub m2: TrainedModel,
    pub cf1: RecourseSet,
    /// D1's training portion, the rows CF1 was generated for.
    pub d1_train: Dataset,
}

/// Runs the experiment and returns the report.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<InvalidationReport> {
    Ok(run_pipeline_with(cfg, |_, m2| m2)?.report)
}

/// Runs the experiment; `m2_hook` receives M1 and the trained M2 and
/// returns the model CF1 is checked against.
pub fn run_pipeline_with(
    cfg: &ExperimentConfig,
    m2_hook: impl FnOnce(&TrainedModel, TrainedModel) -> TrainedModel,
) -> Result<PipelineRun> {
    cfg.validate()?;
    let d1 = cfg.d1.load()?;
    let d2 = cfg.d2.load()?;
    if !d1.schema().is_compatible(d2.schema()) {
        return Err(Error::Validation("d1 and d2 schemas differ".into()));
    }
    let (mut d1_train, mut d1_hold) = holdout(&d1, cfg.holdout_fraction, cfg.seeds.data)?;
    let (mut d2_train, mut d2_hold) = holdout(&d2, cfg.holdout_fraction, cfg.seeds.data)?;
    if cfg.standardize {
        let scaler = Scaler::fit(&d1_train);
        d1_train = scaler.apply(&d1_train)?;
        d2_train = scaler.apply(&d2_train)?;
        d1_hold = d1_hold.map(|d| scaler.apply(&d)).transpose()?;
        d2_hold = d2_hold.map(|d| scaler.apply(&d)).transpose()?;
    }

    let spec = cfg.seeded_spec();
    let m1 = train(&spec, &d1_train)?;
    let m2 = m2_hook(&m1, train(&spec, &d2_train)?);
    let m1_cv_acc = cross_val_accuracy(&spec, &d1_train, cfg.cv_folds)?;
    let m2_cv_acc = cross_val_accuracy(&spec, &d2_train, cfg.cv_folds)?;

    let cf1 = batch_recourse(&m1, &d1_train, &cfg.recourse, cfg.cost, cfg.seeds.recourse)?;
    let flags = invalidation_flags(&cf1, &m2)?;
    let invalidated = flags.iter().filter(|f| **f).count();
    let report = InvalidationReport {
        algorithm: cfg.recourse.label().into(),
        model_kind: spec.label(),
        m1_cv_acc,
        m2_cv_acc,
        m1_holdout_acc: d1_hold.as_ref().map(|d| accuracy(&m1, d)).transpose()?,
        m2_holdout_acc: d2_hold.as_ref().map(|d| accuracy(&m2, d)).transpose()?,
        cf1_size: cf1.len(),
        not_found: cf1.not_found(),
        invalidation_pct: (!cf1.is_empty()).then(|| 100.0 * invalidated as f64 / cf1.len() as f64),
        per_record: cf1
            .records()
            .iter()
            .zip(&flags)
            .map(|(r, f)| RecordOutcome {
                cost: r.cost(),
                invalidated: *f,
            })
            .collect(),
    };
    Ok(PipelineRun {
        report,
        m1,
        m2,
        cf1,
        d1_train,
    })
}

fn holdout(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Option<Dataset>)> {
    if fraction == 0.0 {
        return Ok((data.clone(), None));
    }
    let (train, hold) = split(data, fraction, seed)?;
    Ok((train, (!hold.is_empty()).then_some(hold)))
}

fn accuracy(m: &TrainedModel, data: &Dataset) -> Result<f64> {
    let mut hits = 0usize;
    for (x, y) in data.rows().zip(data.labels()) {
        if m.predict(x)? == *y {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Scenario, ShiftSpec};
    use crate::recourse::{ArParams, CostFn, RecourseMethod};

    fn cfg(alpha: f64) -> ExperimentConfig {
        let mut c = ExperimentConfig::synthetic(
            ShiftSpec::base(600, 7),
            ShiftSpec::new(Scenario::TargetShift, alpha, 600, 7),
        );
        c.cv_folds = 3;
        c.recourse = RecourseMethod::Ar(ArParams::default());
        c
    }

    #[test]
    fn same_data_same_model_keeps_every_recourse() {
        let r = run_pipeline(&cfg(0.0)).unwrap();
        assert!(r.cf1_size > 0);
        assert_eq!(r.invalidation_pct, Some(0.0));
    }

    #[test]
    fn negated_m2_rejects_everything() {
        let run = run_pipeline_with(&cfg(0.0), |m1, _| m1.negated()).unwrap();
        assert_eq!(run.report.invalidation_pct, Some(100.0));
        assert_eq!(invalidation_fraction(&run.cf1, &run.m2).unwrap(), 1.0);
    }

    #[test]
    fn accounting_identity() {
        let run = run_pipeline_with(&cfg(0.4), |_, m2| m2).unwrap();
        let negatives = run
            .d1_train
            .rows()
            .filter(|x| !run.m1.predict(x).unwrap().is_positive())
            .count();
        assert_eq!(run.report.cf1_size + run.report.not_found, negatives);
        assert!(run.cf1.all_valid(&run.m1).unwrap());
        let invalid = run
            .report
            .per_record
            .iter()
            .filter(|o| o.invalidated)
            .count();
        let pct = 100.0 * invalid as f64 / run.report.cf1_size as f64;
        assert!((run.report.invalidation_pct.unwrap() - pct).abs() <= 1e-9);
    }

    #[test]
    fn deterministic() {
        let a = run_pipeline(&cfg(0.3)).unwrap();
        let b = run_pipeline(&cfg(0.3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_cf1_prints_nan() {
        let mut c = cfg(0.0);
        c.recourse = RecourseMethod::Ar(ArParams {
            grid_percentiles: vec![0.0],
            max_changed_features: 1,
            ..ArParams::default()
        });
        c.cost = CostFn::L1;
        let r = run_pipeline(&c).unwrap();
        assert_eq!(r.cf1_size, 0);
        assert_eq!(r.invalidation_pct, None);
        let mut buf = Vec::new();
        InvalidationReport::write_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "Algorithm,Model,M1 acc,M2 acc,CF1 Size,Invalidation %"
        );
        assert!(lines.next().unwrap().ends_with(",0,NAN"));
        assert!(r.to_json().unwrap().contains("\"invalidation_pct\": null"));
    }

    #[test]
    fn invalidation_fraction_of_empty_set_is_undefined() {
        let mut c = cfg(0.0);
        c.recourse = RecourseMethod::Ar(ArParams {
            grid_percentiles: vec![0.0],
            max_changed_features: 1,
            ..ArParams::default()
        });
        let run = run_pipeline_with(&c, |_, m| m).unwrap();
        assert!(matches!(
            invalidation_fraction(&run.cf1, &run.m2),
            Err(Error::UndefinedMetric(_))
        ));
    }
}

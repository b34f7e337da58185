use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dataset::{load_csv, synth_shift, Dataset, FeatureSchema, ShiftSpec};
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::recourse::{CostFn, RecourseMethod};

/// Where a dataset comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        schema: FeatureSchema,
    },
    Synthetic(ShiftSpec),
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Csv { path, schema } => load_csv(path, schema),
            DataSource::Synthetic(spec) => synth_shift(spec),
        }
    }

    pub fn synthetic(&self) -> Option<&ShiftSpec> {
        match self {
            DataSource::Synthetic(s) => Some(s),
            DataSource::Csv { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    /// Holdout splits.
    pub data: u64,
    /// Replaces `model_spec.seed` for both models.
    pub model: u64,
    /// Per-point generator seeds.
    pub recourse: u64,
}

/// One run: two datasets, one model spec, one recourse generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d1: DataSource,
    pub d2: DataSource,
    #[serde(default = "ModelSpec::logistic_regression")]
    pub model_spec: ModelSpec,
    #[serde(default)]
    pub recourse: RecourseMethod,
    #[serde(default)]
    pub cost: CostFn,
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    /// Standardize continuous features with statistics of D1's training
    /// portion; D2 uses the same transform.
    #[serde(default)]
    pub standardize: bool,
}

fn default_holdout() -> f64 {
    0.2
}

fn default_folds() -> usize {
    10
}

impl ExperimentConfig {
    /// Synthetic D1 and D2 with default model, generator and seeds.
    pub fn synthetic(d1: ShiftSpec, d2: ShiftSpec) -> Self {
        ExperimentConfig {
            d1: DataSource::Synthetic(d1),
            d2: DataSource::Synthetic(d2),
            model_spec: ModelSpec::logistic_regression(),
            recourse: RecourseMethod::default(),
            cost: CostFn::default(),
            holdout_fraction: default_holdout(),
            seeds: Seeds::default(),
            cv_folds: default_folds(),
            standardize: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks everything that can be checked without loading data.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.holdout_fraction) {
            return Err(Error::Validation(format!(
                "holdout_fraction must lie in [0, 0.5], got {}",
                self.holdout_fraction
            )));
        }
        if self.cv_folds < 2 {
            return Err(Error::Validation(format!(
                "cv_folds must be at least 2, got {}",
                self.cv_folds
            )));
        }
        self.model_spec
            .validate()
            .map_err(|e| Error::Validation(format!("model_spec: {e}")))?;
        self.recourse
            .validate()
            .map_err(|e| Error::Validation(format!("recourse: {e}")))?;
        for (name, src) in [("d1", &self.d1), ("d2", &self.d2)] {
            if let Some(spec) = src.synthetic() {
                spec.validate()
                    .map_err(|e| Error::Validation(format!("{name}: {e}")))?;
            }
        }
        if let (DataSource::Csv { schema: a, .. }, DataSource::Csv { schema: b, .. }) =
            (&self.d1, &self.d2)
        {
            if !a.is_compatible(b) {
                return Err(Error::Validation("d1 and d2 schemas differ".into()));
            }
        }
        Ok(())
    }

    /// Model spec with the configured model seed.
    pub fn seeded_spec(&self) -> ModelSpec {
        self.model_spec.clone().with_seed(self.seeds.model)
    }
}

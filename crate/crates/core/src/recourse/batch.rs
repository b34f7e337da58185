use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    ar_search, causal_recourse, cfe_search, markov_search, ArParams, CausalParams, CfeParams,
    CostFn, MarkovParams, RecourseRecord,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::TrainedModel;
use crate::seed;

/// A generator together with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum RecourseMethod {
    Cfe(CfeParams),
    Ar(ArParams),
    Causal(CausalParams),
    Markov(MarkovParams),
}

impl Default for RecourseMethod {
    fn default() -> Self {
        RecourseMethod::Cfe(CfeParams::default())
    }
}

impl RecourseMethod {
    pub fn label(&self) -> &'static str {
        match self {
            RecourseMethod::Cfe(_) => "CFE",
            RecourseMethod::Ar(_) => "AR",
            RecourseMethod::Causal(_) => "Causal",
            RecourseMethod::Markov(_) => "Markov",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RecourseMethod::Cfe(p) => p.validate(),
            RecourseMethod::Markov(p) => p.validate(),
            RecourseMethod::Ar(p) => {
                if p.max_changed_features == 0 {
                    return Err(Error::Argument(
                        "max_changed_features must be at least 1".into(),
                    ));
                }
                Ok(())
            }
            RecourseMethod::Causal(p) => {
                if p.max_intervened == 0 {
                    return Err(Error::Argument("max_intervened must be at least 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Runs the generator on one point. `data` supplies percentile grids.
    pub fn run(
        &self,
        m: &TrainedModel,
        x: &[f64],
        data: &Dataset,
        cost: CostFn,
        seed: u64,
    ) -> Result<Option<RecourseRecord>> {
        match self {
            RecourseMethod::Cfe(p) => cfe_search(m, x, cost, p),
            RecourseMethod::Ar(p) => ar_search(m, x, data, cost, p, seed),
            RecourseMethod::Causal(p) => causal_recourse(m, x, data, cost, p),
            RecourseMethod::Markov(p) => markov_search(m, x, cost, p, seed),
        }
    }
}

/// Recourses for every point a model rejects.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecourseSet {
    records: Vec<RecourseRecord>,
    /// Indices into the input data, parallel to `records`.
    indices: Vec<usize>,
    model_ref: String,
    not_found: usize,
    cost: CostFn,
    #[serde(skip)]
    names: Vec<String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    model_ref: &'a str,
    cf1_size: usize,
    not_found: usize,
    cost: CostFn,
}

impl RecourseSet {
    pub fn records(&self) -> &[RecourseRecord] {
        &self.records
    }

    /// Row index in the input data of each record.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Fingerprint of the model the records are valid for.
    pub fn model_ref(&self) -> &str {
        &self.model_ref
    }

    pub fn not_found(&self) -> usize {
        self.not_found
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn cost_fn(&self) -> CostFn {
        self.cost
    }

    /// True if every record is classified positive by `m`.
    pub fn all_valid(&self, m: &TrainedModel) -> Result<bool> {
        for r in &self.records {
            if !m.predict(r.recourse())?.is_positive() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// One row per record: origin features, recourse features, cost, method,
    /// iterations.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.names.iter().map(|n| format!("origin_{n}")).collect();
        header.extend(self.names.iter().map(|n| format!("recourse_{n}")));
        header.extend(["cost", "method", "iterations"].map(String::from));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row: Vec<String> = r.origin().iter().map(f64::to_string).collect();
            row.extend(r.recourse().iter().map(f64::to_string));
            row.push(r.cost().to_string());
            row.push(r.method().to_string());
            row.push(r.iterations().to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<recourse csv>", e))?;
        Ok(())
    }

    /// Sidecar summary with the not-found count.
    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Summary {
            model_ref: &self.model_ref,
            cf1_size: self.records.len(),
            not_found: self.not_found,
            cost: self.cost,
        })?)
    }
}

/// Runs `method` on every row of `data` that `m` classifies as negative.
///
/// Points are processed in parallel; records come back in row order. Each
/// row gets its own seed derived from `seed` and its index. Rows where the
/// generator finds nothing or fails are counted in `not_found`.
pub fn batch_recourse(
    m: &TrainedModel,
    data: &Dataset,
    method: &RecourseMethod,
    cost: CostFn,
    seed: u64,
) -> Result<RecourseSet> {
    if !m.schema().is_compatible(data.schema()) {
        return Err(Error::Argument("model and data schemas differ".into()));
    }
    method.validate()?;
    let negatives: Vec<usize> = (0..data.len())
        .filter(|&i| m.score(data.row(i)) < 0.0)
        .collect();
    let outcomes: Vec<Option<RecourseRecord>> = negatives
        .par_iter()
        .map(|&i| {
            method
                .run(m, data.row(i), data, cost, seed::derive(seed, i as u64))
                .ok()
                .flatten()
        })
        .collect();
    let mut records = Vec::new();
    let mut indices = Vec::new();
    for (i, r) in negatives.iter().zip(outcomes) {
        if let Some(r) = r {
            indices.push(*i);
            records.push(r);
        }
    }
    Ok(RecourseSet {
        not_found: negatives.len() - records.len(),
        records,
        indices,
        model_ref: m.fingerprint(),
        cost,
        names: data.schema().names().map(String::from).collect(),
    })
}

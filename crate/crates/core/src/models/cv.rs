use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{train, Classifier, ModelSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed;

const FOLD_STREAM: u64 = 0xC0F0;

/// Mean held-out accuracy (percent) over `k` seeded folds of `spec`.
pub fn cross_val_accuracy(spec: &ModelSpec, data: &Dataset, k: usize) -> Result<f64> {
    spec.validate()?;
    cross_val_accuracy_with(data, k, spec.seed, |train_part| train(spec, train_part))
}

/// Cross-validation with an arbitrary fitting routine.
///
/// Folds come from one seeded permutation and have sizes differing by at
/// most one.
pub fn cross_val_accuracy_with<C, F>(data: &Dataset, k: usize, seed: u64, fit: F) -> Result<f64>
where
    C: Classifier,
    F: Fn(&Dataset) -> Result<C> + Sync,
{
    if k < 2 {
        return Err(Error::Argument(format!("need at least 2 folds, got {k}")));
    }
    let n = data.len();
    if n < k {
        return Err(Error::Argument(format!("{n} rows cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::derive(seed, FOLD_STREAM)));

    let accuracies = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (lo, hi) = (fold * n / k, (fold + 1) * n / k);
            let test: Vec<usize> = order[lo..hi].to_vec();
            let rest: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
            let model = fit(&data.subset(&rest))?;
            let mut hits = 0usize;
            for &i in &test {
                if model.predict(data.row(i))? == data.label(i) {
                    hits += 1;
                }
            }
            Ok(hits as f64 / test.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(100.0 * accuracies.iter().sum::<f64>() / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_base;

    struct ConstantNegative;

    impl Classifier for ConstantNegative {
        fn n_features(&self) -> usize {
            2
        }

        fn decision_value(&self, _x: &[f64]) -> Result<f64> {
            Ok(-1.0)
        }
    }

    #[test]
    fn logistic_regression_ten_fold() {
        let d = synth_base(10_000, 12).unwrap();
        let acc = cross_val_accuracy(&ModelSpec::logistic_regression(), &d, 10).unwrap();
        assert!(acc >= 99.0, "{acc}");
    }

    #[test]
    fn constant_predictor_hits_base_rate() {
        let d = synth_base(4000, 13).unwrap();
        let acc = cross_val_accuracy_with(&d, 10, 1, |_| Ok(ConstantNegative)).unwrap();
        assert!((acc - 50.0).abs() <= 2.0, "{acc}");
    }

    #[test]
    fn fold_count_checked() {
        let d = synth_base(20, 0).unwrap();
        assert!(matches!(
            cross_val_accuracy(&ModelSpec::logistic_regression(), &d, 1),
            Err(Error::Argument(_))
        ));
        assert!(cross_val_accuracy(&ModelSpec::logistic_regression(), &d, 21).is_err());
    }
}

use proptest::prelude::*;
use recourse_lab::dataset::{synth_base, FeatureSchema};
use recourse_lab::models::{parallel_perturb, ModelKind, TrainedModel};
use recourse_lab::recourse::{
    batch_recourse, ArParams, CfeParams, CostFn, MarkovParams, RecourseMethod, Scm, ScmVariable,
    StopRule,
};

fn model(w: (f64, f64), b: f64) -> TrainedModel {
    TrainedModel::linear(
        ModelKind::LogisticRegression,
        FeatureSchema::continuous(2),
        vec![w.0, w.1],
        b,
    )
    .unwrap()
}

fn weights() -> impl Strategy<Value = (f64, f64)> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_filter("nonzero", |(a, b)| a.abs() + b.abs() > 0.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_generator_honors_validity_and_accounting(
        w in weights(),
        b in -1.0f64..1.0,
        seed in 0u64..1000,
        which in 0usize..3,
        l1 in any::<bool>(),
    ) {
        let data = synth_base(120, seed).unwrap();
        let m = model(w, b);
        let method = match which {
            0 => RecourseMethod::Cfe(CfeParams::default()),
            1 => RecourseMethod::Ar(ArParams::default()),
            _ => RecourseMethod::Markov(MarkovParams::new(0.01, StopRule::Rate(3.0))),
        };
        let cost = if l1 { CostFn::L1 } else { CostFn::L2 };
        let set = batch_recourse(&m, &data, &method, cost, seed).unwrap();
        let negatives = data.rows().filter(|x| !m.predict(x).unwrap().is_positive()).count();
        prop_assert_eq!(set.len() + set.not_found(), negatives);
        for r in set.records() {
            prop_assert!(m.predict(r.recourse()).unwrap().is_positive());
            prop_assert!((cost.cost(r.origin(), r.recourse()) - r.cost()).abs() <= 1e-9);
        }
    }

    #[test]
    fn intervention_never_moves_ancestors(
        coefs in prop::collection::vec(-2.0f64..2.0, 3),
        x in prop::collection::vec(-3.0f64..3.0, 4),
        target in 0usize..4,
        value in -5.0f64..5.0,
    ) {
        // diamond: 0 -> 1, 0 -> 2, (1, 2) -> 3
        let var = |name: &str, parents: Vec<(usize, f64)>| ScmVariable {
            name: name.into(),
            parents,
            noise_sd: 1.0,
            intervenable: true,
        };
        let scm = Scm::new(vec![
            var("a", vec![]),
            var("b", vec![(0, coefs[0])]),
            var("c", vec![(0, coefs[1])]),
            var("d", vec![(1, coefs[2]), (2, 1.0)]),
        ])
        .unwrap();
        let after = scm.intervene(&x, &[(target, value)]);
        prop_assert_eq!(after[target], value);
        for v in 0..4 {
            if v != target && !scm.is_ancestor(target, v) {
                prop_assert!((after[v] - x[v]).abs() <= 1e-12, "variable {} moved", v);
            }
        }
    }

    #[test]
    fn perturbation_moves_every_distance_equally(
        w in weights(),
        b in -1.0f64..1.0,
        delta in -2.0f64..2.0,
        x in (-5.0f64..5.0, -5.0f64..5.0),
    ) {
        let m = model(w, b);
        let moved = parallel_perturb(&m, delta).unwrap();
        let p = [x.0, x.1];
        let before = m.boundary_distance(&p).unwrap();
        let after = moved.boundary_distance(&p).unwrap();
        prop_assert!((before - after - delta).abs() <= 1e-12);
    }

}

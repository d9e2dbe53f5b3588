//! Property tests for algebraic invariants.

use std::sync::Arc;

use proptest::prelude::*;
use roughlab::drivers::{sobolev_norm, GridField, GridSpec};
use roughlab::flow::{feynman_kac_weight, sample_seed, TrigField, VectorField, VectorFieldSet};
use roughlab::roughpath::{chen_defect, joint_lift, lift_brownian, lift_piecewise_linear, Convention, SampledPath, TimeGrid};
use roughlab::scenario::{ScenarioConfig, SCENARIOS};
use roughlab::sewing::{sew, FnGerm, SewOptions};

fn path_strategy(dim: usize) -> impl Strategy<Value = SampledPath> {
    (4usize..40).prop_flat_map(move |n| {
        prop::collection::vec(-3.0f64..3.0, (n + 1) * dim)
            .prop_map(move |v| SampledPath::new(TimeGrid::new(1.0, n).unwrap(), dim, v).unwrap())
    })
}

fn sorted_triple(n: usize) -> impl Strategy<Value = (usize, usize, usize)> {
    (0..=n, 0..=n, 0..=n).prop_map(|(a, b, c)| {
        let mut v = [a, b, c];
        v.sort_unstable();
        (v[0], v[1], v[2])
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn piecewise_linear_lift_satisfies_chen(path in path_strategy(2), t in any::<prop::sample::Index>()) {
        let rp = lift_piecewise_linear(&path).unwrap();
        let n = path.grid().n_steps();
        let (a, b) = (t.index(n + 1), (t.index(n + 1) * 7 + 3) % (n + 1));
        let (s, u) = (a.min(b), a.max(b));
        let theta = (s + u) / 2;
        let scale = 1.0 + max_abs(path.values()).powi(2);
        prop_assert!(max_abs(&chen_defect(&rp, s, theta, u).unwrap()) <= 1e-12 * scale);
    }

    #[test]
    fn brownian_and_joint_lifts_satisfy_chen(seed in any::<u64>(), (s, th, t) in sorted_triple(128)) {
        let grid = TimeGrid::new(1.0, 128).unwrap();
        let b = lift_brownian(seed, grid, 2, Convention::Stratonovich).unwrap();
        let z = lift_brownian(seed ^ 1, grid, 1, Convention::Ito).unwrap();
        let j = joint_lift(&b, &z).unwrap();
        for rp in [&b, &z, &j] {
            prop_assert!(max_abs(&chen_defect(rp, s, th, t).unwrap()) <= 1e-12 * 10.0);
        }
    }

    #[test]
    fn geometric_lift_has_symmetric_part_half_square(path in path_strategy(3), (s, _, t) in sorted_triple(4)) {
        let rp = lift_piecewise_linear(&path).unwrap();
        let inc = rp.increment(s, t).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let sym = 0.5 * (inc.second_at(i, j) + inc.second_at(j, i));
                prop_assert!((sym - 0.5 * inc.first[i] * inc.first[j]).abs() <= 1e-12 * (1.0 + sym.abs()));
            }
        }
    }

    #[test]
    fn additive_germs_sew_to_themselves(c in -2.0f64..2.0, k in 1.0f64..6.0, n in 2usize..64) {
        let f = move |t: f64| c * (k * t).sin() + t * t;
        let germ = FnGerm::new(2.0, move |s: f64, t: f64| f(t) - f(s));
        let grid = TimeGrid::new(1.0, n).unwrap();
        let res = sew(&germ, &grid, &SewOptions::default()).unwrap();
        for (i, v) in res.values.iter().enumerate() {
            prop_assert!((v - (f(grid.time(i)) - f(0.0))).abs() <= 1e-12);
        }
    }

    #[test]
    fn sobolev_norms_increase_with_order(coef in prop::collection::vec(-1.0f64..1.0, 6), s in -3.0f64..2.0) {
        let spec = GridSpec::new(1, 20.0, 64).unwrap();
        let f = GridField::from_fn(spec, |x| {
            coef.iter().enumerate().map(|(m, c)| c * ((m + 1) as f64 * 0.3 * x[0]).cos()).sum::<f64>()
                + (-x[0] * x[0]).exp()
        });
        prop_assert!(sobolev_norm(&f, s) <= sobolev_norm(&f, s + 0.5) * (1.0 + 1e-12));
        prop_assert!((sobolev_norm(&f, 0.0) - f.l2_norm()).abs() <= 1e-10 * f.l2_norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn constant_fields_give_unit_weight(c in -2.0f64..2.0, seed in any::<u64>()) {
        let beta = VectorFieldSet::new(vec![Arc::new(TrigField::constant(vec![c]).unwrap()) as Arc<dyn VectorField>]).unwrap();
        let rp = lift_brownian(seed, TimeGrid::new(0.5, 32).unwrap(), 1, Convention::Stratonovich).unwrap();
        let w = feynman_kac_weight(&[-1.0, 0.0, 2.5], 0.0, &beta, &rp, 16, sample_seed(seed, 0)).unwrap();
        prop_assert!(w.mean.iter().all(|m| *m == 1.0));
        prop_assert!(w.std_error.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn config_round_trips_through_toml(idx in 0..SCENARIOS.len(), seed in any::<u32>(), samples in 2usize..5000) {
        let mut cfg = ScenarioConfig::for_scenario(SCENARIOS[idx], "out");
        cfg.seed = seed as u64;
        cfg.monte_carlo.samples = samples;
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn sample_seeds_are_distinct() {
    let mut seen = std::collections::HashSet::new();
    for run in 0..8 {
        for i in 0..2000 {
            assert!(seen.insert(sample_seed(run, i)));
        }
    }
}

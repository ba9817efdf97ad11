mod common;

use proptest::prelude::*;
use shelfwise::baselines::{heuristic_action, HeuristicConfig};
use shelfwise::datagen::{generate, DatasetSpec};
use shelfwise::env::dynamics::{capacity_ratio, percentile_spread};
use shelfwise::env::{ForecastState, StoreState};

#[test]
fn randomized_steps_keep_every_invariant() {
    let rep = common::env_invariant_sweep(20_000, 11);
    assert!(rep.worst() <= 1e-9, "{rep:?}");
    assert!(rep.identity_checked > 1_000, "{rep:?}");
}

/// Closest-ranks percentile written from its definition: rank k of n sits at
/// `(k - 0.5) / n`, linear in between, flat outside.
fn percentile_oracle(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let rank = |k: usize| (k as f64 + 0.5) / n;
    if q <= rank(0) {
        return v[0];
    }
    for k in 0..v.len() - 1 {
        let (a, b) = (rank(k), rank(k + 1));
        if q <= b {
            return v[k] + (q - a) / (b - a) * (v[k + 1] - v[k]);
        }
    }
    v[v.len() - 1]
}

#[test]
fn spread_of_twenty_evenly_spaced_levels() {
    // Ranks of 0.0, 0.05, ..., 0.95 sit at 0.025, 0.075, ...; q=0.05 falls
    // halfway between the first two, q=0.95 halfway between the last two.
    let v: Vec<f64> = (0..20).map(|k| k as f64 * 0.05).collect();
    assert!((percentile_spread(&v) - (0.925 - 0.025)).abs() < 1e-12);
}

proptest! {
    #[test]
    fn spread_matches_oracle(values in prop::collection::vec(0.0f64..=1.0, 2..200)) {
        let want = percentile_oracle(&values, 0.95) - percentile_oracle(&values, 0.05);
        prop_assert!((percentile_spread(&values) - want).abs() < 1e-12);
    }

    #[test]
    fn spread_is_permutation_invariant(mut values in prop::collection::vec(0.0f64..=1.0, 2..60), seed in any::<u64>()) {
        let a = percentile_spread(&values);
        let k = (seed as usize) % values.len();
        values.rotate_left(k);
        values.reverse();
        prop_assert_eq!(a, percentile_spread(&values));
    }

    #[test]
    fn invariant_sweep_holds_for_any_seed(seed in any::<u64>()) {
        let rep = common::env_invariant_sweep(200, seed);
        prop_assert!(rep.worst() <= 1e-9, "{:?}", rep);
    }
}

#[test]
fn default_tightness_makes_capacity_bind() {
    let d = generate(&DatasetSpec {
        products: 30,
        ..DatasetSpec::default()
    })
    .unwrap();
    let cfg = HeuristicConfig::default();
    let mut forecast = ForecastState::new(d.num_products(), 8);
    let mut state = StoreState::new(vec![0.5; d.num_products()]);
    let mut binding = 0;
    for w in &d.demand {
        let u = heuristic_action(&state, &forecast, &cfg);
        if capacity_ratio(&d.catalog, &u) > 1.0 {
            binding += 1;
        }
        let next: Vec<f64> = state
            .inventory
            .iter()
            .zip(&u)
            .zip(w)
            .map(|((x, u), w)| (x + u - w).max(0.0))
            .collect();
        state = StoreState::new(next);
        forecast.update(w);
    }
    assert!(binding > 0);
}

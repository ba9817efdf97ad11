mod common;

use rand::Rng;
use shelfwise::agents::{source_frequencies, Agent, AgentConfig, ExplorationMode, Variant};
use shelfwise::env::FEATURE_DIM;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// p-value of Pearson's χ² for uniformity.
pub fn uniformity_p_value(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn dez_sources_are_uniform_at_full_exploration() {
    let counts = source_frequencies(ExplorationMode::DezGreedy, 1.0, 100_000, 17);
    assert_eq!(counts[0], 0, "greedy picks at ε=1");
    let p = uniformity_p_value(&counts[1..]);
    assert!(p > 0.01, "{counts:?} p={p}");
}

#[test]
fn chi_square_oracle_rejects_a_skewed_split() {
    assert!(uniformity_p_value(&[26_000, 25_000, 25_000, 24_000]) < 0.01);
    assert!(uniformity_p_value(&[25_000; 4]) > 0.99);
}

#[test]
fn epsilon_greedy_explores_only_at_random() {
    let counts = source_frequencies(ExplorationMode::EpsilonGreedy, 1.0, 10_000, 3);
    assert_eq!(counts, [0, 10_000, 0, 0, 0]);
}

#[test]
fn greedy_dez_and_epsilon_greedy_pick_identical_actions() {
    let cfg = AgentConfig::default();
    let mut dez = Agent::new(Variant::DezDqnGvf, cfg.clone(), 9).unwrap();
    let mut eps = Agent::new(Variant::DqnGvf, cfg, 9).unwrap();
    let mut rng = common::rng(4);
    for _ in 0..5_000 {
        let f: [f64; FEATURE_DIM] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
        assert_eq!(dez.select_action(&f, 0.0), eps.select_action(&f, 0.0));
    }
}

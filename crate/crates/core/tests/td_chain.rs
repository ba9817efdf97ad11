mod common;

use common::ChainSetup;

pub const SETUP: ChainSetup = ChainSetup {
    gamma: 0.9,
    steps: 5_000,
    lr: 1e-3,
    target_sync: 50,
    batch: 256,
    seed: 5,
};

#[test]
fn gvf_heads_learn_discounted_cumulant_sums() {
    for (want, got) in common::td_chain(SETUP) {
        assert!((got - want).abs() <= 0.01 * want.abs(), "analytic {want}, learned {got}");
    }
}

#[test]
fn closed_form_satisfies_bellman() {
    let g = 0.9;
    for s in 0..3 {
        let c = |x: usize| common::CHAIN_CUMULANTS[x][2];
        let lhs = common::chain_value(c, s, g);
        let rhs = c(s) + g * common::chain_value(c, (s + 1) % 3, g);
        assert!((lhs - rhs).abs() < 1e-12);
    }
}

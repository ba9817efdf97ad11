#![allow(dead_code)]

//! Oracles shared by the integration tests and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shelfwise::agents::{Agent, AgentConfig, Transition, Variant};
use shelfwise::baselines::lp::{Direction, LpProblem, Sense};
use shelfwise::env::{Environment, Product, ProductCatalog, RewardConfig, StoreState, ACTION_SET, FEATURE_DIM};
use shelfwise::nn::{HeadTargets, MlpConfig, Network};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Catalog with loosely drawn parameters and capacities from very tight to
/// never binding.
pub fn random_catalog(rng: &mut impl Rng, products: usize) -> ProductCatalog {
    let items: Vec<Product> = (0..products)
        .map(|_| Product {
            max_shelf: rng.random_range(1..300) as f64,
            volume: log_uniform(rng, 0.01, 10.0),
            weight: log_uniform(rng, 0.01, 10.0),
            spoilage_rate: rng.random_range(0.001..=1.0),
            critical_level: rng.random_range(0.01..0.3),
        })
        .collect();
    let vol: f64 = items.iter().map(|p| p.volume).sum();
    let wgt: f64 = items.iter().map(|p| p.weight).sum();
    let v_max = vol * log_uniform(rng, 0.02, 3.0);
    let c_max = wgt * log_uniform(rng, 0.02, 3.0);
    ProductCatalog::new(items, v_max, c_max).expect("valid catalog")
}

#[derive(Debug, Default, Clone, Copy)]
pub struct InvariantReport {
    pub steps: usize,
    pub bounds: f64,
    pub conservation: f64,
    pub capacity: f64,
    pub identity: f64,
    pub identity_checked: usize,
}

impl InvariantReport {
    pub fn worst(&self) -> f64 {
        self.bounds.max(self.conservation).max(self.capacity).max(self.identity)
    }
}

/// Random catalogs, states, raw actions and demands; every step checked.
pub fn env_invariant_sweep(steps: usize, seed: u64) -> InvariantReport {
    let mut rng = rng(seed);
    let mut rep = InvariantReport::default();
    while rep.steps < steps {
        let p = rng.random_range(1..=40);
        let catalog = random_catalog(&mut rng, p);
        let reward = RewardConfig {
            alpha: rng.random_range(0.0..3.0),
            wastage_weight: rng.random_range(0.5..4.0),
            critical_override: None,
        };
        let env = Environment::new(catalog.clone(), reward);
        let mut state = StoreState::new((0..p).map(|_| rng.random_range(0.0..=1.0)).collect());
        for _ in 0..50 {
            let raw: Vec<f64> = (0..p)
                .map(|_| {
                    if rng.random_bool(0.7) {
                        ACTION_SET[rng.random_range(0..ACTION_SET.len())]
                    } else {
                        rng.random_range(0.0..1.5)
                    }
                })
                .collect();
            let demand: Vec<f64> = (0..p)
                .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..=1.0) })
                .collect();
            let out = env.step(&state, &raw, &demand).expect("step");
            let next = &out.next_state.inventory;
            for i in 0..p {
                rep.bounds = rep.bounds.max(-next[i]).max(next[i] - 1.0);
                rep.bounds = rep.bounds.max(state.inventory[i] + out.executed[i] - 1.0);
                let sold = demand[i] - out.components[i].refused;
                let expect = state.inventory[i] + out.executed[i] - sold - out.components[i].waste;
                rep.conservation = rep.conservation.max((next[i] - expect).abs());
            }
            let vol: f64 = out.executed.iter().zip(catalog.volumes()).map(|(u, v)| u * v).sum();
            let wgt: f64 = out.executed.iter().zip(catalog.weights()).map(|(u, c)| u * c).sum();
            rep.capacity = rep
                .capacity
                .max((vol - catalog.v_max()) / catalog.v_max())
                .max((wgt - catalog.c_max()) / catalog.c_max());
            if out.rho <= 1.0 {
                rep.identity = rep.identity.max((out.mean_product_reward() - out.business_reward).abs());
                rep.identity_checked += 1;
            }
            state = out.next_state;
            rep.steps += 1;
        }
    }
    rep
}

/// Largest `‖a − n‖ / (‖a‖ + ‖n‖)` between analytic and central-difference
/// gradients over `nets` random networks and minibatches.
pub fn gradient_check(nets: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..nets {
        let depth = rng.random_range(1..=3);
        let config = MlpConfig {
            input_dim: rng.random_range(2..=FEATURE_DIM),
            hidden: (0..depth).map(|_| rng.random_range(2..=10)).collect(),
            heads: rng.random_range(1..=4),
            outputs: rng.random_range(2..=ACTION_SET.len()),
        };
        let mut net = Network::new(config.clone(), &mut rng);
        for w in net.params_mut() {
            *w += rng.random_range(-0.1..0.1);
        }
        let batch = rng.random_range(1..=5);
        let inputs: Vec<f64> = (0..batch * config.input_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let actions: Vec<usize> = (0..batch).map(|_| rng.random_range(0..config.outputs)).collect();
        let targets: Vec<Vec<f64>> = (0..config.heads)
            .map(|_| (0..batch).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let mut mask: Vec<bool> = (0..config.heads).map(|_| rng.random_bool(0.7)).collect();
        mask[0] = true;
        let t = HeadTargets {
            actions: &actions,
            targets: &targets,
            mask: &mask,
        };
        let (_, grads) = net.backward(&inputs, &t);
        let h = 1e-6;
        let (mut diff, mut norm_a, mut norm_n) = (0.0, 0.0, 0.0);
        for j in 0..net.num_params() {
            let orig = net.params()[j];
            net.params_mut()[j] = orig + h;
            let up = net.loss(&inputs, &t);
            net.params_mut()[j] = orig - h;
            let down = net.loss(&inputs, &t);
            net.params_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.0[j];
            diff += (analytic - numeric).powi(2);
            norm_a += analytic * analytic;
            norm_n += numeric * numeric;
        }
        let denom = norm_a.sqrt() + norm_n.sqrt();
        if denom > 1e-12 {
            worst = worst.max(diff.sqrt() / denom);
        }
    }
    worst
}

/// Three-state cycle `0 → 1 → 2 → 0`; every action leads to the same
/// successor and cumulants, so greedy and min bootstraps coincide.
pub const CHAIN_CUMULANTS: [[f64; 3]; 3] = [[0.2, 1.0, 0.5], [0.05, 0.0, 0.9], [0.1, 1.0, 0.3]];
pub const CHAIN_REWARDS: [f64; 3] = [1.0, -0.5, 0.25];

fn chain_features(s: usize) -> [f64; FEATURE_DIM] {
    let mut f = [0.0; FEATURE_DIM];
    f[s] = 1.0;
    f[FEATURE_DIM - 1] = 0.5;
    f
}

/// Closed form `Σ_k γ^k c(s+k)` over the cycle.
pub fn chain_value(signal: impl Fn(usize) -> f64, s: usize, gamma: f64) -> f64 {
    (0..3).map(|k| gamma.powi(k as i32) * signal((s + k) % 3)).sum::<f64>() / (1.0 - gamma.powi(3))
}

#[derive(Debug, Clone, Copy)]
pub struct ChainSetup {
    pub gamma: f64,
    pub steps: usize,
    pub lr: f64,
    pub target_sync: u64,
    pub batch: usize,
    pub seed: u64,
}

/// Trains a GVF agent on the chain; returns `(analytic, learned)` for every
/// state, head and action.
pub fn td_chain(setup: ChainSetup) -> Vec<(f64, f64)> {
    let ChainSetup {
        gamma,
        steps,
        lr,
        target_sync,
        batch,
        seed,
    } = setup;
    let mut config = AgentConfig {
        gamma,
        replay_capacity: 4_200,
        batch_size: batch,
        target_sync,
        hidden: vec![32, 32],
        ..AgentConfig::default()
    };
    config.adam.lr = lr;
    let mut agent = Agent::new(Variant::DqnGvf, config, seed).expect("agent");
    // Copies let a large with-replacement batch approach the full set.
    for s in (0..3).cycle().take(300) {
        for a in 0..ACTION_SET.len() {
            agent.remember(Transition {
                state: chain_features(s),
                action: a,
                reward: CHAIN_REWARDS[s],
                cumulants: CHAIN_CUMULANTS[s],
                next_state: chain_features((s + 1) % 3),
                terminal: false,
            });
        }
    }
    for _ in 0..steps {
        agent.train_step();
    }
    let mut out = Vec::new();
    for s in 0..3 {
        let q = agent.q_values(&chain_features(s)).expect("forward");
        for (head, values) in q.iter().enumerate() {
            let want = if head == 0 {
                chain_value(|x| CHAIN_REWARDS[x], s, gamma)
            } else {
                chain_value(|x| CHAIN_CUMULANTS[x][head - 1], s, gamma)
            };
            out.extend(values.iter().map(|&v| (want, v)));
        }
    }
    out
}

/// Feasible and bounded LP on a box, built around a known interior point.
pub fn random_lp(rng: &mut impl Rng) -> LpProblem {
    let n = rng.random_range(1..=4);
    let m = rng.random_range(1..=4);
    let dir = if rng.random_bool(0.5) { Direction::Maximize } else { Direction::Minimize };
    let mut lp = LpProblem::new(dir);
    let mut x0 = Vec::with_capacity(n);
    for _ in 0..n {
        let lo = rng.random_range(-2.0..0.0);
        let hi = lo + rng.random_range(0.5..3.0);
        x0.push(rng.random_range(lo..hi));
        lp.add_var(rng.random_range(-3.0..3.0), lo, hi);
    }
    let mut equalities = 0;
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.8) {
                coeffs.push((j, rng.random_range(-2.0..2.0)));
            }
        }
        if coeffs.is_empty() {
            continue;
        }
        let act: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
        let kind = rng.random_range(0..10);
        if kind == 0 && equalities < n.saturating_sub(1) {
            equalities += 1;
            lp.add_row(coeffs, Sense::Eq, act);
        } else if kind < 4 {
            lp.add_row(coeffs, Sense::Ge, act - rng.random_range(0.0..1.0));
        } else {
            lp.add_row(coeffs, Sense::Le, act + rng.random_range(0.0..1.0));
        }
    }
    lp
}

/// Solves the square system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Best objective over all basic feasible points of a box-bounded LP; `None`
/// when no vertex is feasible.
pub fn vertex_enumeration(lp: &LpProblem) -> Option<f64> {
    let n = lp.num_vars();
    // Every constraint as (a, b, sense) over dense rows; bounds included.
    let mut cons: Vec<(Vec<f64>, f64, Sense)> = Vec::new();
    for row in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        cons.push((a, row.rhs, row.sense));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cons.push((e.clone(), lp.lower[j], Sense::Ge));
        cons.push((e, lp.upper[j], Sense::Le));
    }
    let feasible = |x: &[f64]| {
        cons.iter().all(|(a, b, s)| {
            let v: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
            match s {
                Sense::Le => v <= b + 1e-9,
                Sense::Ge => v >= b - 1e-9,
                Sense::Eq => (v - b).abs() <= 1e-9,
            }
        })
    };
    let sign = match lp.direction {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };
    let mut best: Option<f64> = None;
    for active in subsets(cons.len(), n) {
        let a: Vec<Vec<f64>> = active.iter().map(|&k| cons[k].0.clone()).collect();
        let b: Vec<f64> = active.iter().map(|&k| cons[k].1).collect();
        let Some(x) = solve_square(a, b) else { continue };
        if !feasible(&x) {
            continue;
        }
        let obj = lp.objective_value(&x);
        if best.is_none_or(|b| sign * obj > sign * b) {
            best = Some(obj);
        }
    }
    best
}

//! Perfect-information LP over a demand window.
//!
//! The indicator terms of the business reward are replaced by linear
//! surrogates: lost sales `l` stand in for stock-outs (scaled by `1/κ̄`),
//! a shortfall `m ≥ κ - x` for the critical flag, and the max-min range of
//! end-of-period inventories for the percentile spread. Every realized
//! trajectory maps to a feasible point with the same surrogate score, so
//! the LP optimum bounds the surrogate score of any policy.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::lp::{self, Direction, LpProblem, LpSolution, LpStatus, Sense, SolveOptions};
use crate::env::{Environment, StepOutcome, StoreState};
use crate::error::{Error, Result};

const VARS_PER_PRODUCT: usize = 4;

/// The LP plus its variable layout. Per period the columns are
/// `(u, l, r, m)` for each product followed by `hi, lo`; `r` is the
/// post-demand residual, so the next inventory is `(1-δ) r`.
#[derive(Debug, Clone)]
pub struct PerfectInfoLp {
    pub problem: LpProblem,
    pub products: usize,
    pub periods: usize,
}

impl PerfectInfoLp {
    fn base(&self, t: usize) -> usize {
        t * (VARS_PER_PRODUCT * self.products + 2)
    }

    pub fn order(&self, i: usize, t: usize) -> usize {
        self.base(t) + VARS_PER_PRODUCT * i
    }

    pub fn lost(&self, i: usize, t: usize) -> usize {
        self.order(i, t) + 1
    }

    pub fn residual(&self, i: usize, t: usize) -> usize {
        self.order(i, t) + 2
    }

    pub fn shortfall(&self, i: usize, t: usize) -> usize {
        self.order(i, t) + 3
    }

    pub fn high(&self, t: usize) -> usize {
        self.base(t) + VARS_PER_PRODUCT * self.products
    }

    pub fn low(&self, t: usize) -> usize {
        self.high(t) + 1
    }

    /// Mean surrogate reward per period at a point `x`.
    pub fn mean_score(&self, x: &[f64]) -> f64 {
        1.0 + self.problem.objective_value(x) / self.periods as f64
    }

    /// Orders `u(t)` of an LP point, one vector per period.
    pub fn orders(&self, x: &[f64]) -> Vec<Vec<f64>> {
        (0..self.periods)
            .map(|t| (0..self.products).map(|i| x[self.order(i, t)]).collect())
            .collect()
    }
}

fn mean_critical(env: &Environment) -> f64 {
    let p = env.num_products();
    (0..p).map(|i| env.critical_level(i)).sum::<f64>() / p as f64
}

pub fn build_perfect_info_lp(env: &Environment, initial: &[f64], demand: &[Vec<f64>]) -> Result<PerfectInfoLp> {
    let p = env.num_products();
    if demand.is_empty() {
        return Err(Error::Empty("demand window"));
    }
    if initial.len() != p {
        return Err(Error::DimensionMismatch {
            context: "initial inventory",
            expected: p,
            actual: initial.len(),
        });
    }
    if let Some(row) = demand.iter().find(|r| r.len() != p) {
        return Err(Error::DimensionMismatch {
            context: "demand row",
            expected: p,
            actual: row.len(),
        });
    }
    let catalog = env.catalog();
    let ww = env.reward_config().wastage_weight;
    let pf = p as f64;
    let kbar = mean_critical(env);

    let mut lp = PerfectInfoLp {
        problem: LpProblem::new(Direction::Maximize),
        products: p,
        periods: demand.len(),
    };
    let prob = &mut lp.problem;
    for (t, w) in demand.iter().enumerate() {
        for i in 0..p {
            let prod = catalog.product(i);
            let u_hi = if t == 0 { 1.0 - initial[i] } else { 1.0 };
            prob.add_var(0.0, 0.0, u_hi);
            prob.add_var(-(1.0 / kbar + 1.0) / pf, 0.0, w[i]);
            prob.add_var(-ww * prod.spoilage_rate / pf, 0.0, 1.0);
            let kappa = env.critical_level(i);
            prob.add_var(-1.0 / (pf * kappa), 0.0, kappa);
        }
        prob.add_var(-1.0, 0.0, 1.0);
        prob.add_var(1.0, 0.0, 1.0);
    }

    for (t, w) in demand.iter().enumerate() {
        let mut vol = Vec::with_capacity(p);
        let mut wgt = Vec::with_capacity(p);
        for i in 0..p {
            let keep = 1.0 - catalog.product(i).spoilage_rate;
            let (u, l, r, m) = (lp.order(i, t), lp.lost(i, t), lp.residual(i, t), lp.shortfall(i, t));
            let prob = &mut lp.problem;
            // r = x⁻ + u - w + l, with x⁻ the carried-over inventory.
            if t == 0 {
                prob.add_row(vec![(r, 1.0), (u, -1.0), (l, -1.0)], Sense::Eq, initial[i] - w[i]);
            } else {
                let prev = lp.residual(i, t - 1);
                let prob = &mut lp.problem;
                prob.add_row(vec![(r, 1.0), (u, -1.0), (l, -1.0), (prev, -keep)], Sense::Eq, -w[i]);
                prob.add_row(vec![(u, 1.0), (prev, keep)], Sense::Le, 1.0);
            }
            let (hi, lo) = (lp.high(t), lp.low(t));
            let prob = &mut lp.problem;
            prob.add_row(vec![(m, 1.0), (r, keep)], Sense::Ge, env.critical_level(i));
            prob.add_row(vec![(hi, 1.0), (r, -keep)], Sense::Ge, 0.0);
            prob.add_row(vec![(r, keep), (lo, -1.0)], Sense::Ge, 0.0);
            vol.push((u, catalog.product(i).volume));
            wgt.push((u, catalog.product(i).weight));
        }
        lp.problem.add_row(vol, Sense::Le, catalog.v_max());
        lp.problem.add_row(wgt, Sense::Le, catalog.c_max());
    }
    Ok(lp)
}

/// The LP objective evaluated on one realized step.
pub fn surrogate_period_score(env: &Environment, outcome: &StepOutcome) -> f64 {
    let p = env.num_products();
    let pf = p as f64;
    let kbar = mean_critical(env);
    let ww = env.reward_config().wastage_weight;
    let next = &outcome.next_state.inventory;
    let (mut lost, mut short, mut waste) = (0.0, 0.0, 0.0);
    for (i, c) in outcome.components.iter().enumerate() {
        let kappa = env.critical_level(i);
        lost += c.refused;
        short += (kappa - next[i]).max(0.0) / kappa;
        waste += c.waste;
    }
    let hi = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = next.iter().copied().fold(f64::INFINITY, f64::min);
    1.0 - lost / (pf * kbar) - short / pf - ww * waste / pf - (hi - lo) - lost / pf
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpBound {
    pub status: LpStatus,
    pub periods: usize,
    /// Optimal mean surrogate reward per period; `None` unless optimal.
    pub bound: Option<f64>,
    /// Business reward of the LP's orders replayed through the environment.
    pub replay_reward: Option<f64>,
    /// Surrogate score of the same replay.
    pub replay_surrogate: Option<f64>,
    pub iterations: usize,
    pub seconds: f64,
}

/// Solves the perfect-information LP and replays its orders.
pub fn lp_upper_bound(
    env: &Environment,
    initial: &[f64],
    demand: &[Vec<f64>],
    options: &SolveOptions,
) -> Result<(LpBound, Option<LpSolution>)> {
    let started = Instant::now();
    let lp = build_perfect_info_lp(env, initial, demand)?;
    let sol = lp::solve(&lp.problem, options)?;
    let seconds = started.elapsed().as_secs_f64();
    let mut out = LpBound {
        status: sol.status,
        periods: demand.len(),
        bound: None,
        replay_reward: None,
        replay_surrogate: None,
        iterations: sol.iterations,
        seconds,
    };
    if sol.status != LpStatus::Optimal {
        return Ok((out, None));
    }
    out.bound = Some(lp.mean_score(&sol.x));
    let mut state = StoreState::new(initial.to_vec());
    let (mut reward, mut surrogate) = (0.0, 0.0);
    for (u, w) in lp.orders(&sol.x).iter().zip(demand) {
        let outcome = env.step(&state, u, w)?;
        reward += outcome.business_reward;
        surrogate += surrogate_period_score(env, &outcome);
        state = outcome.next_state;
    }
    out.replay_reward = Some(reward / demand.len() as f64);
    out.replay_surrogate = Some(surrogate / demand.len() as f64);
    Ok((out, Some(sol)))
}

/// Wall-clock limit helper for configs expressed in seconds.
pub fn time_limit(seconds: Option<f64>) -> Option<Duration> {
    seconds.filter(|s| *s > 0.0).map(Duration::from_secs_f64)
}

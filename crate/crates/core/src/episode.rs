//! Episode plumbing shared by every policy: forecaster priming, per-period
//! metric accumulation, decision logging and a generic rollout loop.

use serde::{Deserialize, Serialize};

use crate::agents::ActionSource;
use crate::baselines::perfect_info::surrogate_period_score;
use crate::datagen::{Dataset, Window};
use crate::env::{Environment, ForecastState, RewardBreakdown, StepOutcome, StoreState};
use crate::error::{Error, Result};

/// Forecaster primed with up to `window` demand rows preceding `start`.
pub fn primed_forecast(dataset: &Dataset, start: usize, window: usize) -> ForecastState {
    let from = start.saturating_sub(window);
    ForecastState::primed(
        dataset.num_products(),
        window,
        dataset.demand[from..start].iter().map(Vec::as_slice),
    )
}

pub fn check_window(dataset: &Dataset, window: Window) -> Result<()> {
    if window.is_empty() {
        return Err(Error::Empty("episode window"));
    }
    if window.end > dataset.header.horizon {
        return Err(Error::DimensionMismatch {
            context: "episode window end",
            expected: dataset.header.horizon,
            actual: window.end,
        });
    }
    Ok(())
}

/// Period means over one episode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub periods: usize,
    pub business_reward: f64,
    pub components: RewardBreakdown,
    pub product_reward: f64,
    /// Mean of the LP surrogate objective evaluated on the realized trajectory.
    pub surrogate: f64,
}

#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    periods: usize,
    reward: f64,
    product_reward: f64,
    surrogate: f64,
    parts: RewardBreakdown,
}

impl MetricsAccumulator {
    pub fn record(&mut self, env: &Environment, outcome: &StepOutcome) {
        self.periods += 1;
        self.reward += outcome.business_reward;
        self.product_reward += outcome.mean_product_reward();
        self.surrogate += surrogate_period_score(env, outcome);
        let b = &outcome.breakdown;
        let acc = &mut self.parts;
        acc.empty += b.empty;
        acc.critical += b.critical;
        acc.wastage += b.wastage;
        acc.spread += b.spread;
        acc.refused += b.refused;
        acc.capacity_penalty += b.capacity_penalty;
    }

    pub fn finish(&self) -> EpisodeStats {
        let n = self.periods.max(1) as f64;
        let p = &self.parts;
        EpisodeStats {
            periods: self.periods,
            business_reward: self.reward / n,
            product_reward: self.product_reward / n,
            surrogate: self.surrogate / n,
            components: RewardBreakdown {
                empty: p.empty / n,
                critical: p.critical / n,
                wastage: p.wastage / n,
                spread: p.spread / n,
                refused: p.refused / n,
                capacity_penalty: p.capacity_penalty / n,
            },
        }
    }
}

/// One per-product decision, the raw material of policy heatmaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    /// Inventory before replenishment.
    pub inventory: f64,
    /// Realized demand in the period.
    pub order: f64,
    /// Replenishment after shelf clipping.
    pub replenishment: f64,
    /// GVF predictions (wastage, stock-out, depletion) of the chosen action.
    pub gvf: Option<[f64; 3]>,
    /// Rule that picked the action, for learned policies.
    pub source: Option<ActionSource>,
}

pub fn log_decisions(
    log: &mut Vec<DecisionRecord>,
    state: &StoreState,
    demand: &[f64],
    outcome: &StepOutcome,
) {
    for i in 0..state.len() {
        log.push(DecisionRecord {
            inventory: state.inventory[i],
            order: demand[i],
            replenishment: outcome.requested[i],
            gvf: None,
            source: None,
        });
    }
}

/// Full record of a rollout, kept when the caller needs more than means.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub states: Vec<StoreState>,
    pub outcomes: Vec<StepOutcome>,
}

/// Rolls out a non-learning policy. `policy` receives the pre-order state,
/// the forecaster and the absolute period index, and returns raw orders.
pub fn simulate<F>(
    env: &Environment,
    dataset: &Dataset,
    window: Window,
    initial: Vec<f64>,
    forecast_window: usize,
    mut policy: F,
    mut log: Option<&mut Vec<DecisionRecord>>,
    mut trajectory: Option<&mut Trajectory>,
) -> Result<EpisodeStats>
where
    F: FnMut(&StoreState, &ForecastState, usize) -> Result<Vec<f64>>,
{
    check_window(dataset, window)?;
    let mut forecast = primed_forecast(dataset, window.start, forecast_window);
    let mut state = StoreState::new(initial);
    let mut acc = MetricsAccumulator::default();
    for t in window.start..window.end {
        let demand = &dataset.demand[t];
        let raw = policy(&state, &forecast, t)?;
        let outcome = env.step(&state, &raw, demand)?;
        acc.record(env, &outcome);
        if let Some(log) = log.as_deref_mut() {
            log_decisions(log, &state, demand, &outcome);
        }
        forecast.update(demand);
        let next = outcome.next_state.clone();
        if let Some(tr) = trajectory.as_deref_mut() {
            tr.states.push(state);
            tr.outcomes.push(outcome);
        }
        state = next;
    }
    Ok(acc.finish())
}

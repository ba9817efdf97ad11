//! Multi-product replenishment environment.
//!
//! All quantities are normalized by each product's shelf size, so inventories
//! and orders live in `[0, 1]`. One call to [`Environment::step`] covers a
//! full period: order, replenish, serve demand, spoil, score.

pub mod catalog;
pub mod dynamics;
pub mod features;
pub mod forecast;
pub mod reward;

pub use catalog::{Product, ProductCatalog};
pub use dynamics::{ACTION_SET, NUM_ACTIONS};
pub use features::{build_feature_vector, build_features, Features, FEATURE_DIM};
pub use forecast::ForecastState;
pub use reward::{Cumulants, ProductComponents, RewardBreakdown, RewardConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pre-replenishment inventory `x(t)⁻` at period `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreState {
    pub t: usize,
    pub inventory: Vec<f64>,
}

impl StoreState {
    pub fn new(inventory: Vec<f64>) -> Self {
        Self { t: 0, inventory }
    }

    pub fn len(&self) -> usize {
        self.inventory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inventory.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: StoreState,
    /// Orders after shelf clipping, before capacity scaling.
    pub requested: Vec<f64>,
    /// Orders actually delivered.
    pub executed: Vec<f64>,
    pub components: Vec<ProductComponents>,
    pub spread: f64,
    pub rho: f64,
    pub breakdown: RewardBreakdown,
    pub business_reward: f64,
    pub product_rewards: Vec<f64>,
    pub cumulants: Vec<Cumulants>,
}

impl StepOutcome {
    pub fn mean_product_reward(&self) -> f64 {
        self.product_rewards.iter().sum::<f64>() / self.product_rewards.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    catalog: ProductCatalog,
    reward: RewardConfig,
}

impl Environment {
    pub fn new(catalog: ProductCatalog, reward: RewardConfig) -> Self {
        Self { catalog, reward }
    }

    pub fn catalog(&self) -> &ProductCatalog {
        &self.catalog
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward
    }

    pub fn num_products(&self) -> usize {
        self.catalog.len()
    }

    /// Critical level in effect for product `i`.
    pub fn critical_level(&self, i: usize) -> f64 {
        self.reward
            .critical_override
            .unwrap_or(self.catalog.product(i).critical_level)
    }

    pub fn step(&self, state: &StoreState, raw_action: &[f64], demand: &[f64]) -> Result<StepOutcome> {
        let p = self.catalog.len();
        check_len("state", p, state.len())?;
        check_len("action", p, raw_action.len())?;
        check_len("demand", p, demand.len())?;

        let requested = dynamics::clip_action(&state.inventory, raw_action);
        let rho = dynamics::capacity_ratio(&self.catalog, &requested);
        let executed = dynamics::enforce_capacity(&requested, rho);
        let stocked = dynamics::apply_replenishment(&state.inventory, &executed);
        let served = dynamics::apply_demand_and_spoilage(
            &stocked,
            demand,
            self.catalog.products().iter().map(|p| p.spoilage_rate),
        );
        let next = served.next_inventory;

        let components: Vec<ProductComponents> = (0..p)
            .map(|i| ProductComponents {
                empty: next[i] == 0.0,
                critical: next[i] < self.critical_level(i),
                waste: served.wasted[i],
                refused: served.refused[i],
            })
            .collect();
        let spread = dynamics::percentile_spread(&next);
        let breakdown = RewardBreakdown::from_components(&components, spread, rho, &self.reward);
        let product_rewards = components
            .iter()
            .map(|c| reward::per_product_reward(c, spread, rho, &self.reward))
            .collect();
        let cumulants = components
            .iter()
            .zip(&next)
            .map(|(c, &x)| reward::cumulants(c, x))
            .collect();

        Ok(StepOutcome {
            next_state: StoreState {
                t: state.t + 1,
                inventory: next,
            },
            requested,
            executed,
            components,
            spread,
            rho,
            business_reward: breakdown.business_reward(),
            breakdown,
            product_rewards,
            cumulants,
        })
    }
}

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}

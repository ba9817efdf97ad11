use serde::{Deserialize, Serialize};

use crate::env::{ForecastState, StoreState};
use crate::error::{Error, Result};

/// Proportional control towards a constant inventory target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicConfig {
    pub target: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self { target: 0.5 }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.target) {
            Ok(())
        } else {
            Err(Error::Config(format!("heuristic target {} outside [0,1]", self.target)))
        }
    }
}

/// `u_i = max(0, x* + Ŵ_i - x_i⁻)`, clipped to the free shelf space. The
/// truck capacity is deliberately ignored.
pub fn heuristic_action(state: &StoreState, forecast: &ForecastState, config: &HeuristicConfig) -> Vec<f64> {
    state
        .inventory
        .iter()
        .enumerate()
        .map(|(i, &x)| order_up_to(x, forecast.forecast(i), config.target))
        .collect()
}

pub fn order_up_to(inventory: f64, forecast: f64, target: f64) -> f64 {
    (target + forecast - inventory).max(0.0).min(1.0 - inventory)
}

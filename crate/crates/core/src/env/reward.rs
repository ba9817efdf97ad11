use serde::{Deserialize, Serialize};

/// Reward shaping knobs. The defaults give the plain business reward; the
/// two optional fields implement the modified rewards used for fine-tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Weight of the capacity-overuse penalty in the per-product reward.
    pub alpha: f64,
    /// Multiplier on the wastage term (1 = unmodified).
    pub wastage_weight: f64,
    /// Replaces every product's critical level when set.
    pub critical_override: Option<f64>,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            wastage_weight: 1.0,
            critical_override: None,
        }
    }
}

/// End-of-period outcome of a single product.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProductComponents {
    pub empty: bool,
    pub critical: bool,
    pub waste: f64,
    pub refused: f64,
}

/// Store-wide penalty terms, each already divided by the product count where
/// the business reward does so. `wastage` includes the configured weight.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub empty: f64,
    pub critical: f64,
    pub wastage: f64,
    pub spread: f64,
    pub refused: f64,
    pub capacity_penalty: f64,
}

impl RewardBreakdown {
    pub fn from_components(
        components: &[ProductComponents],
        spread: f64,
        rho: f64,
        config: &RewardConfig,
    ) -> Self {
        let p = components.len() as f64;
        let (mut empty, mut critical, mut waste, mut refused) = (0.0, 0.0, 0.0, 0.0);
        for c in components {
            empty += f64::from(u8::from(c.empty));
            critical += f64::from(u8::from(c.critical));
            waste += c.waste;
            refused += c.refused;
        }
        Self {
            empty: empty / p,
            critical: critical / p,
            wastage: config.wastage_weight * waste / p,
            spread,
            refused: refused / p,
            capacity_penalty: capacity_penalty(rho, config.alpha),
        }
    }

    /// Business reward: one minus the five store-level penalties. The
    /// capacity penalty is not part of it.
    pub fn business_reward(&self) -> f64 {
        1.0 - self.empty - self.critical - self.wastage - self.spread - self.refused
    }
}

pub fn capacity_penalty(rho: f64, alpha: f64) -> f64 {
    alpha * (rho - 1.0).max(0.0)
}

pub fn business_reward(
    components: &[ProductComponents],
    spread: f64,
    config: &RewardConfig,
) -> f64 {
    RewardBreakdown::from_components(components, spread, 0.0, config).business_reward()
}

/// Reward handed to the agent controlling one product.
pub fn per_product_reward(
    c: &ProductComponents,
    spread: f64,
    rho: f64,
    config: &RewardConfig,
) -> f64 {
    1.0 - f64::from(u8::from(c.empty))
        - f64::from(u8::from(c.critical))
        - config.wastage_weight * c.waste
        - spread
        - c.refused
        - capacity_penalty(rho, config.alpha)
}

/// Auxiliary prediction targets: wastage, stock-out indicator and depletion.
pub type Cumulants = [f64; 3];

pub fn cumulants(c: &ProductComponents, end_inventory: f64) -> Cumulants {
    [
        c.waste,
        if end_inventory == 0.0 { 1.0 } else { 0.0 },
        1.0 - end_inventory,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean() -> ProductComponents {
        ProductComponents::default()
    }

    #[test]
    fn clean_step_scores_one() {
        let cfg = RewardConfig::default();
        assert_eq!(business_reward(&[clean(); 5], 0.0, &cfg), 1.0);
        assert_eq!(per_product_reward(&clean(), 0.0, 0.7, &cfg), 1.0);
    }

    #[test]
    fn one_of_two_empty() {
        let empty = ProductComponents {
            empty: true,
            critical: true,
            ..clean()
        };
        let r = business_reward(&[empty, clean()], 0.0, &RewardConfig::default());
        assert_eq!(r, 0.0);
    }

    #[test]
    fn worst_single_product_case() {
        let c = ProductComponents {
            empty: true,
            critical: true,
            waste: 1.0,
            refused: 1.0,
        };
        assert_eq!(business_reward(&[c], 0.0, &RewardConfig::default()), -3.0);
    }

    #[test]
    fn capacity_penalty_in_product_reward() {
        let r = per_product_reward(&clean(), 0.0, 1.5, &RewardConfig::default());
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wastage_weight_applies_once() {
        let c = ProductComponents {
            waste: 0.05,
            ..clean()
        };
        let cfg = RewardConfig {
            wastage_weight: 4.0,
            ..RewardConfig::default()
        };
        assert!((per_product_reward(&c, 0.0, 0.0, &cfg) - 0.8).abs() < 1e-15);
        assert!((business_reward(&[c], 0.0, &cfg) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn cumulant_examples() {
        assert_eq!(cumulants(&clean(), 0.0), [0.0, 1.0, 1.0]);
        assert_eq!(cumulants(&clean(), 1.0), [0.0, 0.0, 0.0]);
        let c = ProductComponents {
            waste: 0.1,
            ..clean()
        };
        let k = cumulants(&c, 0.3);
        assert_eq!(k[0], 0.1);
        assert_eq!(k[1], 0.0);
        assert!((k[2] - 0.7).abs() < 1e-15);
    }
}

//! Primitive transition pieces: shelf clipping, transport capacity, demand and
//! spoilage, and the cross-product percentile spread.

use super::catalog::ProductCatalog;

/// Normalized replenishment quantities available to the learning agents.
pub const ACTION_SET: [f64; 14] = [
    0.0, 0.005, 0.01, 0.0125, 0.015, 0.0175, 0.02, 0.03, 0.04, 0.08, 0.12, 0.2, 0.5, 1.0,
];

pub const NUM_ACTIONS: usize = ACTION_SET.len();

/// Caps each order at the free shelf space `1 - x⁻`.
pub fn clip_action(inventory: &[f64], raw: &[f64]) -> Vec<f64> {
    inventory
        .iter()
        .zip(raw)
        .map(|(&x, &u)| u.min(1.0 - x).max(0.0))
        .collect()
}

/// `max(vᵀu / v_max, cᵀu / c_max)`.
pub fn capacity_ratio(catalog: &ProductCatalog, u: &[f64]) -> f64 {
    let (vol, wt) = catalog
        .products()
        .iter()
        .zip(u)
        .fold((0.0, 0.0), |(v, c), (p, &q)| (v + p.volume * q, c + p.weight * q));
    (vol / catalog.v_max()).max(wt / catalog.c_max())
}

/// Scales every component by `1/ρ` when the requested orders overflow the truck.
pub fn enforce_capacity(u: &[f64], rho: f64) -> Vec<f64> {
    if rho <= 1.0 {
        u.to_vec()
    } else {
        u.iter().map(|&q| q / rho).collect()
    }
}

/// `x⁺ = x⁻ + u`. The sum is capped at 1 to absorb rounding; anything beyond
/// a rounding error means the order was not clipped upstream.
pub fn apply_replenishment(inventory: &[f64], u: &[f64]) -> Vec<f64> {
    inventory
        .iter()
        .zip(u)
        .map(|(&x, &q)| {
            let next = x + q;
            debug_assert!(next <= 1.0 + 1e-9, "order exceeds shelf: {x} + {q}");
            next.min(1.0)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandOutcome {
    pub next_inventory: Vec<f64>,
    pub sold: Vec<f64>,
    pub wasted: Vec<f64>,
    pub refused: Vec<f64>,
}

/// Serves demand from `x⁺`, loses whatever cannot be served, then spoils a
/// fraction `δ_i` of what is left on the shelf.
pub fn apply_demand_and_spoilage(
    after_replenishment: &[f64],
    demand: &[f64],
    spoilage: impl IntoIterator<Item = f64>,
) -> DemandOutcome {
    let p = after_replenishment.len();
    let mut out = DemandOutcome {
        next_inventory: Vec::with_capacity(p),
        sold: Vec::with_capacity(p),
        wasted: Vec::with_capacity(p),
        refused: Vec::with_capacity(p),
    };
    for ((&x, &w), delta) in after_replenishment.iter().zip(demand).zip(spoilage) {
        let residual = (x - w).max(0.0);
        let waste = delta * residual;
        out.sold.push(w.min(x));
        out.refused.push((w - x).max(0.0));
        out.wasted.push(waste);
        out.next_inventory.push(residual - waste);
    }
    out
}

/// Percentile by linear interpolation between closest ranks: the rank of the
/// k-th smallest of `n` values (1-based) is `(k - 0.5) / n`. Values outside
/// the first/last rank clamp to the extremes. `sorted` must be ascending.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "percentile of empty set");
    let pos = q * n as f64 + 0.5; // 1-based fractional rank
    if pos <= 1.0 {
        return sorted[0];
    }
    if pos >= n as f64 {
        return sorted[n - 1];
    }
    let lower = pos.floor();
    let frac = pos - lower;
    let k = lower as usize - 1;
    sorted[k] + frac * (sorted[k + 1] - sorted[k])
}

/// 95th minus 5th percentile of the inventory levels.
pub fn percentile_spread(inventory: &[f64]) -> f64 {
    if inventory.len() < 2 {
        return 0.0;
    }
    let mut sorted = inventory.to_vec();
    sorted.sort_by(f64::total_cmp);
    (percentile_sorted(&sorted, 0.95) - percentile_sorted(&sorted, 0.05)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::catalog::Product;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    fn catalog(v: &[f64], c: &[f64], v_max: f64, c_max: f64) -> ProductCatalog {
        let products = v
            .iter()
            .zip(c)
            .map(|(&volume, &weight)| Product {
                max_shelf: 10.0,
                volume,
                weight,
                spoilage_rate: 0.1,
                critical_level: 0.05,
            })
            .collect();
        ProductCatalog::new(products, v_max, c_max).unwrap()
    }

    #[test]
    fn action_set_is_sorted_and_normalized() {
        assert_eq!(NUM_ACTIONS, 14);
        assert!(ACTION_SET.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ACTION_SET[0], 0.0);
        assert_eq!(ACTION_SET[13], 1.0);
    }

    #[test]
    fn clip_examples() {
        assert!(close(clip_action(&[0.9], &[0.5])[0], 0.1));
        assert_eq!(clip_action(&[0.0], &[1.0]), vec![1.0]);
        assert_eq!(clip_action(&[0.5], &[0.2]), vec![0.2]);
    }

    #[test]
    fn capacity_ratio_examples() {
        let cat = catalog(&[2.0], &[1.0], 1.0, 1.0);
        assert_eq!(capacity_ratio(&cat, &[0.0]), 0.0);
        assert_eq!(capacity_ratio(&cat, &[0.5]), 1.0);
        let cat = catalog(&[1.0, 1.0], &[1.0, 1.0], 1.0, 2.0);
        assert_eq!(capacity_ratio(&cat, &[1.0, 1.0]), 2.0);
    }

    #[test]
    fn enforce_capacity_examples() {
        assert_eq!(enforce_capacity(&[0.2, 0.2], 0.8), vec![0.2, 0.2]);
        assert_eq!(enforce_capacity(&[0.4, 0.4], 2.0), vec![0.2, 0.2]);
        assert_eq!(enforce_capacity(&[0.5], 1.0), vec![0.5]);
    }

    #[test]
    fn enforced_orders_hit_capacity_exactly() {
        let cat = catalog(&[1.0, 3.0], &[2.0, 0.5], 0.7, 0.9);
        let u = [0.6, 0.4];
        let rho = capacity_ratio(&cat, &u);
        assert!(rho > 1.0);
        let scaled = enforce_capacity(&u, rho);
        assert!((capacity_ratio(&cat, &scaled) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn replenishment_examples() {
        assert!(close(apply_replenishment(&[0.5], &[0.3])[0], 0.8));
        assert_eq!(apply_replenishment(&[0.0], &[0.0]), vec![0.0]);
        let x = apply_replenishment(&[0.1, 0.9], &[0.2, 0.1]);
        assert!(close(x[0], 0.3) && close(x[1], 1.0));
    }

    #[test]
    fn demand_examples() {
        let o = apply_demand_and_spoilage(&[0.2], &[0.5], [0.1]);
        assert_eq!(o.next_inventory, vec![0.0]);
        assert_eq!(o.wasted, vec![0.0]);
        assert!(close(o.refused[0], 0.3));

        let o = apply_demand_and_spoilage(&[1.0], &[0.0], [0.1]);
        assert!(close(o.next_inventory[0], 0.9));
        assert!(close(o.wasted[0], 0.1));
        assert_eq!(o.refused[0], 0.0);

        let o = apply_demand_and_spoilage(&[0.6], &[0.2], [0.25]);
        assert!(close(o.next_inventory[0], 0.3));
        assert!(close(o.wasted[0], 0.1));
        assert_eq!(o.refused[0], 0.0);
    }

    #[test]
    fn spread_examples() {
        assert_eq!(percentile_spread(&[0.4; 7]), 0.0);
        assert_eq!(percentile_spread(&[0.7]), 0.0);
        let x: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        assert!((percentile_spread(&x) - 0.90).abs() < 1e-12);
    }

    #[test]
    fn percentile_clamps_to_extremes() {
        let s = [0.1, 0.2, 0.3];
        assert_eq!(percentile_sorted(&s, 0.0), 0.1);
        assert_eq!(percentile_sorted(&s, 1.0), 0.3);
        // rank of the middle element is (2 - 0.5)/3 = 0.5
        assert!(close(percentile_sorted(&s, 0.5), 0.2));
    }
}

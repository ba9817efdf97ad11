use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static metadata of one product.
///
/// `volume` and `weight` are expressed per *normalized* unit, i.e. the
/// volume/weight of a full shelf of the product. `max_shelf` is the shelf
/// size in item units and is only used to convert raw demand into
/// normalized units when a dataset is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub max_shelf: f64,
    pub volume: f64,
    pub weight: f64,
    pub spoilage_rate: f64,
    pub critical_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCatalog {
    products: Vec<Product>,
    v_max: f64,
    c_max: f64,
}

impl ProductCatalog {
    pub fn new(products: Vec<Product>, v_max: f64, c_max: f64) -> Result<Self> {
        let catalog = Self {
            products,
            v_max,
            c_max,
        };
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn validate(&self) -> Result<()> {
        if self.products.is_empty() {
            return Err(Error::InvalidCatalog("no products".into()));
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            return Err(Error::InvalidCatalog(format!("v_max must be > 0, got {}", self.v_max)));
        }
        if !(self.c_max.is_finite() && self.c_max > 0.0) {
            return Err(Error::InvalidCatalog(format!("c_max must be > 0, got {}", self.c_max)));
        }
        for (i, p) in self.products.iter().enumerate() {
            let bad = |what: &str, v: f64| {
                Err(Error::InvalidCatalog(format!("product {i}: {what} out of range ({v})")))
            };
            if !(p.max_shelf.is_finite() && p.max_shelf > 0.0) {
                return bad("max_shelf", p.max_shelf);
            }
            if !(p.volume.is_finite() && p.volume > 0.0) {
                return bad("volume", p.volume);
            }
            if !(p.weight.is_finite() && p.weight > 0.0) {
                return bad("weight", p.weight);
            }
            if !(p.spoilage_rate > 0.0 && p.spoilage_rate <= 1.0) {
                return bad("spoilage_rate", p.spoilage_rate);
            }
            if !(p.critical_level > 0.0 && p.critical_level < 1.0) {
                return bad("critical_level", p.critical_level);
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }

    pub fn products(&self) -> &[Product] {
        &self.products
    }

    pub fn product(&self, i: usize) -> &Product {
        &self.products[i]
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn volumes(&self) -> impl Iterator<Item = f64> + '_ {
        self.products.iter().map(|p| p.volume)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.products.iter().map(|p| p.weight)
    }

    pub fn max_volume(&self) -> f64 {
        self.volumes().fold(f64::MIN, f64::max)
    }

    pub fn max_weight(&self) -> f64 {
        self.weights().fold(f64::MIN, f64::max)
    }

    /// Largest inverse spoilage rate, the normalizer of the shelf-life feature.
    pub fn max_shelf_life(&self) -> f64 {
        self.products
            .iter()
            .map(|p| 1.0 / p.spoilage_rate)
            .fold(f64::MIN, f64::max)
    }

    pub fn mean_critical_level(&self) -> f64 {
        self.products.iter().map(|p| p.critical_level).sum::<f64>() / self.len() as f64
    }
}

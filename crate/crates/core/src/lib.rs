//! Inventory-replenishment reinforcement-learning laboratory.
//!
//! - [`env`]: the multi-product store simulator and its reward signals.
//! - [`datagen`]: synthetic catalogs, demand series and the dataset file format.
//! - [`nn`]: the small multi-head MLP with hand-written backpropagation.
//! - [`agents`]: DQN with general value function heads and directed exploration.
//! - [`baselines`]: proportional-control heuristic and the perfect-information LP bound.
//! - [`harness`]: experiment orchestration, metrics CSVs, heatmaps and summaries.

pub mod agents;
pub mod baselines;
pub mod datagen;
pub mod env;
pub mod episode;
pub mod error;
pub mod harness;
pub mod nn;

pub use error::{Error, Result};

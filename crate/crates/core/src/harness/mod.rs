//! Experiment orchestration: seeded campaigns, run directories with
//! manifests and metrics CSVs, transfer evaluation, heatmaps, fine-tuning
//! and summary tables.

pub mod config;
pub mod csv_io;
pub mod heatmap;
pub mod run;
pub mod summary;

pub use config::{sha256_file, sha256_hex, Algorithm, ExperimentConfig, FinetuneConfig, LpConfig};
pub use heatmap::{extract_heatmaps, HeatmapGrid, HeatmapSet};
pub use run::{
    evaluate_transfer, rerun_from_manifest, run_experiment, run_finetune_suite, Manifest, RewardMod, RunOutput,
};
pub use summary::{mean_ci, summarize, Summary};

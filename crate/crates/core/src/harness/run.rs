//! Run directories.
//!
//! ```text
//! <run>/manifest.json
//! <run>/config.toml
//! <run>/train_metrics.csv
//! <run>/test_metrics.csv
//! <run>/lp_bound.csv          (lp_bound runs)
//! <run>/timings.csv           (wall clock, excluded from reproducibility)
//! <run>/checkpoints/seed-<s>.json
//! <run>/decisions/seed-<s>.csv (with log_decisions)
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{sha256_file, Algorithm, ExperimentConfig};
use super::csv_io::{
    read_rows, write_rows, DecisionRow, FinetuneRow, LpRow, MetricsRow, TimingRow, CSV_SCHEMA_VERSION,
};
use crate::agents::{fine_tune, run_episode, Agent, AgentCheckpoint, EpisodeMode, Rollout};
use crate::baselines::lp::SolveOptions;
use crate::baselines::perfect_info::time_limit;
use crate::baselines::{heuristic_action, lp_upper_bound};
use crate::datagen::{self, initial_inventories, Dataset, Window, EVAL_EPISODE};
use crate::env::{Environment, RewardConfig};
use crate::episode::{simulate, DecisionRecord, EpisodeStats};
use crate::error::{Error, Result};

pub const RUN_FORMAT: &str = "shelfwise-run";
pub const RUN_VERSION: u32 = 1;

/// Stream offset of fine-tuning episodes' initial inventories.
pub const FINETUNE_EPISODE: u64 = 1 << 41;

pub const TRAIN_METRICS: &str = "train_metrics.csv";
pub const TEST_METRICS: &str = "test_metrics.csv";
pub const LP_BOUND: &str = "lp_bound.csv";
pub const TIMINGS: &str = "timings.csv";
pub const FINETUNE: &str = "finetune.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub crate_version: String,
    pub csv_schema: u32,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    /// Dataset file stem, used to label transfer results.
    pub dataset_name: String,
    pub dataset_path: PathBuf,
    pub dataset_sha256: String,
    pub config_sha256: String,
    /// The full config; re-running it reproduces every metrics CSV.
    pub config_toml: String,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn load(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.format != RUN_FORMAT || m.version != RUN_VERSION {
            return Err(Error::InconsistentRuns(format!(
                "{}: unsupported manifest {} v{}",
                path.display(),
                m.format,
                m.version
            )));
        }
        if m.csv_schema != CSV_SCHEMA_VERSION {
            return Err(Error::InconsistentRuns(format!(
                "{}: csv schema {} but this build writes {}",
                path.display(),
                m.csv_schema,
                CSV_SCHEMA_VERSION
            )));
        }
        Ok(m)
    }

    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(&self.config_toml)
    }

    pub fn checkpoint_path(run_dir: &Path, seed: u64) -> PathBuf {
        run_dir.join("checkpoints").join(format!("seed-{seed}.json"))
    }

    pub fn decisions_path(run_dir: &Path, seed: u64) -> PathBuf {
        run_dir.join("decisions").join(format!("seed-{seed}.csv"))
    }
}

/// Everything a run wrote, in memory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub train: Vec<MetricsRow>,
    pub test: Vec<MetricsRow>,
    pub lp: Vec<LpRow>,
}

impl RunOutput {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = Manifest::load(dir)?;
        let read = |name: &str| -> Result<Vec<MetricsRow>> {
            let p = dir.join(name);
            if p.exists() {
                read_rows(&p)
            } else {
                Ok(Vec::new())
            }
        };
        let lp_path = dir.join(LP_BOUND);
        Ok(Self {
            dir: dir.to_path_buf(),
            train: read(TRAIN_METRICS)?,
            test: read(TEST_METRICS)?,
            lp: if lp_path.exists() { read_rows(&lp_path)? } else { Vec::new() },
            manifest,
        })
    }
}

#[derive(Default)]
struct SeedResult {
    train: Vec<MetricsRow>,
    test: Vec<MetricsRow>,
    lp: Vec<LpRow>,
    timings: Vec<TimingRow>,
    checkpoint: Option<AgentCheckpoint>,
    decisions: Option<Vec<DecisionRecord>>,
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Trains (where applicable) and tests `config.algorithm` on every seed and
/// writes the run directory `out`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    config.validate()?;
    let dataset = datagen::load(&config.dataset)?;
    let dataset_sha256 = sha256_file(&config.dataset)?;
    let env = Environment::new(dataset.catalog.clone(), config.reward);

    let results: Vec<Result<SeedResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .seeds
            .iter()
            .map(|&seed| {
                let (env, dataset) = (&env, &dataset);
                scope.spawn(move || run_seed(config, env, dataset, seed))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Config("seed worker panicked".into()))))
            .collect()
    });

    create_dir(out)?;
    let mut all = SeedResult::default();
    let mut artifacts = vec!["config.toml".to_string(), TIMINGS.to_string()];
    for (seed, r) in config.seeds.iter().zip(results) {
        let r = r?;
        if let Some(ckpt) = &r.checkpoint {
            let path = Manifest::checkpoint_path(out, *seed);
            create_dir(path.parent().unwrap_or(out))?;
            let text = serde_json::to_string(ckpt)?;
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            artifacts.push(format!("checkpoints/seed-{seed}.json"));
        }
        if let Some(log) = &r.decisions {
            let path = Manifest::decisions_path(out, *seed);
            create_dir(path.parent().unwrap_or(out))?;
            let rows: Vec<DecisionRow> = log.iter().map(DecisionRow::from).collect();
            write_rows(&path, &rows)?;
            artifacts.push(format!("decisions/seed-{seed}.csv"));
        }
        all.train.extend(r.train);
        all.test.extend(r.test);
        all.lp.extend(r.lp);
        all.timings.extend(r.timings);
    }
    if config.algorithm == Algorithm::LpBound {
        write_rows(&out.join(LP_BOUND), &all.lp)?;
        artifacts.push(LP_BOUND.into());
    } else {
        write_rows(&out.join(TRAIN_METRICS), &all.train)?;
        write_rows(&out.join(TEST_METRICS), &all.test)?;
        artifacts.push(TRAIN_METRICS.into());
        artifacts.push(TEST_METRICS.into());
    }
    write_rows(&out.join(TIMINGS), &all.timings)?;
    let config_toml = config.to_toml()?;
    let config_path = out.join("config.toml");
    fs::write(&config_path, &config_toml).map_err(|e| Error::io(&config_path, e))?;
    artifacts.sort();

    let manifest = Manifest {
        format: RUN_FORMAT.into(),
        version: RUN_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").into(),
        csv_schema: CSV_SCHEMA_VERSION,
        algorithm: config.algorithm,
        seeds: config.seeds.clone(),
        episodes: config.episodes,
        dataset_name: dataset_name(&config.dataset),
        dataset_path: config.dataset.clone(),
        dataset_sha256,
        config_sha256: config.hash()?,
        config_toml,
        artifacts,
    };
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(RunOutput {
        dir: out.to_path_buf(),
        manifest,
        train: all.train,
        test: all.test,
        lp: all.lp,
    })
}

fn run_seed(config: &ExperimentConfig, env: &Environment, dataset: &Dataset, seed: u64) -> Result<SeedResult> {
    let p = dataset.num_products();
    let fw = config.forecast_window;
    let mut out = SeedResult::default();
    let eval_init = initial_inventories(p, seed, EVAL_EPISODE);
    let mut log = config.log_decisions.then(Vec::new);
    let timed = |phase: &str, episode: Option<usize>, started: Instant| TimingRow {
        seed,
        phase: phase.into(),
        episode,
        seconds: started.elapsed().as_secs_f64(),
    };

    match config.algorithm {
        Algorithm::Heuristic => {
            let h = config.heuristic;
            let policy = |s: &_, f: &_, _| Ok(heuristic_action(s, f, &h));
            let started = Instant::now();
            let train = simulate(env, dataset, dataset.train_window(), initial_inventories(p, seed, 0), fw, policy, None, None)?;
            out.timings.push(timed("train", Some(0), started));
            out.train.push(MetricsRow::new(seed, 0, 0.0, &train));
            let started = Instant::now();
            let test = simulate(env, dataset, dataset.test_window(), eval_init, fw, policy, log.as_mut(), None)?;
            out.timings.push(timed("test", None, started));
            out.test.push(MetricsRow::new(seed, 0, 0.0, &test));
        }
        Algorithm::LpBound => {
            let options = SolveOptions {
                backend: config.lp.backend,
                max_iters: config.lp.max_iters,
                time_limit: time_limit(config.lp.time_limit_secs),
            };
            let mut windows = vec![("test", dataset.test_window(), eval_init)];
            if config.lp.include_train {
                windows.insert(0, ("train", dataset.train_window(), initial_inventories(p, seed, 0)));
            }
            for (name, window, init) in windows {
                let started = Instant::now();
                let (b, _) = lp_upper_bound(env, &init, dataset.rows(window), &options)?;
                out.timings.push(timed(&format!("lp_{name}"), None, started));
                out.lp.push(LpRow {
                    seed,
                    window: name.into(),
                    status: b.status,
                    periods: b.periods,
                    bound: b.bound,
                    replay_reward: b.replay_reward,
                    replay_surrogate: b.replay_surrogate,
                    iterations: b.iterations,
                });
            }
        }
        alg => {
            let variant = alg.variant().expect("learning algorithm");
            let mut agent = Agent::new(variant, config.agent.clone(), seed)?;
            let schedule = config.agent.schedule(config.episodes);
            let train = Rollout {
                env,
                dataset,
                window: dataset.train_window(),
                forecast_window: fw,
            };
            for e in 0..config.episodes {
                let epsilon = schedule.epsilon(e);
                let started = Instant::now();
                let s = run_episode(&mut agent, &train, initial_inventories(p, seed, e as u64), EpisodeMode::Train { epsilon }, None)?;
                out.timings.push(timed("train", Some(e), started));
                out.train.push(MetricsRow::new(seed, e, epsilon, &s));
            }
            let test = Rollout {
                window: dataset.test_window(),
                ..train
            };
            let started = Instant::now();
            let s = run_episode(&mut agent, &test, eval_init, EpisodeMode::Eval, log.as_mut())?;
            out.timings.push(timed("test", None, started));
            out.test.push(MetricsRow::new(seed, config.episodes, 0.0, &s));
            out.checkpoint = Some(agent.to_checkpoint());
        }
    }
    out.decisions = log;
    Ok(out)
}

/// Re-executes the run described by `run_dir`'s manifest into `out`.
pub fn rerun_from_manifest(run_dir: &Path, out: &Path) -> Result<RunOutput> {
    let m = Manifest::load(run_dir)?;
    let config = m.config()?;
    let sha = sha256_file(&config.dataset)?;
    if sha != m.dataset_sha256 {
        return Err(Error::InconsistentRuns(format!(
            "dataset {} changed since the run (sha256 {sha}, manifest {})",
            config.dataset.display(),
            m.dataset_sha256
        )));
    }
    run_experiment(&config, out)
}

/// Greedy evaluation of `agent` on the test window of `dataset`, starting
/// from the evaluation inventories of `seed`.
pub fn evaluate_transfer(
    agent: &mut Agent,
    dataset: &Dataset,
    reward: RewardConfig,
    forecast_window: usize,
    seed: u64,
    log: Option<&mut Vec<DecisionRecord>>,
) -> Result<EpisodeStats> {
    let env = Environment::new(dataset.catalog.clone(), reward);
    let rollout = Rollout {
        env: &env,
        dataset,
        window: dataset.test_window(),
        forecast_window,
    };
    let init = initial_inventories(dataset.num_products(), seed, EVAL_EPISODE);
    run_episode(agent, &rollout, init, EpisodeMode::Eval, log)
}

/// Loads the checkpoint of `seed` from a learning run.
pub fn load_checkpoint(run_dir: &Path, seed: u64) -> Result<Agent> {
    let path = Manifest::checkpoint_path(run_dir, seed);
    if !path.exists() {
        return Err(Error::Checkpoint(format!("missing checkpoint {}", path.display())));
    }
    Agent::load(&path, seed)
}

/// Evaluates every checkpoint of `run_dir` on the test window of the dataset
/// at `foreign`, one row per seed.
pub fn transfer_run(run_dir: &Path, foreign: &Path) -> Result<Vec<MetricsRow>> {
    let m = Manifest::load(run_dir)?;
    if m.algorithm.variant().is_none() {
        return Err(Error::Checkpoint(format!("{} runs have no checkpoints", m.algorithm.name())));
    }
    let config = m.config()?;
    let dataset = datagen::load(foreign)?;
    m.seeds
        .iter()
        .map(|&seed| {
            let mut agent = load_checkpoint(run_dir, seed)?;
            let s = evaluate_transfer(&mut agent, &dataset, config.reward, config.forecast_window, seed, None)?;
            Ok(MetricsRow::new(seed, agent.episodes_done(), 0.0, &s))
        })
        .collect()
}

/// File a transfer evaluation onto `foreign` is stored under.
pub fn transfer_file_name(foreign: &Path) -> String {
    format!("transfer-{}.csv", dataset_name(foreign))
}

/// One modified reward for fine-tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMod {
    pub name: String,
    pub reward: RewardConfig,
}

impl RewardMod {
    /// The two modifications of the fine-tuning study, applied on top of
    /// `base`.
    pub fn standard(base: RewardConfig, finetune: &super::FinetuneConfig) -> Vec<RewardMod> {
        vec![
            RewardMod {
                name: "wastage".into(),
                reward: RewardConfig {
                    wastage_weight: base.wastage_weight * finetune.wastage_factor,
                    ..base
                },
            },
            RewardMod {
                name: "critical".into(),
                reward: RewardConfig {
                    critical_override: Some(finetune.critical_level),
                    ..base
                },
            },
        ]
    }
}

/// Fine-tunes every checkpoint of every run under each modification and
/// writes `finetune.csv` into `out`. Rows are ordered by run, seed and
/// modification.
pub fn run_finetune_suite(run_dirs: &[PathBuf], mods: Option<&[RewardMod]>, out: &Path) -> Result<Vec<FinetuneRow>> {
    let mut rows = Vec::new();
    for dir in run_dirs {
        let m = Manifest::load(dir)?;
        let Some(_) = m.algorithm.variant() else {
            return Err(Error::Checkpoint(format!(
                "{}: {} runs cannot be fine-tuned",
                dir.display(),
                m.algorithm.name()
            )));
        };
        let config = m.config()?;
        let standard;
        let mods = match mods {
            Some(mods) => mods,
            None => {
                standard = RewardMod::standard(config.reward, &config.finetune);
                &standard
            }
        };
        let dataset = datagen::load(&config.dataset)?;
        let p = dataset.num_products();
        let jobs: Vec<(u64, &RewardMod)> = m.seeds.iter().flat_map(|&s| mods.iter().map(move |md| (s, md))).collect();
        let results: Vec<Result<Vec<FinetuneRow>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .iter()
                .map(|&(seed, md)| {
                    let (dataset, config, alg) = (&dataset, &config, m.algorithm);
                    scope.spawn(move || {
                        let mut agent = load_checkpoint(dir, seed)?;
                        let env = Environment::new(dataset.catalog.clone(), md.reward);
                        let rollout = Rollout {
                            env: &env,
                            dataset,
                            window: dataset.train_window(),
                            forecast_window: config.forecast_window,
                        };
                        let curve = fine_tune(&mut agent, &rollout, config.finetune.episodes, config.finetune.epsilon, |e| {
                            initial_inventories(p, seed, FINETUNE_EPISODE + e as u64)
                        })?;
                        Ok(curve
                            .iter()
                            .enumerate()
                            .map(|(e, s)| FinetuneRow::new(&md.name, alg.name(), seed, e, s))
                            .collect())
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Config("fine-tune worker panicked".into()))))
                .collect()
        });
        for r in results {
            rows.extend(r?);
        }
    }
    create_dir(out)?;
    write_rows(&out.join(FINETUNE), &rows)?;
    Ok(rows)
}

/// Reads the decision logs of a run, one vector per seed.
pub fn load_decisions(run_dir: &Path) -> Result<Vec<Vec<DecisionRecord>>> {
    let m = Manifest::load(run_dir)?;
    m.seeds
        .iter()
        .map(|&seed| {
            let path = Manifest::decisions_path(run_dir, seed);
            if !path.exists() {
                return Err(Error::Empty("decision log (run with log_decisions = true)"));
            }
            let rows: Vec<DecisionRow> = read_rows(&path)?;
            Ok(rows.iter().map(DecisionRecord::from).collect())
        })
        .collect()
}

/// Window helper for callers that evaluate arbitrary spans.
pub fn window_of(dataset: &Dataset, name: &str) -> Result<Window> {
    match name {
        "train" => Ok(dataset.train_window()),
        "test" => Ok(dataset.test_window()),
        other => Err(Error::Config(format!("unknown window `{other}` (train|test)"))),
    }
}

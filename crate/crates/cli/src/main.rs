use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shelfwise::datagen::{self, DatasetSpec};
use shelfwise::harness::csv_io::{write_rows, MetricsRow};
use shelfwise::harness::run::{load_decisions, transfer_file_name, transfer_run};
use shelfwise::harness::{
    extract_heatmaps, rerun_from_manifest, run_experiment, run_finetune_suite, summarize, Algorithm, ExperimentConfig,
    Manifest, RunOutput,
};
use shelfwise::{Error, Result};

#[derive(Parser)]
#[command(name = "shelfwise", version, about = "Multi-product replenishment RL laboratory")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML config: an experiment config, or a dataset spec for `datagen`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Single seed (overrides the config's seed list).
    #[arg(long, global = true, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Seed list, e.g. `0,1,2` or `0..5`.
    #[arg(long, global = true, value_parser = parse_seeds)]
    seeds: Option<SeedList>,
    /// Output file (datagen) or directory (everything else).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Global {
    fn seed_list(&self) -> Option<Vec<u64>> {
        self.seed.map(|s| vec![s]).or_else(|| self.seeds.clone().map(|s| s.0))
    }

    fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::Config("--out is required for this command".into()))
    }

    fn experiment(&self) -> Result<ExperimentConfig> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| Error::Config("--config <experiment.toml> is required".into()))?;
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seeds) = self.seed_list() {
            cfg.seeds = seeds;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset file.
    Datagen {
        #[arg(long)]
        products: Option<usize>,
        /// Capacity as a fraction of mean demanded volume/weight, in (0,1).
        #[arg(long)]
        tightness: Option<f64>,
    },
    /// Train and test an algorithm on every seed; writes a run directory.
    Train {
        #[arg(long)]
        algorithm: Option<String>,
        #[arg(long)]
        episodes: Option<usize>,
        /// Re-execute the run recorded in this run directory's manifest.
        #[arg(long, conflicts_with = "config")]
        from_manifest: Option<PathBuf>,
    },
    /// Greedy evaluation of a run's checkpoints on a dataset's test window.
    Eval {
        #[arg(long)]
        run: PathBuf,
        /// Defaults to the run's own dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Evaluate a run's checkpoints on a foreign dataset; stores
    /// `transfer-<dataset>.csv` in the run directory (or --out).
    Transfer {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Policy and GVF heatmaps from a run's decision logs.
    Heatmap {
        #[arg(long)]
        run: PathBuf,
    },
    /// Fine-tune checkpoints under the modified rewards.
    Finetune {
        #[arg(long = "run", required = true)]
        runs: Vec<PathBuf>,
    },
    /// Perfect-information LP bound on the test window.
    LpBound {
        /// Dataset to bound when no --config is given.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Solver wall-clock budget in seconds; expiry reports DNF.
        #[arg(long)]
        time_limit: Option<f64>,
    },
    /// Table of train/test means with 95% intervals plus the transfer matrix.
    Summarize { runs: Vec<PathBuf> },
}

#[derive(Debug, Clone)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    parse_seed_values(s).map(SeedList)
}

fn parse_seed_values(s: &str) -> std::result::Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
        if a >= b {
            return Err(format!("empty seed range {s}"));
        }
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| format!("bad seed `{t}`: {e}")))
        .collect()
}

fn print_run(run: &RunOutput) {
    println!(
        "{} on {}: {} seeds -> {}",
        run.manifest.algorithm.name(),
        run.manifest.dataset_name,
        run.manifest.seeds.len(),
        run.dir.display()
    );
    for r in &run.test {
        println!("  seed {:>3}  test business reward {:.4}", r.seed, r.business_reward);
    }
    for r in &run.lp {
        println!("  seed {:>3}  {} window LP bound {}", r.seed, r.window, r.display_bound());
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Datagen { products, tightness } => {
            let mut spec = match &g.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                    toml::from_str::<DatasetSpec>(&text).map_err(|e| Error::Config(e.to_string()))?
                }
                None => DatasetSpec::default(),
            };
            if let Some(p) = products {
                spec.products = p;
            }
            if let Some(t) = tightness {
                spec.tightness = t;
            }
            if let Some(s) = g.seed {
                spec.seed = s;
            }
            let out = g.out()?;
            let d = datagen::generate(&spec)?;
            datagen::save(&d, out)?;
            println!(
                "wrote {} ({} products x {} periods, v_max {:.4}, c_max {:.4})",
                out.display(),
                d.num_products(),
                d.header.horizon,
                d.catalog.v_max(),
                d.catalog.c_max()
            );
        }
        Command::Train {
            algorithm,
            episodes,
            from_manifest,
        } => {
            let out = g.out()?;
            let run = if let Some(dir) = from_manifest {
                rerun_from_manifest(&dir, out)?
            } else {
                let mut cfg = g.experiment()?;
                if let Some(a) = algorithm {
                    cfg.algorithm = Algorithm::parse(&a)?;
                }
                if let Some(e) = episodes {
                    cfg.episodes = e;
                }
                run_experiment(&cfg, out)?
            };
            print_run(&run);
        }
        Command::Eval { run, dataset } => {
            let m = Manifest::load(&run)?;
            let dataset = match dataset {
                Some(d) => d,
                None => m.config()?.dataset,
            };
            let rows = transfer_run(&run, &dataset)?;
            let path = g.out.clone().unwrap_or_else(|| run.clone()).join("eval.csv");
            write_rows(&path, &rows)?;
            report(&rows, &path);
        }
        Command::Transfer { run, dataset } => {
            let rows = transfer_run(&run, &dataset)?;
            let path = g.out.clone().unwrap_or_else(|| run.clone()).join(transfer_file_name(&dataset));
            write_rows(&path, &rows)?;
            report(&rows, &path);
        }
        Command::Heatmap { run } => {
            let logs = load_decisions(&run)?;
            let set = extract_heatmaps(&logs)?;
            let out = g.out.clone().unwrap_or_else(|| run.join("heatmaps"));
            set.write(&out)?;
            for grid in set.grids() {
                println!("{}: {} decisions in {} populated cells", grid.name, grid.total(), grid.populated());
            }
            println!("wrote {}", out.display());
        }
        Command::Finetune { runs } => {
            let out = g.out()?;
            let rows = run_finetune_suite(&runs, None, out)?;
            println!("wrote {} rows to {}", rows.len(), out.join("finetune.csv").display());
        }
        Command::LpBound { dataset, time_limit } => {
            let mut cfg = match (&g.config, dataset) {
                (Some(_), _) => g.experiment()?,
                (None, Some(d)) => {
                    let mut c = ExperimentConfig::new(d, Algorithm::LpBound);
                    if let Some(seeds) = g.seed_list() {
                        c.seeds = seeds;
                    }
                    c
                }
                (None, None) => return Err(Error::Config("lp-bound needs --config or --dataset".into())),
            };
            cfg.algorithm = Algorithm::LpBound;
            if time_limit.is_some() {
                cfg.lp.time_limit_secs = time_limit;
            }
            let run = run_experiment(&cfg, g.out()?)?;
            print_run(&run);
        }
        Command::Summarize { runs } => {
            let s = summarize(&runs)?;
            print!("{}", s.table_csv());
            println!();
            print!("{}", s.transfer_csv());
            if let Some(out) = &g.out {
                s.write(out)?;
            }
        }
    }
    Ok(())
}

fn report(rows: &[MetricsRow], path: &Path) {
    for r in rows {
        println!("  seed {:>3}  business reward {:.4}", r.seed, r.business_reward);
    }
    println!("wrote {}", path.display());
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seed_values("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seed_values("4, 7").unwrap(), vec![4, 7]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from(["shelfwise", "--seeds", "0..2", "--out", "o", "summarize", "a", "b"]).unwrap();
        assert_eq!(cli.global.seed_list(), Some(vec![0, 1]));
    }
}

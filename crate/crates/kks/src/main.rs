//! Thin command-line front end: generate puzzles, solve/certify them, run
//! experiment batches, and emit analysis reports.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use kks::agents::RemoteSettings;
use kks::engine::OrderPolicy;
use kks::experiment::{self, BatchOptions, ExperimentConfig};
use kks::generator::{self, GenConfig};
use kks::solver;

#[derive(Parser)]
#[command(
    name = "kks",
    version,
    about = "Knight-Knave-Spy puzzles and multi-agent debate experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset of certified puzzles (line-delimited JSON).
    Generate {
        /// Comma-separated player counts, e.g. 4,5,6,7,8,9
        #[arg(long, default_value = "4,5,6,7,8,9", value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Puzzles per size.
        #[arg(long, default_value_t = 300)]
        per_size: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output puzzle file.
        #[arg(long, default_value = "puzzles.jsonl")]
        out: PathBuf,
        /// Also write the plain-text game-info rendering here.
        #[arg(long)]
        text: Option<PathBuf>,
    },
    /// Solve puzzles from a file and certify uniqueness.
    Solve {
        #[arg(long)]
        puzzles: PathBuf,
        /// Only this puzzle id.
        #[arg(long)]
        id: Option<String>,
        /// Player-count cap for the enumeration.
        #[arg(long, default_value_t = solver::DEFAULT_PLAYER_CAP)]
        cap: usize,
    },
    /// Run an experiment batch (resumable).
    Run {
        /// Flat key=value config file overriding anchor defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Forbid any network use; scripted agents only.
        #[arg(long)]
        offline: bool,
        #[arg(long)]
        concurrency: Option<usize>,
    },
    /// Compute per-game and aggregate metric CSVs from a run directory.
    Analyze {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run directory holding manifest, puzzles, and transcripts.
        #[arg(long)]
        run_dir: PathBuf,
        /// Where to write CSVs (defaults to the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the full report: metrics, initial-vs-final table, transitions,
    /// correction rates, and regressions.
    Report {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Generate {
            sizes,
            per_size,
            seed,
            out,
            text,
        } => {
            if sizes.is_empty() {
                bail!("--sizes must not be empty");
            }
            // fail fast on an invalid single-size config before the long build
            GenConfig::new(sizes[0], seed).validate()?;
            let dataset = generator::build_dataset(&sizes, per_size, seed)?;
            generator::write_puzzles(&out, &dataset)?;
            if let Some(text_path) = &text {
                generator::write_puzzles_text(text_path, &dataset)?;
            }
            println!("wrote {} puzzles to {}", dataset.len(), out.display());
        }
        Command::Solve { puzzles, id, cap } => {
            let all = generator::read_puzzles(&puzzles)?;
            let selected: Vec<_> = all
                .into_iter()
                .filter(|p| id.as_ref().is_none_or(|want| &p.id == want))
                .collect();
            if selected.is_empty() {
                bail!("no matching puzzles");
            }
            for puzzle in &selected {
                let result = solver::solve_with_cap(puzzle, cap)?;
                print!(
                    "{}: {} solution(s), {} worlds checked, {:?}",
                    puzzle.id,
                    result.solutions.len(),
                    result.worlds_checked,
                    result.elapsed
                );
                match result.solutions.as_slice() {
                    [unique] => {
                        let roles: Vec<String> =
                            unique.iter().map(|(p, r)| format!("{p}={r}")).collect();
                        println!(" -> {}", roles.join(", "));
                    }
                    _ => println!(),
                }
            }
        }
        Command::Run {
            config,
            out,
            seed,
            offline,
            concurrency,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if offline {
                cfg.offline = true;
            }
            if let Some(c) = concurrency {
                cfg.concurrency = c;
            }
            let opts = BatchOptions {
                remote: if cfg.offline {
                    None
                } else {
                    RemoteSettings::from_env().ok()
                },
                ..Default::default()
            };
            let summary = experiment::run_batch(&cfg, &opts)?;
            println!(
                "completed {} games ({} skipped as already done, {} failed, {} remaining)",
                summary.completed, summary.skipped, summary.failed, summary.remaining
            );
        }
        Command::Analyze {
            config,
            run_dir,
            out,
        } => {
            let mut cfg = run_config(config.as_deref(), &run_dir)?;
            cfg.out_dir = run_dir.clone();
            experiment::analyze(&cfg, out.as_deref().unwrap_or(&run_dir))?;
            println!("analysis written");
        }
        Command::Report {
            config,
            run_dir,
            out,
        } => {
            let mut cfg = run_config(config.as_deref(), &run_dir)?;
            cfg.out_dir = run_dir.clone();
            experiment::report(&cfg, out.as_deref().unwrap_or(&run_dir))?;
            println!("report written");
        }
    }
    Ok(())
}

/// Config for analyze/report: an explicit config file wins, otherwise the
/// config the run itself stored, otherwise anchor defaults.
fn run_config(
    config: Option<&std::path::Path>,
    run_dir: &std::path::Path,
) -> anyhow::Result<ExperimentConfig> {
    if config.is_some() {
        return load_config(config);
    }
    match experiment::load_stored_config(run_dir) {
        Ok(cfg) => Ok(cfg),
        Err(_) => load_config(None),
    }
}

/// Flat `key = value` config files; unknown keys are rejected. Lists are
/// comma-separated. See the README for the full key reference.
fn load_config(path: Option<&std::path::Path>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let Some(path) = path else {
        return Ok(cfg);
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected key = value", path.display(), lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let parse_usizes = |v: &str| -> anyhow::Result<Vec<usize>> {
            v.split(',')
                .map(|s| s.trim().parse::<usize>().map_err(Into::into))
                .collect()
        };
        match key {
            "team_size" => cfg.team_size = value.parse()?,
            "composition" => cfg.composition = value.to_string(),
            "confidence_visible" => cfg.confidence_visible = value.parse()?,
            "order_policy" => {
                cfg.order_policy = match value {
                    "fixed" => OrderPolicy::Fixed,
                    "agreed" => OrderPolicy::Agreed,
                    other => bail!("unknown order_policy `{other}`"),
                }
            }
            "depth" => cfg.depth = value.parse()?,
            "sizes" => cfg.sizes = parse_usizes(value)?,
            "puzzles_per_cell" => cfg.puzzles_per_cell = value.parse()?,
            "seed" => cfg.seed = value.parse()?,
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            "cells" => cfg.cells = value.split(',').map(|s| s.trim().to_string()).collect(),
            "c2_composition" => cfg.c2_composition = value.to_string(),
            "c6_sizes" => cfg.c6_sizes = parse_usizes(value)?,
            "supervisor" => cfg.supervisor = value.to_string(),
            "concurrency" => cfg.concurrency = value.parse()?,
            "offline" => cfg.offline = value.parse()?,
            "agents" => cfg.agents = Some(value.split(',').map(|s| s.trim().to_string()).collect()),
            other => bail!("{}:{}: unknown key `{other}`", path.display(), lineno + 1),
        }
    }
    Ok(cfg)
}

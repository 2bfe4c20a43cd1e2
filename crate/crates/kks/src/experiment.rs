//! Controlled-experiment harness: the anchor configuration, the grid of
//! single-factor variants, resumable batch execution, and report emission.
//!
//! The anchor (cell `A`) fixes team size 3, a heterogeneous composition,
//! confidence hidden, fixed debate order, depth 1, and all difficulty levels.
//! Each cell C1..C6 changes exactly one factor. All cells with the same sizes
//! run on the same deterministic puzzle sample so results stay comparable.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentKind, AgentSpec, ScriptedProfile, StubbornStance, Tier};
use crate::engine::{self, DebateConfig, DebateTranscript, EngineOptions, OrderPolicy};
use crate::error::{Error, Result};
use crate::generator::{self, Puzzle};
use crate::metrics::{self, InstanceMetrics, TransitionTable};
use crate::regression::{
    build_feature_table, fit_linear, significance_stars, transition_feature_table, GameRecord,
    DEFAULT_RIDGE_LAMBDA,
};
use crate::seed;
use crate::statement::RoleAssignment;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
const PUZZLE_SAMPLE_TAG: u64 = 0x9A22_1E5A;

/// Operator-facing experiment configuration; defaults are the anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub team_size: usize,
    pub composition: String,
    pub confidence_visible: bool,
    pub order_policy: OrderPolicy,
    pub depth: usize,
    pub sizes: Vec<usize>,
    pub puzzles_per_cell: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Cells to run; subset of A, C1..C6.
    pub cells: Vec<String>,
    /// Composition for the homogeneous-vs-heterogeneous comparison cell.
    pub c2_composition: String,
    /// Sizes for the task-difficulty cell.
    pub c6_sizes: Vec<usize>,
    pub supervisor: String,
    pub concurrency: usize,
    pub offline: bool,
    /// Custom team (overrides `composition`) as compact agent specs.
    pub agents: Option<Vec<String>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            team_size: 3,
            composition: "het-mix-a".into(),
            confidence_visible: false,
            order_policy: OrderPolicy::Fixed,
            depth: 1,
            sizes: vec![4, 6, 8],
            puzzles_per_cell: 100,
            seed: 7,
            out_dir: PathBuf::from("runs/anchor"),
            cells: ["A", "C1", "C2", "C3", "C4", "C5", "C6"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            c2_composition: "hom-mix-strong".into(),
            c6_sizes: vec![5, 6, 7, 8, 9],
            supervisor: "uniform".into(),
            concurrency: 4,
            offline: true,
            agents: None,
        }
    }
}

/// Named scripted team compositions. Tiers are operator-declared metadata;
/// the scripted stand-ins encode "strong" as low oracle noise.
pub fn composition(id: &str, size: usize) -> Result<Vec<AgentSpec>> {
    let slots: Vec<AgentSpec> = match id {
        "het-mix-a" => vec![
            AgentSpec::scripted("oracle-1", ScriptedProfile::Oracle { noise: 0.1 })
                .with_tiers(Tier::High, Tier::Medium),
            AgentSpec::scripted("conformist-2", ScriptedProfile::Conformist)
                .with_tiers(Tier::Medium, Tier::Medium),
            AgentSpec::scripted("uniform-3", ScriptedProfile::UniformRandom)
                .with_tiers(Tier::Low, Tier::Medium),
        ],
        "het-mix-b" => vec![
            AgentSpec::scripted("oracle-1", ScriptedProfile::Oracle { noise: 0.2 })
                .with_tiers(Tier::High, Tier::Low),
            AgentSpec::scripted(
                "stubborn-2",
                ScriptedProfile::Stubborn {
                    stance: StubbornStance::Random,
                },
            )
            .with_tiers(Tier::Medium, Tier::High),
            AgentSpec::scripted("uniform-3", ScriptedProfile::UniformRandom)
                .with_tiers(Tier::Low, Tier::Medium),
        ],
        "het-mix-c" => vec![
            AgentSpec::scripted("oracle-1", ScriptedProfile::Oracle { noise: 0.15 })
                .with_tiers(Tier::High, Tier::High),
            AgentSpec::scripted("conformist-2", ScriptedProfile::Conformist)
                .with_tiers(Tier::Medium, Tier::Low),
            AgentSpec::scripted(
                "stubborn-3",
                ScriptedProfile::Stubborn {
                    stance: StubbornStance::Random,
                },
            )
            .with_tiers(Tier::Low, Tier::Medium),
        ],
        "het-mix-d" => vec![
            AgentSpec::scripted("oracle-1", ScriptedProfile::Oracle { noise: 0.05 })
                .with_tiers(Tier::High, Tier::High),
            AgentSpec::scripted("oracle-2", ScriptedProfile::Oracle { noise: 0.15 })
                .with_tiers(Tier::High, Tier::Medium),
            AgentSpec::scripted("oracle-3", ScriptedProfile::Oracle { noise: 0.25 })
                .with_tiers(Tier::High, Tier::Low),
        ],
        "hom-mix-strong" => vec![
            AgentSpec::scripted("oracle-1", ScriptedProfile::Oracle { noise: 0.1 })
                .with_tiers(Tier::High, Tier::Medium),
            AgentSpec::scripted("oracle-2", ScriptedProfile::Oracle { noise: 0.1 })
                .with_tiers(Tier::High, Tier::Medium),
            AgentSpec::scripted("oracle-3", ScriptedProfile::Oracle { noise: 0.1 })
                .with_tiers(Tier::High, Tier::Medium),
        ],
        "hom-mix-weak" => vec![
            AgentSpec::scripted("uniform-1", ScriptedProfile::UniformRandom)
                .with_tiers(Tier::Low, Tier::Medium),
            AgentSpec::scripted("uniform-2", ScriptedProfile::UniformRandom)
                .with_tiers(Tier::Low, Tier::Medium),
            AgentSpec::scripted("uniform-3", ScriptedProfile::UniformRandom)
                .with_tiers(Tier::Low, Tier::Medium),
        ],
        other => return Err(Error::Config(format!("unknown composition `{other}`"))),
    };
    resize_team(slots, size)
}

/// Grows a composition to `size` by duplicating the strongest agent, or
/// truncates it; names stay unique.
fn resize_team(mut slots: Vec<AgentSpec>, size: usize) -> Result<Vec<AgentSpec>> {
    if size < 2 {
        return Err(Error::Config("team size must be at least 2".into()));
    }
    while slots.len() > size {
        slots.pop();
    }
    while slots.len() < size {
        let strongest = slots
            .iter()
            .max_by_key(|a| match a.perf_tier {
                Tier::High => 2,
                Tier::Medium => 1,
                Tier::Low => 0,
            })
            .expect("non-empty composition")
            .clone();
        let mut copy = strongest;
        copy.name = format!(
            "{}-{}",
            copy.name.split('-').next().unwrap_or("agent"),
            slots.len() + 1
        );
        slots.push(copy);
    }
    Ok(slots)
}

fn team_from_config(
    cfg: &ExperimentConfig,
    composition_id: &str,
    size: usize,
) -> Result<Vec<AgentSpec>> {
    match &cfg.agents {
        Some(specs) => {
            let mut team = Vec::with_capacity(specs.len());
            for (i, text) in specs.iter().enumerate() {
                let mut spec = AgentSpec::parse(text)?;
                spec.name = format!("{}-{}", spec_kind_name(&spec.kind), i + 1);
                team.push(spec);
            }
            resize_team(team, size)
        }
        None => composition(composition_id, size),
    }
}

fn spec_kind_name(kind: &AgentKind) -> &'static str {
    match kind {
        AgentKind::Scripted { profile } => match profile {
            ScriptedProfile::Oracle { .. } => "oracle",
            ScriptedProfile::Conformist => "conformist",
            ScriptedProfile::Stubborn { .. } => "stubborn",
            ScriptedProfile::UniformRandom => "uniform",
        },
        AgentKind::Remote { .. } => "remote",
    }
}

fn supervisor_spec(cfg: &ExperimentConfig) -> Result<AgentSpec> {
    let mut spec = AgentSpec::parse(&cfg.supervisor)?;
    spec.name = "supervisor".into();
    Ok(spec)
}

/// One grid cell: a debate configuration plus the puzzle sizes it runs on.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: String,
    pub debate: DebateConfig,
    pub sizes: Vec<usize>,
}

/// Expands the config into cells, each differing from the anchor in exactly
/// one factor:
/// C1 team size +1 (duplicating the strongest agent), C2 composition,
/// C3 confidence visible, C4 agreed order, C5 depth 2, C6 different sizes.
pub fn expand_grid(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    let supervisor = supervisor_spec(cfg)?;
    let anchor = DebateConfig {
        team: team_from_config(cfg, &cfg.composition, cfg.team_size)?,
        confidence_visible: cfg.confidence_visible,
        order_policy: cfg.order_policy,
        depth: cfg.depth,
        supervisor,
        seed: cfg.seed,
    };
    anchor.validate()?;

    let mut cells = Vec::new();
    for id in &cfg.cells {
        let mut debate = anchor.clone();
        let mut sizes = cfg.sizes.clone();
        match id.as_str() {
            "A" => {}
            "C1" => {
                debate.team = team_from_config(cfg, &cfg.composition, cfg.team_size + 1)?;
            }
            "C2" => {
                debate.team = team_from_config(cfg, &cfg.c2_composition, cfg.team_size)?;
            }
            "C3" => debate.confidence_visible = !cfg.confidence_visible,
            "C4" => {
                debate.order_policy = match cfg.order_policy {
                    OrderPolicy::Fixed => OrderPolicy::Agreed,
                    OrderPolicy::Agreed => OrderPolicy::Fixed,
                }
            }
            "C5" => debate.depth = cfg.depth + 1,
            "C6" => sizes = cfg.c6_sizes.clone(),
            other => return Err(Error::Config(format!("unknown cell `{other}`"))),
        }
        debate.validate()?;
        cells.push(Cell {
            id: id.clone(),
            debate,
            sizes,
        });
    }
    Ok(cells)
}

/// Deterministic puzzle sample for a cell: `per_cell` puzzles spread evenly
/// over the sizes. Cells with equal sizes share the identical sample.
pub fn sample_puzzles(sizes: &[usize], per_cell: usize, root_seed: u64) -> Result<Vec<Puzzle>> {
    if sizes.is_empty() {
        return Err(Error::EmptyInput("sample_puzzles"));
    }
    let base = per_cell / sizes.len();
    let remainder = per_cell % sizes.len();
    let mut puzzles = Vec::with_capacity(per_cell);
    for (i, &size) in sizes.iter().enumerate() {
        let count = base + usize::from(i < remainder);
        if count == 0 {
            continue;
        }
        let sample_seed = seed::derive(root_seed, &[PUZZLE_SAMPLE_TAG, size as u64]);
        puzzles.extend(generator::build_dataset(&[size], count, sample_seed)?);
    }
    Ok(puzzles)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameEntry {
    pub cell: String,
    pub puzzle_id: String,
    pub status: GameStatus,
}

/// Persistent batch state; a rerun with an identical manifest skips completed
/// games and reproduces identical outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub games: Vec<GameEntry>,
}

impl RunManifest {
    fn path(out_dir: &Path) -> PathBuf {
        out_dir.join("manifest.json")
    }

    pub fn load(out_dir: &Path) -> Result<RunManifest> {
        let text = fs::read_to_string(Self::path(out_dir))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Atomic write: temp file then rename.
    pub fn store(&self, out_dir: &Path) -> Result<()> {
        let tmp = out_dir.join("manifest.json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        fs::rename(&tmp, Self::path(out_dir))?;
        Ok(())
    }
}

/// Stable hash of the canonical config serialization.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let canonical = serde_json::to_string(cfg)?;
    Ok(format!("{:016x}", seed::hash_str(&canonical)))
}

/// The run directory carries its canonical config so later `analyze`/`report`
/// invocations reconstruct the exact cells and teams.
pub fn store_config(cfg: &ExperimentConfig) -> Result<()> {
    fs::write(
        cfg.out_dir.join("config.json"),
        serde_json::to_string_pretty(cfg)?,
    )?;
    Ok(())
}

pub fn load_stored_config(run_dir: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(run_dir.join("config.json"))?;
    Ok(serde_json::from_str(&text)?)
}

fn transcripts_path(out_dir: &Path, cell: &str) -> PathBuf {
    out_dir.join(format!("transcripts-{cell}.jsonl"))
}

fn puzzles_path(out_dir: &Path, cell: &str) -> PathBuf {
    out_dir.join(format!("puzzles-{cell}.jsonl"))
}

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    /// Bounded concurrency; 0 means the config value.
    pub concurrency: usize,
    /// Stop after completing this many games (crash-injection hook for
    /// resumability tests).
    pub stop_after: Option<usize>,
    pub remote: Option<crate::agents::RemoteSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub completed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub remaining: usize,
}

/// Runs (or resumes) the batch. Transcripts append per cell; the manifest is
/// rewritten atomically after every game; a game found in a transcript file
/// is never replayed.
pub fn run_batch(cfg: &ExperimentConfig, opts: &BatchOptions) -> Result<BatchSummary> {
    let cells = expand_grid(cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    store_config(cfg)?;
    let hash = config_hash(cfg)?;

    // load or initialize the manifest
    let mut manifest = match RunManifest::load(&cfg.out_dir) {
        Ok(m) => {
            if m.config_hash != hash {
                return Err(Error::Config(
                    "out_dir holds a manifest for a different configuration".into(),
                ));
            }
            m
        }
        Err(_) => {
            let mut games = Vec::new();
            for cell in &cells {
                let puzzles = sample_puzzles(&cell.sizes, cfg.puzzles_per_cell, cfg.seed)?;
                generator::write_puzzles(&puzzles_path(&cfg.out_dir, &cell.id), &puzzles)?;
                for p in &puzzles {
                    games.push(GameEntry {
                        cell: cell.id.clone(),
                        puzzle_id: p.id.clone(),
                        status: GameStatus::Pending,
                    });
                }
            }
            let manifest = RunManifest {
                schema_version: MANIFEST_SCHEMA_VERSION,
                config_hash: hash.clone(),
                games,
            };
            manifest.store(&cfg.out_dir)?;
            manifest
        }
    };

    // reconcile: transcripts already on disk are complete even if the
    // manifest missed the update (e.g. a crash between append and store)
    let mut done: BTreeSet<(String, String)> = BTreeSet::new();
    for cell in &cells {
        let path = transcripts_path(&cfg.out_dir, &cell.id);
        if path.exists() {
            for t in engine::read_transcripts(&path)? {
                done.insert((cell.id.clone(), t.puzzle_id));
            }
        }
    }
    let mut skipped = 0usize;
    for game in &mut manifest.games {
        if done.contains(&(game.cell.clone(), game.puzzle_id.clone())) {
            if game.status == GameStatus::Pending {
                game.status = GameStatus::Done;
            }
            skipped += 1;
        }
    }
    manifest.store(&cfg.out_dir)?;

    // per-cell puzzle lookup
    let mut puzzle_index: BTreeMap<(String, String), Puzzle> = BTreeMap::new();
    for cell in &cells {
        for p in generator::read_puzzles(&puzzles_path(&cfg.out_dir, &cell.id))? {
            puzzle_index.insert((cell.id.clone(), p.id.clone()), p);
        }
    }
    let cell_index: BTreeMap<&str, &Cell> = cells.iter().map(|c| (c.id.as_str(), c)).collect();

    let pending: Vec<usize> = manifest
        .games
        .iter()
        .enumerate()
        .filter(|(_, g)| g.status == GameStatus::Pending)
        .map(|(i, _)| i)
        .collect();

    let engine_opts = EngineOptions {
        remote: opts.remote.clone(),
        offline: cfg.offline,
    };
    let concurrency = if opts.concurrency > 0 {
        opts.concurrency
    } else {
        cfg.concurrency.max(1)
    };
    let budget = opts.stop_after.unwrap_or(usize::MAX);

    let completed = AtomicUsize::new(0);
    let failed = AtomicUsize::new(0);
    let taken = AtomicUsize::new(0);
    let manifest_lock = Mutex::new(&mut manifest);
    let sinks: BTreeMap<String, Mutex<fs::File>> = cells
        .iter()
        .map(|cell| {
            let file = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(transcripts_path(&cfg.out_dir, &cell.id))
                .expect("open transcript sink");
            (cell.id.clone(), Mutex::new(file))
        })
        .collect();

    std::thread::scope(|scope| -> Result<()> {
        let mut workers = Vec::new();
        for _ in 0..concurrency.min(pending.len().max(1)) {
            workers.push(scope.spawn(|| -> Result<()> {
                loop {
                    let slot = taken.fetch_add(1, Ordering::SeqCst);
                    if slot >= pending.len() || completed.load(Ordering::SeqCst) >= budget {
                        return Ok(());
                    }
                    let idx = pending[slot];
                    let (cell_id, puzzle_id) = {
                        let m = manifest_lock.lock().unwrap();
                        (m.games[idx].cell.clone(), m.games[idx].puzzle_id.clone())
                    };
                    let cell = cell_index[cell_id.as_str()];
                    let puzzle = &puzzle_index[&(cell_id.clone(), puzzle_id.clone())];
                    let mut debate = cell.debate.clone();
                    debate.seed = seed::derive(
                        cfg.seed,
                        &[seed::hash_str(&cell_id), seed::hash_str(&puzzle_id)],
                    );
                    let status = match engine::run_debate_with(puzzle, &debate, &engine_opts) {
                        Ok(transcript) => {
                            let line = transcript.to_json_line()?;
                            {
                                let mut sink = sinks[&cell_id].lock().unwrap();
                                writeln!(sink, "{line}")?;
                                sink.sync_all()?;
                            }
                            completed.fetch_add(1, Ordering::SeqCst);
                            GameStatus::Done
                        }
                        Err(_) => {
                            failed.fetch_add(1, Ordering::SeqCst);
                            GameStatus::Failed
                        }
                    };
                    {
                        let mut m = manifest_lock.lock().unwrap();
                        m.games[idx].status = status;
                        m.store(&cfg.out_dir)?;
                    }
                }
            }));
        }
        for worker in workers {
            worker.join().expect("worker panicked")?;
        }
        Ok(())
    })?;

    let completed = completed.load(Ordering::SeqCst);
    let failed = failed.load(Ordering::SeqCst);
    Ok(BatchSummary {
        completed,
        failed,
        skipped,
        remaining: pending.len().saturating_sub(completed + failed),
    })
}

/// Everything loaded back from a run directory.
pub struct RunData {
    pub cells: Vec<Cell>,
    /// (cell id, transcript, certified puzzle) sorted by (cell, puzzle id).
    pub games: Vec<(String, DebateTranscript, Puzzle)>,
}

pub fn load_run(cfg: &ExperimentConfig) -> Result<RunData> {
    let cells = expand_grid(cfg)?;
    let mut games = Vec::new();
    for cell in &cells {
        let t_path = transcripts_path(&cfg.out_dir, &cell.id);
        if !t_path.exists() {
            continue;
        }
        let puzzles: BTreeMap<String, Puzzle> =
            generator::read_puzzles(&puzzles_path(&cfg.out_dir, &cell.id))?
                .into_iter()
                .map(|p| (p.id.clone(), p))
                .collect();
        for transcript in engine::read_transcripts(&t_path)? {
            let puzzle = puzzles
                .get(&transcript.puzzle_id)
                .ok_or_else(|| Error::Config(format!("missing puzzle `{}`", transcript.puzzle_id)))?
                .clone();
            games.push((cell.id.clone(), transcript, puzzle));
        }
    }
    games.sort_by(|a, b| {
        (a.0.as_str(), a.1.puzzle_id.as_str()).cmp(&(b.0.as_str(), b.1.puzzle_id.as_str()))
    });
    Ok(RunData { cells, games })
}

fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}

/// Per-game and per-cell metric CSVs.
pub fn analyze(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let run = load_run(cfg)?;
    if run.games.is_empty() {
        return Err(Error::EmptyInput("analyze"));
    }
    fs::create_dir_all(out_dir)?;

    let mut per_game = String::from(
        "cell,puzzle_id,size,init_strict,init_smooth,final_strict,final_smooth,\
         init_agent_strict,final_agent_strict,auc_strict,auc_smooth,auc_agree_all,\
         auc_agree_major,supervisor_invocations,fallbacks\n",
    );
    let mut by_cell: BTreeMap<&str, Vec<InstanceMetrics>> = BTreeMap::new();
    for (cell, transcript, puzzle) in &run.games {
        let truth = puzzle
            .solution
            .as_ref()
            .ok_or_else(|| Error::Config(format!("puzzle `{}` is not certified", puzzle.id)))?;
        let m = metrics::instance_metrics(transcript, truth)?;
        per_game.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            cell,
            m.puzzle_id,
            m.size,
            fmt_f(m.init_strict),
            fmt_f(m.init_smooth),
            fmt_f(m.final_strict),
            fmt_f(m.final_smooth),
            fmt_f(m.init_agent_strict),
            fmt_f(m.final_agent_strict),
            fmt_f(m.auc_strict),
            fmt_f(m.auc_smooth),
            fmt_f(m.auc_agree_all),
            fmt_f(m.auc_agree_major),
            m.supervisor_invocations,
            m.fallbacks,
        ));
        by_cell.entry(cell).or_default().push(m);
    }
    fs::write(out_dir.join("per_game_metrics.csv"), per_game)?;

    let mut aggregate = String::from(
        "cell,n,strict_accuracy,smooth_accuracy,auc_strict,auc_smooth,auc_agree_all,auc_agree_major\n",
    );
    for (cell, ms) in &by_cell {
        let n = ms.len() as f64;
        let mean = |f: fn(&InstanceMetrics) -> f64| ms.iter().map(f).sum::<f64>() / n;
        aggregate.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            cell,
            ms.len(),
            fmt_f(mean(|m| m.final_strict)),
            fmt_f(mean(|m| m.final_smooth)),
            fmt_f(mean(|m| m.auc_strict)),
            fmt_f(mean(|m| m.auc_smooth)),
            fmt_f(mean(|m| m.auc_agree_all)),
            fmt_f(mean(|m| m.auc_agree_major)),
        ));
    }
    fs::write(out_dir.join("aggregate_metrics.csv"), aggregate)?;
    Ok(())
}

/// Full report: analysis CSVs, the initial-vs-final table, transition and
/// correction-rate CSVs, transition ridge weights, and the two outcome
/// regressions. Idempotent over unchanged transcripts.
pub fn report(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let run = load_run(cfg)?;
    if run.games.is_empty() {
        return Err(Error::EmptyInput("report"));
    }
    fs::create_dir_all(out_dir)?;
    analyze(cfg, out_dir)?;

    // initial vs final accuracy by game size (instance = majority vote,
    // agent = per-agent mean), improvement = final minus initial
    let mut sizes: BTreeSet<usize> = BTreeSet::new();
    let mut per_size: BTreeMap<usize, Vec<InstanceMetrics>> = BTreeMap::new();
    for (_, transcript, puzzle) in &run.games {
        let truth = puzzle.solution.as_ref().unwrap();
        let m = metrics::instance_metrics(transcript, truth)?;
        sizes.insert(m.size);
        per_size.entry(m.size).or_default().push(m);
    }
    let mut table = String::from("metric");
    for size in &sizes {
        table.push_str(&format!(",size_{size}"));
    }
    table.push('\n');
    type MetricGetter = fn(&InstanceMetrics) -> f64;
    let rows: [(&str, MetricGetter); 4] = [
        ("initial_instance_pct", |m| m.init_strict),
        ("final_instance_pct", |m| m.final_strict),
        ("initial_agent_pct", |m| m.init_agent_strict),
        ("final_agent_pct", |m| m.final_agent_strict),
    ];
    let mut means: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (name, f) in rows {
        let mut line = name.to_string();
        let mut values = Vec::new();
        for size in &sizes {
            let ms = &per_size[size];
            let mean = ms.iter().map(f).sum::<f64>() / ms.len() as f64 * 100.0;
            values.push(mean);
            line.push_str(&format!(",{}", fmt_f(mean)));
        }
        means.insert(name, values);
        table.push_str(&line);
        table.push('\n');
    }
    for (final_row, init_row, name) in [
        (
            "final_instance_pct",
            "initial_instance_pct",
            "instance_improvement_pct",
        ),
        (
            "final_agent_pct",
            "initial_agent_pct",
            "agent_improvement_pct",
        ),
    ] {
        let mut line = name.to_string();
        for (f, i) in means[final_row].iter().zip(&means[init_row]) {
            line.push_str(&format!(",{}", fmt_f(f - i)));
        }
        table.push_str(&line);
        table.push('\n');
    }
    fs::write(out_dir.join("initial_vs_final.csv"), table)?;

    // transitions and correction rates
    let mut total = TransitionTable::default();
    for (_, transcript, puzzle) in &run.games {
        let truth = puzzle.solution.as_ref().unwrap();
        total.merge(&metrics::transition_counts(transcript, truth)?);
    }
    let mut transitions = String::from("start,end,count\n");
    for start in crate::metrics::StartState::ALL {
        for end in [crate::metrics::EndState::C, crate::metrics::EndState::W] {
            transitions.push_str(&format!("{start},{end},{}\n", total.count(start, end)));
        }
    }
    fs::write(out_dir.join("transitions.csv"), transitions)?;

    let mut corrections = String::from("agent,start,count,correction_rate\n");
    for (agent, rates) in total.agent_correction_rates() {
        for (start, rate) in rates {
            let c = total.per_agent[&agent][&start]
                .values()
                .copied()
                .sum::<u64>();
            corrections.push_str(&format!("{agent},{start},{c},{}\n", fmt_f(rate)));
        }
    }
    fs::write(out_dir.join("correction_rates.csv"), corrections)?;

    // ridge weights of transition counts against final smooth accuracy
    let pairs: Vec<(&DebateTranscript, &RoleAssignment)> = run
        .games
        .iter()
        .map(|(_, t, p)| (t, p.solution.as_ref().unwrap()))
        .collect();
    let (t_names, t_rows, t_target) = transition_feature_table(&pairs)?;
    let mut weights = String::from("transition,count,weight\n");
    match fit_linear(&t_rows, &t_names, &t_target, DEFAULT_RIDGE_LAMBDA) {
        Ok(fit) => {
            for (j, name) in t_names.iter().enumerate() {
                let count: f64 = t_rows.iter().map(|r| r[j]).sum();
                weights.push_str(&format!(
                    "{name},{},{}\n",
                    count as u64,
                    fmt_f(fit.coefficients[j])
                ));
            }
        }
        Err(e) => {
            weights.push_str(&format!("# fit unavailable: {e}\n"));
        }
    }
    fs::write(out_dir.join("transition_weights.csv"), weights)?;

    // outcome regressions (OLS); constant columns are dropped first since a
    // single-cell run cannot identify them
    let cell_index: BTreeMap<&str, &Cell> = run.cells.iter().map(|c| (c.id.as_str(), c)).collect();
    let records: Vec<GameRecord<'_>> = run
        .games
        .iter()
        .map(|(cell, t, p)| GameRecord {
            transcript: t,
            puzzle: p,
            team: &cell_index[cell.as_str()].debate.team,
        })
        .collect();
    let features = build_feature_table(&records)?;
    for (target, file) in [
        (&features.final_smooth, "regression_final_smooth.csv"),
        (&features.auc_agree_major, "regression_agree_major.csv"),
    ] {
        fs::write(
            out_dir.join(file),
            regression_csv(&features.names, &features.rows, target),
        )?;
    }
    Ok(())
}

/// OLS over the feature table with graceful degradation: constant columns
/// cannot be identified next to the intercept and linearly dependent columns
/// make the normal equations singular, so both are dropped (and listed) until
/// the fit goes through. Every feature appears in the output either way.
fn regression_csv(names: &[String], rows: &[Vec<f64>], target: &[f64]) -> String {
    let mut csv = String::from("feature,coef,std_err,sig\n");
    let (mut kept_names, mut kept_rows, dropped) = drop_constant_columns(names, rows);
    for name in &dropped {
        csv.push_str(&format!("{name},dropped_constant,,\n"));
    }
    loop {
        match fit_linear(&kept_rows, &kept_names, target, 0.0) {
            Ok(fit) => {
                let ses = fit.std_errors.clone();
                csv.push_str(&format!(
                    "intercept,{},{},{}\n",
                    fmt_f(fit.intercept),
                    fit.intercept_std_error.map_or(String::new(), fmt_f),
                    fit.intercept_std_error
                        .map_or("", |se| significance_stars(fit.intercept / se)),
                ));
                for (j, name) in kept_names.iter().enumerate() {
                    let se = ses.as_ref().map(|s| s[j]);
                    csv.push_str(&format!(
                        "{name},{},{},{}\n",
                        fmt_f(fit.coefficients[j]),
                        se.map_or(String::new(), fmt_f),
                        se.map_or("", |se| significance_stars(fit.coefficients[j] / se)),
                    ));
                }
                return csv;
            }
            Err(Error::RankDeficient { columns }) if !columns.contains(&"intercept".into()) => {
                let mut keep = Vec::new();
                for (j, name) in kept_names.iter().enumerate() {
                    if columns.contains(name) {
                        csv.push_str(&format!("{name},dropped_dependent,,\n"));
                    } else {
                        keep.push(j);
                    }
                }
                kept_rows = kept_rows
                    .iter()
                    .map(|r| keep.iter().map(|j| r[*j]).collect())
                    .collect();
                kept_names = keep.iter().map(|j| kept_names[*j].clone()).collect();
                if kept_names.is_empty() {
                    csv.push_str("# fit unavailable: no independent features left\n");
                    return csv;
                }
            }
            Err(e) => {
                csv.push_str(&format!("# fit unavailable: {e}\n"));
                return csv;
            }
        }
    }
}

fn drop_constant_columns(
    names: &[String],
    rows: &[Vec<f64>],
) -> (Vec<String>, Vec<Vec<f64>>, Vec<String>) {
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let first = rows[0][j];
        if rows.iter().any(|r| r[j] != first) {
            keep.push(j);
        } else {
            dropped.push(name.clone());
        }
    }
    let kept_names = keep.iter().map(|j| names[*j].clone()).collect();
    let kept_rows = rows
        .iter()
        .map(|r| keep.iter().map(|j| r[*j]).collect())
        .collect();
    (kept_names, kept_rows, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cells_differ_from_anchor_in_exactly_one_factor() {
        let cfg = ExperimentConfig::default();
        let cells = expand_grid(&cfg).unwrap();
        assert_eq!(cells.len(), 7);
        let anchor = &cells[0];
        assert_eq!(anchor.id, "A");
        for cell in &cells[1..] {
            let mut diffs = 0;
            if cell.debate.team != anchor.debate.team {
                diffs += 1;
            }
            if cell.debate.confidence_visible != anchor.debate.confidence_visible {
                diffs += 1;
            }
            if cell.debate.order_policy != anchor.debate.order_policy {
                diffs += 1;
            }
            if cell.debate.depth != anchor.debate.depth {
                diffs += 1;
            }
            if cell.sizes != anchor.sizes {
                diffs += 1;
            }
            assert_eq!(
                diffs, 1,
                "cell {} must differ in exactly one factor",
                cell.id
            );
        }
    }

    #[test]
    fn no_variants_means_the_single_anchor_cell() {
        let cfg = ExperimentConfig {
            cells: vec!["A".into()],
            ..ExperimentConfig::default()
        };
        let cells = expand_grid(&cfg).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].id, "A");
    }

    #[test]
    fn c1_adds_the_strongest_agent() {
        let cfg = ExperimentConfig::default();
        let cells = expand_grid(&cfg).unwrap();
        let c1 = cells.iter().find(|c| c.id == "C1").unwrap();
        assert_eq!(c1.debate.team.len(), 4);
        assert_eq!(c1.debate.team[3].perf_tier, Tier::High);
    }

    #[test]
    fn puzzle_sampling_is_deterministic_and_shared() {
        let a = sample_puzzles(&[4], 3, 11).unwrap();
        let b = sample_puzzles(&[4], 3, 11).unwrap();
        assert_eq!(a, b);
        let c = sample_puzzles(&[4], 3, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unknown_composition_is_a_config_error() {
        assert!(matches!(composition("het-mix-z", 3), Err(Error::Config(_))));
    }
}

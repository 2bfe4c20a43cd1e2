//! Seeded puzzle construction with certified unique solutions.
//!
//! Generation is rejection sampling: draw a target world (roles plus truth
//! bits), draw one statement per player whose truth value under that world
//! matches the player's bit, attach the hint, and accept the puzzle iff the
//! solver certifies the solution as unique over roles. The target world is
//! consistent by construction, so a unique solution always equals its roles.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsl;
use crate::error::{Error, Result};
use crate::seed;
use crate::solver;
use crate::statement::{
    evaluate, CountPredicate, Hint, Parity, PlayerId, Polarity, Role, RoleAssignment, Scope,
    Statement, World,
};

/// Fixed 26-name pool; puzzles draw names without replacement.
pub const NAME_POOL: [&str; 26] = [
    "Alice", "Bruno", "Chloe", "Derek", "Elena", "Felix", "Grace", "Henry", "Iris", "Jonas",
    "Kara", "Liam", "Mona", "Nadia", "Olivia", "Peter", "Quinn", "Rachel", "Selma", "Tomas", "Uma",
    "Violet", "Wendy", "Xavier", "Yara", "Zane",
];

/// A puzzle instance. `solution` is present only once certified by the
/// solver, and is then the unique role assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Puzzle {
    pub id: String,
    pub size: usize,
    pub players: Vec<PlayerId>,
    pub statements: BTreeMap<PlayerId, Statement>,
    pub hints: Vec<Hint>,
    pub solution: Option<RoleAssignment>,
}

impl Puzzle {
    pub fn from_parts(
        id: impl Into<String>,
        players: Vec<PlayerId>,
        statements: Vec<(PlayerId, Statement)>,
        hints: Vec<Statement>,
    ) -> Puzzle {
        Puzzle {
            id: id.into(),
            size: players.len(),
            players,
            statements: statements.into_iter().collect(),
            hints: hints.into_iter().map(Hint).collect(),
            solution: None,
        }
    }

    /// Structural validity: non-empty unique player names, exactly one
    /// statement per player, all referenced players known, hints well-formed.
    pub fn validate(&self) -> Result<()> {
        if self.players.is_empty() {
            return Err(Error::EmptyInput("puzzle"));
        }
        let unique: BTreeSet<_> = self.players.iter().collect();
        if unique.len() != self.players.len() || self.players.iter().any(PlayerId::is_empty) {
            return Err(Error::MalformedStatement(
                "player names must be unique and non-empty".into(),
            ));
        }
        if self.statements.len() != self.players.len() {
            return Err(Error::MalformedStatement(format!(
                "expected one statement per player, got {} for {} players",
                self.statements.len(),
                self.players.len()
            )));
        }
        for player in &self.players {
            let stmt = self
                .statements
                .get(player)
                .ok_or_else(|| Error::UnknownPlayer(player.to_string()))?;
            stmt.validate(&self.players)?;
        }
        for hint in &self.hints {
            hint.0.validate(&self.players)?;
        }
        Ok(())
    }

    /// The plain-text "game info" block shown to agents: one block per player
    /// statement, then one game-manager line per hint.
    pub fn game_info_text(&self) -> String {
        let mut out = String::new();
        for player in &self.players {
            out.push_str("---\n");
            out.push_str(&format!("Player name: {player}\n"));
            let stmt = &self.statements[player];
            out.push_str(&format!(
                "Player statement: {}\n",
                dsl::render_natural(stmt, Some(player))
            ));
        }
        for hint in &self.hints {
            out.push_str("---\n");
            out.push_str(&format!(
                "Message from the game manager: I am the game manager and here is a hint for \
                 you: {}\n",
                dsl::render_natural(&hint.0, None)
            ));
        }
        out.truncate(out.trim_end().len());
        out
    }

    /// Distinctness key: the puzzle's (speaker, statement) set in canonical
    /// DSL form. Dataset entries must not collide on this.
    pub fn statement_key(&self) -> String {
        let mut parts: Vec<String> = self
            .statements
            .iter()
            .map(|(p, s)| format!("{p}: {}", dsl::print(s)))
            .collect();
        parts.sort();
        parts.join(" | ")
    }

    /// The four-player demo puzzle. Unique solution: Rachel and Violet are
    /// knights, Olivia the knave, Peter the spy.
    pub fn demo_size4() -> Puzzle {
        let rachel = PlayerId::new("Rachel");
        let violet = PlayerId::new("Violet");
        let olivia = PlayerId::new("Olivia");
        let peter = PlayerId::new("Peter");
        Puzzle::from_parts(
            "size4-demo",
            vec![
                rachel.clone(),
                violet.clone(),
                olivia.clone(),
                peter.clone(),
            ],
            vec![
                (
                    rachel.clone(),
                    Statement::SameRole {
                        a: rachel.clone(),
                        b: violet.clone(),
                    },
                ),
                (
                    violet.clone(),
                    Statement::TruthClaim {
                        subject: rachel.clone(),
                        polarity: Polarity::Truthful,
                    },
                ),
                (
                    olivia.clone(),
                    // exactly one of the two is telling the truth, i.e.
                    // exactly one of the two is lying
                    Statement::CountLiars {
                        scope: Scope::Players(vec![violet.clone(), rachel.clone()]),
                        predicate: CountPredicate::Exactly(1),
                    },
                ),
                (
                    peter,
                    Statement::xor(
                        Statement::CountRole {
                            scope: Scope::All,
                            role: Role::Knave,
                            predicate: CountPredicate::Parity(Parity::Even),
                        },
                        Statement::CountLiars {
                            scope: Scope::Players(vec![rachel, violet, olivia]),
                            predicate: CountPredicate::Parity(Parity::Odd),
                        },
                    ),
                ),
            ],
            vec![Statement::CountRole {
                scope: Scope::All,
                role: Role::Spy,
                predicate: CountPredicate::Exactly(1),
            }],
        )
    }

    /// The three-player demo puzzle. Unique solution: Violet the knight, Uma
    /// the knave, Xavier the spy.
    pub fn demo_size3() -> Puzzle {
        let violet = PlayerId::new("Violet");
        let uma = PlayerId::new("Uma");
        let xavier = PlayerId::new("Xavier");
        Puzzle::from_parts(
            "size3-demo",
            vec![violet.clone(), uma.clone(), xavier.clone()],
            vec![
                (
                    violet.clone(),
                    Statement::CountRole {
                        scope: Scope::All,
                        role: Role::Spy,
                        predicate: CountPredicate::Parity(Parity::Odd),
                    },
                ),
                (
                    uma,
                    Statement::TruthClaim {
                        subject: violet.clone(),
                        polarity: Polarity::Lying,
                    },
                ),
                (
                    xavier.clone(),
                    Statement::CountRole {
                        scope: Scope::Players(vec![violet, xavier]),
                        role: Role::Knave,
                        predicate: CountPredicate::Exactly(1),
                    },
                ),
            ],
            vec![Statement::CountRole {
                scope: Scope::All,
                role: Role::Spy,
                predicate: CountPredicate::Exactly(1),
            }],
        )
    }
}

/// Relative draw weights for the six statement forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateWeights {
    pub role_claim: f64,
    pub truth_claim: f64,
    pub same_role: f64,
    pub count_role: f64,
    pub count_liars: f64,
    pub exactly_one_of: f64,
}

impl Default for TemplateWeights {
    fn default() -> Self {
        TemplateWeights {
            role_claim: 1.0,
            truth_claim: 1.0,
            same_role: 1.0,
            count_role: 1.0,
            count_liars: 1.0,
            exactly_one_of: 1.0,
        }
    }
}

impl TemplateWeights {
    fn as_array(&self) -> [f64; 6] {
        [
            self.role_claim,
            self.truth_claim,
            self.same_role,
            self.count_role,
            self.count_liars,
            self.exactly_one_of,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if w.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(Error::Config("template weights must be nonnegative".into()));
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config(
                "template weights must not all be zero".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HintPolicy {
    /// Hint is always "Among all players, there is exactly one spy"; role
    /// sampling is conditioned on exactly one spy so the hint holds.
    AlwaysOneSpyCount,
    /// A randomly drawn statement that is true in the target world.
    RandomHint,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub size: usize,
    pub seed: u64,
    pub max_attempts: u32,
    pub template_weights: TemplateWeights,
    pub hint_policy: HintPolicy,
}

impl GenConfig {
    pub fn new(size: usize, seed: u64) -> GenConfig {
        GenConfig {
            size,
            seed,
            max_attempts: 10_000,
            template_weights: TemplateWeights::default(),
            hint_policy: HintPolicy::AlwaysOneSpyCount,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::Config("size must be at least 1".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be at least 1".into()));
        }
        self.template_weights.validate()
    }
}

/// Generates one certified puzzle. Deterministic given the config seed.
pub fn generate_one(cfg: &GenConfig) -> Result<Puzzle> {
    generate_one_from_pool(cfg, &NAME_POOL)
}

pub(crate) fn generate_one_from_pool(cfg: &GenConfig, pool: &[&str]) -> Result<Puzzle> {
    cfg.validate()?;
    if pool.len() < cfg.size {
        return Err(Error::Config(format!(
            "name pool has {} names, need {}",
            pool.len(),
            cfg.size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let players: Vec<PlayerId> = pool
        .choose_multiple(&mut rng, cfg.size)
        .map(|n| PlayerId::new(*n))
        .collect();

    for _attempt in 0..cfg.max_attempts {
        if let Some(puzzle) = try_generate(cfg, &players, &mut rng)? {
            return Ok(puzzle);
        }
    }
    Err(Error::GenerationFailed {
        attempts: cfg.max_attempts,
    })
}

fn try_generate(
    cfg: &GenConfig,
    players: &[PlayerId],
    rng: &mut ChaCha8Rng,
) -> Result<Option<Puzzle>> {
    let n = players.len();

    // target roles
    let roles: Vec<Role> = match cfg.hint_policy {
        HintPolicy::AlwaysOneSpyCount => {
            let spy = rng.gen_range(0..n);
            (0..n)
                .map(|i| {
                    if i == spy {
                        Role::Spy
                    } else if rng.gen_bool(0.5) {
                        Role::Knight
                    } else {
                        Role::Knave
                    }
                })
                .collect()
        }
        _ => (0..n).map(|_| *Role::ALL.choose(rng).unwrap()).collect(),
    };

    let bits: Vec<bool> = roles
        .iter()
        .map(|r| r.forced_bit().unwrap_or_else(|| rng.gen_bool(0.5)))
        .collect();
    let world = World::new(
        players.iter().cloned().zip(roles.iter().copied()).collect(),
        players.iter().cloned().zip(bits.iter().copied()).collect(),
    );

    // one statement per player, matching the player's bit in the target world
    let mut statements = Vec::with_capacity(n);
    for (i, player) in players.iter().enumerate() {
        let mut found = None;
        for _ in 0..64 {
            let stmt = sample_statement(rng, &cfg.template_weights, players, player);
            if evaluate(&stmt, &world)? == bits[i] {
                found = Some(stmt);
                break;
            }
        }
        match found {
            Some(stmt) => statements.push((player.clone(), stmt)),
            None => return Ok(None),
        }
    }

    let hints = match cfg.hint_policy {
        HintPolicy::AlwaysOneSpyCount => vec![Statement::CountRole {
            scope: Scope::All,
            role: Role::Spy,
            predicate: CountPredicate::Exactly(1),
        }],
        HintPolicy::RandomHint => {
            let mut hint = None;
            for _ in 0..64 {
                // hints come from the game manager, not any speaker
                let candidate = sample_statement(rng, &cfg.template_weights, players, &players[0]);
                if evaluate(&candidate, &world)? {
                    hint = Some(candidate);
                    break;
                }
            }
            match hint {
                Some(h) => vec![h],
                None => return Ok(None),
            }
        }
        HintPolicy::None => vec![],
    };

    let puzzle = Puzzle::from_parts("pending", players.to_vec(), statements, hints);
    match solver::certify(&puzzle) {
        Ok(certified) => Ok(Some(certified)),
        Err(Error::NotUnique { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Samples one statement for `speaker` over the roster. Exposed to tests so
/// template-inventory properties can range over exactly what generation
/// emits.
pub(crate) fn sample_statement(
    rng: &mut ChaCha8Rng,
    weights: &TemplateWeights,
    players: &[PlayerId],
    speaker: &PlayerId,
) -> Statement {
    sample_form(rng, weights, players, speaker, true)
}

fn sample_form(
    rng: &mut ChaCha8Rng,
    weights: &TemplateWeights,
    players: &[PlayerId],
    speaker: &PlayerId,
    allow_meta: bool,
) -> Statement {
    let n = players.len();
    let mut w = weights.as_array();
    if n < 2 {
        // forms needing another player or a subset are infeasible
        w[1] = 0.0;
        w[2] = 0.0;
        w[4] = 0.0;
    }
    if !allow_meta {
        w[5] = 0.0;
    }
    if w.iter().sum::<f64>() <= 0.0 {
        w[0] = 1.0;
    }
    let dist = rand::distributions::WeightedIndex::new(w).expect("weights validated");
    match dist.sample(rng) {
        0 => Statement::RoleClaim {
            subject: players.choose(rng).unwrap().clone(),
            role: *Role::ALL.choose(rng).unwrap(),
        },
        1 => {
            // a self truth-claim is vacuous or contradictory; pick another player
            let others: Vec<_> = players.iter().filter(|p| *p != speaker).collect();
            Statement::TruthClaim {
                subject: (*others.choose(rng).unwrap()).clone(),
                polarity: if rng.gen_bool(0.5) {
                    Polarity::Truthful
                } else {
                    Polarity::Lying
                },
            }
        }
        2 => {
            let mut pair = players.iter().collect::<Vec<_>>();
            pair.shuffle(rng);
            let (a, b) = (pair[0].clone(), pair[1].clone());
            // canonical order: the speaker, when involved, sits in slot a
            if b == *speaker {
                Statement::SameRole { a: b, b: a }
            } else {
                Statement::SameRole { a, b }
            }
        }
        3 => {
            let scope = sample_scope(rng, players, speaker, true);
            let role = *Role::ALL.choose(rng).unwrap();
            let predicate = sample_predicate(rng, scope_size(&scope, n));
            Statement::CountRole {
                scope,
                role,
                predicate,
            }
        }
        4 => {
            let scope = sample_scope(rng, players, speaker, false);
            let predicate = sample_predicate(rng, scope_size(&scope, n));
            Statement::CountLiars { scope, predicate }
        }
        _ => {
            let a = sample_form(rng, weights, players, speaker, false);
            let mut b = sample_form(rng, weights, players, speaker, false);
            for _ in 0..16 {
                if b != a {
                    break;
                }
                b = sample_form(rng, weights, players, speaker, false);
            }
            Statement::xor(a, b)
        }
    }
}

fn scope_size(scope: &Scope, n: usize) -> usize {
    match scope {
        Scope::All => n,
        Scope::Players(ps) => ps.len(),
    }
}

/// Player subsets keep the speaker, when drawn, in last position so the
/// rendered list reads "... and I".
fn sample_scope(
    rng: &mut ChaCha8Rng,
    players: &[PlayerId],
    speaker: &PlayerId,
    allow_all: bool,
) -> Scope {
    if allow_all && rng.gen_bool(0.5) {
        return Scope::All;
    }
    let max = players.len().min(4);
    let k = rng.gen_range(2..=max.max(2));
    let mut subset: Vec<PlayerId> = players
        .choose_multiple(rng, k.min(players.len()))
        .cloned()
        .collect();
    subset.shuffle(rng);
    if let Some(pos) = subset.iter().position(|p| p == speaker) {
        let me = subset.remove(pos);
        subset.push(me);
    }
    Scope::Players(subset)
}

fn sample_predicate(rng: &mut ChaCha8Rng, scope_size: usize) -> CountPredicate {
    if rng.gen_bool(0.5) {
        CountPredicate::Exactly(rng.gen_range(1..=scope_size.max(1)))
    } else {
        CountPredicate::Parity(if rng.gen_bool(0.5) {
            Parity::Even
        } else {
            Parity::Odd
        })
    }
}

/// Builds the dataset: `per_size` puzzles for each size, distinct per size by
/// statement set, with stable ids `size{n}-{k}`. Deterministic given seed.
pub fn build_dataset(sizes: &[usize], per_size: usize, root_seed: u64) -> Result<Vec<Puzzle>> {
    build_dataset_from_pool(
        sizes,
        per_size,
        root_seed,
        &TemplateWeights::default(),
        &NAME_POOL,
    )
}

pub(crate) fn build_dataset_from_pool(
    sizes: &[usize],
    per_size: usize,
    root_seed: u64,
    weights: &TemplateWeights,
    pool: &[&str],
) -> Result<Vec<Puzzle>> {
    if sizes.is_empty() {
        return Err(Error::EmptyInput("build_dataset"));
    }
    if per_size == 0 {
        return Err(Error::Config("per_size must be at least 1".into()));
    }
    let mut dataset = Vec::with_capacity(sizes.len() * per_size);
    for &size in sizes {
        let mut seen = BTreeSet::new();
        for k in 1..=per_size {
            let mut accepted = None;
            for attempt in 0..10_000u64 {
                let cfg = GenConfig {
                    size,
                    seed: seed::derive(root_seed, &[size as u64, k as u64, attempt]),
                    max_attempts: 10_000,
                    template_weights: weights.clone(),
                    hint_policy: HintPolicy::AlwaysOneSpyCount,
                };
                let puzzle = generate_one_from_pool(&cfg, pool)?;
                // a colliding statement set is rejected and resampled
                if seen.insert(puzzle.statement_key()) {
                    accepted = Some(puzzle);
                    break;
                }
            }
            let mut puzzle = accepted.ok_or(Error::GenerationFailed { attempts: 10_000 })?;
            puzzle.id = format!("size{size}-{k}");
            dataset.push(puzzle);
        }
    }
    Ok(dataset)
}

/// Serialized record shape: one puzzle per line, statements in canonical DSL
/// text.
#[derive(Debug, Serialize, Deserialize)]
struct PuzzleRecord {
    id: String,
    size: usize,
    players: Vec<String>,
    statements: BTreeMap<String, String>,
    hints: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solution: Option<BTreeMap<String, String>>,
}

impl Puzzle {
    pub fn to_json_line(&self) -> Result<String> {
        let record = PuzzleRecord {
            id: self.id.clone(),
            size: self.size,
            players: self.players.iter().map(|p| p.to_string()).collect(),
            statements: self
                .statements
                .iter()
                .map(|(p, s)| (p.to_string(), dsl::print(s)))
                .collect(),
            hints: self.hints.iter().map(|h| dsl::print(&h.0)).collect(),
            solution: self.solution.as_ref().map(|sol| {
                sol.iter()
                    .map(|(p, r)| (p.to_string(), r.to_string()))
                    .collect()
            }),
        };
        Ok(serde_json::to_string(&record)?)
    }

    pub fn from_json_line(line: &str) -> Result<Puzzle> {
        let record: PuzzleRecord = serde_json::from_str(line)?;
        let players: Vec<PlayerId> = record.players.iter().cloned().map(PlayerId::new).collect();
        let mut statements = BTreeMap::new();
        for (p, text) in &record.statements {
            statements.insert(
                PlayerId::new(p.clone()),
                dsl::parse_with_roster(text, &players)?,
            );
        }
        let mut hints = Vec::new();
        for text in &record.hints {
            hints.push(Hint(dsl::parse_with_roster(text, &players)?));
        }
        let solution = match record.solution {
            Some(sol) => {
                let mut out = RoleAssignment::new();
                for (p, r) in sol {
                    let role = Role::parse(&r)
                        .ok_or_else(|| Error::MalformedStatement(format!("unknown role `{r}`")))?;
                    out.insert(PlayerId::new(p), role);
                }
                Some(out)
            }
            None => None,
        };
        let puzzle = Puzzle {
            id: record.id,
            size: record.size,
            players,
            statements,
            hints,
            solution,
        };
        puzzle.validate()?;
        Ok(puzzle)
    }
}

pub fn write_puzzles(path: &Path, puzzles: &[Puzzle]) -> Result<()> {
    let mut file = File::create(path)?;
    for puzzle in puzzles {
        writeln!(file, "{}", puzzle.to_json_line()?)?;
    }
    Ok(())
}

pub fn read_puzzles(path: &Path) -> Result<Vec<Puzzle>> {
    let file = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in file.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(Puzzle::from_json_line(&line)?);
    }
    Ok(out)
}

/// Writes the plain-text rendering of each puzzle, separated by blank lines.
pub fn write_puzzles_text(path: &Path, puzzles: &[Puzzle]) -> Result<()> {
    let mut file = File::create(path)?;
    for puzzle in puzzles {
        writeln!(file, "=== {} ===", puzzle.id)?;
        writeln!(file, "{}", puzzle.game_info_text())?;
        writeln!(file)?;
    }
    Ok(())
}

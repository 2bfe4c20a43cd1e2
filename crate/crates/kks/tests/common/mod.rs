//! Shared test support: independent oracles (naive recursive solver,
//! brute-force metric recomputation, transition replay) and random input
//! builders. Everything here deliberately avoids the implementation paths it
//! cross-checks.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use kks::agents::{DebateTurn, Proposal};
use kks::engine::{
    AdjustmentRecord, DebateTranscript, ProposalRecord, Round, TurnRecord,
    TRANSCRIPT_SCHEMA_VERSION,
};
use kks::generator::Puzzle;
use kks::statement::{
    evaluate, CountPredicate, Parity, PlayerId, Polarity, Role, RoleAssignment, Scope, Statement,
    World,
};

/// Naive recursive solver: walks every (role, truth-bit) pair per player and
/// keeps role assignments admitting at least one world where every player's
/// bit equals their statement's truth value and all hints hold.
pub fn oracle_solve(puzzle: &Puzzle) -> Vec<RoleAssignment> {
    let players = &puzzle.players;
    let mut found: Vec<RoleAssignment> = Vec::new();
    let mut stack: Vec<(Role, bool)> = Vec::with_capacity(players.len());
    recurse(puzzle, players, &mut stack, &mut found);
    found.sort();
    found.dedup();
    found
}

fn recurse(
    puzzle: &Puzzle,
    players: &[PlayerId],
    stack: &mut Vec<(Role, bool)>,
    found: &mut Vec<RoleAssignment>,
) {
    if stack.len() == players.len() {
        if oracle_consistent(puzzle, players, stack) {
            found.push(
                players
                    .iter()
                    .cloned()
                    .zip(stack.iter().map(|(r, _)| *r))
                    .collect(),
            );
        }
        return;
    }
    for role in Role::ALL {
        for bit in [false, true] {
            // the coupling is checked here as data, not delegated
            let coupled = match role {
                Role::Knight => bit,
                Role::Knave => !bit,
                Role::Spy => true,
            };
            if !coupled {
                continue;
            }
            stack.push((role, bit));
            recurse(puzzle, players, stack, found);
            stack.pop();
        }
    }
}

fn oracle_consistent(puzzle: &Puzzle, players: &[PlayerId], stack: &[(Role, bool)]) -> bool {
    let world = World::new(
        players
            .iter()
            .cloned()
            .zip(stack.iter().map(|(r, _)| *r))
            .collect(),
        players
            .iter()
            .cloned()
            .zip(stack.iter().map(|(_, b)| *b))
            .collect(),
    );
    for (i, player) in players.iter().enumerate() {
        match evaluate(&puzzle.statements[player], &world) {
            Ok(value) => {
                if value != stack[i].1 {
                    return false;
                }
            }
            Err(_) => return false,
        }
    }
    puzzle
        .hints
        .iter()
        .all(|h| evaluate(&h.0, &world).unwrap_or(false))
}

/// A fully random puzzle: statements drawn with no consistency bias, so the
/// solution set may be empty, unique, or large. Exercises solver/oracle
/// agreement well beyond the certified distribution.
pub fn random_puzzle(rng: &mut ChaCha8Rng, size: usize, with_hint: bool) -> Puzzle {
    let players: Vec<PlayerId> = (0..size).map(|i| PlayerId::new(format!("P{i}"))).collect();
    let statements: Vec<(PlayerId, Statement)> = players
        .iter()
        .map(|p| (p.clone(), random_statement(rng, &players, true)))
        .collect();
    let hints = if with_hint {
        vec![random_statement(rng, &players, false)]
    } else {
        vec![]
    };
    Puzzle::from_parts("random", players, statements, hints)
}

pub fn random_statement(rng: &mut ChaCha8Rng, players: &[PlayerId], allow_meta: bool) -> Statement {
    let pick = |rng: &mut ChaCha8Rng| players.choose(rng).unwrap().clone();
    let pred = |rng: &mut ChaCha8Rng, max: usize| {
        if rng.gen_bool(0.5) {
            CountPredicate::Exactly(rng.gen_range(0..=max))
        } else {
            CountPredicate::Parity(if rng.gen_bool(0.5) {
                Parity::Even
            } else {
                Parity::Odd
            })
        }
    };
    let scope = |rng: &mut ChaCha8Rng| {
        let k = rng.gen_range(1..=players.len());
        Scope::Players(players.choose_multiple(rng, k).cloned().collect())
    };
    let form = rng.gen_range(0..if allow_meta { 6 } else { 5 });
    match form {
        0 => Statement::RoleClaim {
            subject: pick(rng),
            role: *Role::ALL.choose(rng).unwrap(),
        },
        1 => Statement::TruthClaim {
            subject: pick(rng),
            polarity: if rng.gen_bool(0.5) {
                Polarity::Truthful
            } else {
                Polarity::Lying
            },
        },
        2 => Statement::SameRole {
            a: pick(rng),
            b: pick(rng),
        },
        3 => {
            let s = if rng.gen_bool(0.5) {
                Scope::All
            } else {
                scope(rng)
            };
            let max = match &s {
                Scope::All => players.len(),
                Scope::Players(ps) => ps.len(),
            };
            Statement::CountRole {
                scope: s,
                role: *Role::ALL.choose(rng).unwrap(),
                predicate: pred(rng, max),
            }
        }
        4 => {
            let s = scope(rng);
            let max = match &s {
                Scope::Players(ps) => ps.len(),
                Scope::All => players.len(),
            };
            Statement::CountLiars {
                scope: s,
                predicate: pred(rng, max),
            }
        }
        _ => Statement::xor(
            random_statement(rng, players, false),
            random_statement(rng, players, false),
        ),
    }
}

/// Independently recomputed AUC metrics, written as plain counting loops with
/// their own majority logic.
pub struct BruteAuc {
    pub strict: f64,
    pub smooth: f64,
    pub agree_all: f64,
    pub agree_major: f64,
}

pub fn brute_auc(transcript: &DebateTranscript, truth: &RoleAssignment) -> BruteAuc {
    let t_max = transcript.rounds.len();
    let players: Vec<&PlayerId> = transcript.player_order.iter().collect();
    let num_agents = transcript.team.len();
    let major_threshold = num_agents.div_ceil(2); // ceil(A/2)

    let mut strict_sum = 0.0;
    let mut smooth_sum = 0.0;
    let mut agree_all_sum = 0.0;
    let mut agree_major_sum = 0.0;

    for t in 1..=t_max {
        let round = &transcript.rounds[t - 1];
        let mut correct_players = 0usize;
        let mut all_agree_players = 0usize;
        let mut major_players = 0usize;
        for player in &players {
            let mut histogram: BTreeMap<Role, usize> = BTreeMap::new();
            for adj in &round.adjustments {
                *histogram
                    .entry(adj.proposal.assignment[*player])
                    .or_insert(0) += 1;
            }
            let top = histogram.values().copied().max().unwrap_or(0);
            // the round prediction is the label with a strict majority
            let mut majority_label = None;
            for (label, count) in &histogram {
                if count * 2 > num_agents {
                    majority_label = Some(*label);
                }
            }
            if majority_label == Some(truth[*player]) {
                correct_players += 1;
            }
            if histogram.len() == 1 {
                all_agree_players += 1;
            }
            if top >= major_threshold {
                major_players += 1;
            }
        }
        if correct_players == players.len() {
            strict_sum += 1.0;
        }
        smooth_sum += correct_players as f64 / players.len() as f64;
        agree_all_sum += all_agree_players as f64 / players.len() as f64;
        agree_major_sum += major_players as f64 / players.len() as f64;
    }
    BruteAuc {
        strict: strict_sum / t_max as f64,
        smooth: smooth_sum / t_max as f64,
        agree_all: agree_all_sum / t_max as f64,
        agree_major: agree_major_sum / t_max as f64,
    }
}

/// Independent transition replay: re-derives every (start, end) pair from the
/// raw snapshots with its own state classification.
pub fn brute_transitions(
    transcript: &DebateTranscript,
    truth: &RoleAssignment,
) -> BTreeMap<(String, String), u64> {
    let mut out: BTreeMap<(String, String), u64> = BTreeMap::new();
    let num_agents = transcript.team.len();
    for (idx, round) in transcript.rounds.iter().enumerate() {
        let focus = &round.focus_player;
        let before: Vec<Role> = if idx == 0 {
            transcript
                .initial_proposals
                .iter()
                .map(|p| p.proposal.assignment[focus])
                .collect()
        } else {
            transcript.rounds[idx - 1]
                .adjustments
                .iter()
                .map(|a| a.proposal.assignment[focus])
                .collect()
        };
        let after: Vec<Role> = round
            .adjustments
            .iter()
            .map(|a| a.proposal.assignment[focus])
            .collect();
        for i in 0..num_agents {
            let own = before[i];
            let own_count = before.iter().filter(|r| **r == own).count();
            let top = Role::ALL
                .iter()
                .map(|r| before.iter().filter(|x| **x == *r).count())
                .max()
                .unwrap();
            let has_clear_majority = top * 2 > num_agents;
            let prefix = if !has_clear_majority {
                "C"
            } else if own_count * 2 > num_agents {
                "Ma"
            } else {
                "Mi"
            };
            let start = format!("{prefix}{}", if own == truth[focus] { "C" } else { "W" });
            let end = if after[i] == truth[focus] { "C" } else { "W" };
            *out.entry((start, end.to_string())).or_insert(0) += 1;
        }
    }
    out
}

/// Brute correction rate per start state.
pub fn brute_correction_rates(
    transitions: &BTreeMap<(String, String), u64>,
) -> BTreeMap<String, f64> {
    let mut totals: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for ((start, end), n) in transitions {
        let entry = totals.entry(start.clone()).or_insert((0, 0));
        if end == "C" {
            entry.0 += n;
        } else {
            entry.1 += n;
        }
    }
    totals
        .into_iter()
        .map(|(s, (c, w))| (s, c as f64 / (c + w) as f64))
        .collect()
}

/// A structurally valid transcript with fully random positions, for metric
/// identity and oracle-recomputation tests.
pub fn synthetic_transcript(
    seed: u64,
    num_agents: usize,
    num_players: usize,
    num_rounds: usize,
) -> (DebateTranscript, RoleAssignment) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let players: Vec<PlayerId> = (0..num_players)
        .map(|i| PlayerId::new(format!("P{i}")))
        .collect();
    let team: Vec<String> = (0..num_agents).map(|i| format!("a{}", i + 1)).collect();
    let truth: RoleAssignment = players
        .iter()
        .map(|p| (p.clone(), *Role::ALL.choose(&mut rng).unwrap()))
        .collect();
    let random_assignment = |rng: &mut ChaCha8Rng| -> RoleAssignment {
        players
            .iter()
            .map(|p| (p.clone(), *Role::ALL.choose(rng).unwrap()))
            .collect()
    };

    let initial_proposals: Vec<ProposalRecord> = team
        .iter()
        .map(|agent| ProposalRecord {
            agent: agent.clone(),
            proposal: Proposal::new(random_assignment(&mut rng), "synthetic"),
        })
        .collect();

    let mut rounds = Vec::with_capacity(num_rounds);
    for t in 1..=num_rounds {
        let focus = players[(t - 1) % players.len()].clone();
        let turns: Vec<TurnRecord> = team
            .iter()
            .map(|agent| TurnRecord {
                agent: agent.clone(),
                turn: DebateTurn {
                    focus_player: focus.clone(),
                    role: *Role::ALL.choose(&mut rng).unwrap(),
                    agree_with: Default::default(),
                    disagree_with: Default::default(),
                    agree_reasoning: String::new(),
                    disagree_reasoning: String::new(),
                },
            })
            .collect();
        let adjustments: Vec<AdjustmentRecord> = team
            .iter()
            .map(|agent| AdjustmentRecord {
                agent: agent.clone(),
                proposal: Proposal::new(random_assignment(&mut rng), "synthetic"),
            })
            .collect();
        rounds.push(Round {
            round_number: t,
            focus_player: focus,
            turns,
            adjustments,
            consensus_label: None,
        });
    }

    let final_per_agent: Vec<AdjustmentRecord> = rounds
        .last()
        .map(|r| r.adjustments.clone())
        .unwrap_or_else(|| {
            initial_proposals
                .iter()
                .map(|p| AdjustmentRecord {
                    agent: p.agent.clone(),
                    proposal: p.proposal.clone(),
                })
                .collect()
        });
    let final_decision = random_assignment(&mut rng);

    let transcript = DebateTranscript {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        puzzle_id: format!("synthetic-{seed}"),
        team,
        depth: 1,
        confidence_visible: false,
        order_agreed: false,
        player_order: players,
        initial_proposals,
        rounds,
        final_per_agent,
        final_decision,
        supervisor_invocations: vec![],
        fallbacks: vec![],
        elapsed: None,
    };
    (transcript, truth)
}

/// Ridge oracle: solves the equivalent augmented least-squares problem
/// [X; sqrt(lambda) S] beta ~ [y; 0] through an SVD, a different
/// factorization from the normal-equations path under test.
pub fn ridge_oracle(features: &[Vec<f64>], target: &[f64], lambda: f64) -> Vec<f64> {
    use nalgebra::{DMatrix, DVector};
    let n = features.len();
    let p = features[0].len();
    let cols = p + 1;
    let mut rows = Vec::with_capacity(n + p);
    for row in features {
        let mut r = Vec::with_capacity(cols);
        r.push(1.0);
        r.extend_from_slice(row);
        rows.push(r);
    }
    for j in 0..p {
        let mut r = vec![0.0; cols];
        r[j + 1] = lambda.sqrt();
        rows.push(r);
    }
    let a = DMatrix::from_fn(n + p, cols, |i, j| rows[i][j]);
    let mut b = DVector::zeros(n + p);
    for (i, y) in target.iter().enumerate() {
        b[i] = *y;
    }
    let svd = a.svd(true, true);
    let beta = svd.solve(&b, 1e-12).expect("svd solve");
    beta.iter().copied().collect()
}

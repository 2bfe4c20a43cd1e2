//! Outcome metrics over debate transcripts: strict and smooth accuracy,
//! their round-averaged AUC variants, agreement AUCs, and the position-state
//! transition bookkeeping behind the correction-rate analyses.
//!
//! Round indexing: t = 0 is the initial proposals, rounds 1..T are the
//! post-self-adjustment snapshots. AUC sums run over t = 1..T only. The
//! round-t prediction for a player is the strict-majority label over agents;
//! a tied player counts as incorrect for strict and contributes 0 in smooth.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::{strict_majority, DebateTranscript};
use crate::error::{Error, Result};
use crate::statement::{PlayerId, Role, RoleAssignment};

/// Fraction of instances whose prediction matches ground truth on every
/// player.
pub fn strict_accuracy(finals: &[(RoleAssignment, RoleAssignment)]) -> Result<f64> {
    if finals.is_empty() {
        return Err(Error::EmptyInput("strict_accuracy"));
    }
    let correct = finals
        .iter()
        .filter(|(predicted, truth)| predicted == truth)
        .count();
    Ok(correct as f64 / finals.len() as f64)
}

/// Mean over instances of the per-player correct fraction.
pub fn smooth_accuracy(finals: &[(RoleAssignment, RoleAssignment)]) -> Result<f64> {
    if finals.is_empty() {
        return Err(Error::EmptyInput("smooth_accuracy"));
    }
    let mut total = 0.0;
    for (predicted, truth) in finals {
        let correct = truth
            .iter()
            .filter(|(p, role)| predicted.get(*p) == Some(*role))
            .count();
        total += correct as f64 / truth.len() as f64;
    }
    Ok(total / finals.len() as f64)
}

/// Strict-majority label over the agents' round-`t` labels for one player.
fn round_majority(snapshot: &BTreeMap<&str, &RoleAssignment>, player: &PlayerId) -> Option<Role> {
    let labels: Vec<Role> = snapshot.values().map(|a| a[player]).collect();
    strict_majority(&labels)
}

fn require_rounds(transcript: &DebateTranscript) -> Result<usize> {
    match transcript.num_rounds() {
        0 => Err(Error::EmptyInput("auc over rounds")),
        t => Ok(t),
    }
}

/// (1/T) sum of the all-players-correct indicator of the round-majority
/// prediction.
pub fn auc_strict(transcript: &DebateTranscript, truth: &RoleAssignment) -> Result<f64> {
    let t_max = require_rounds(transcript)?;
    let mut sum = 0.0;
    for t in 1..=t_max {
        let snapshot = transcript.snapshot(t);
        let all_correct = truth
            .iter()
            .all(|(p, role)| round_majority(&snapshot, p) == Some(*role));
        if all_correct {
            sum += 1.0;
        }
    }
    Ok(sum / t_max as f64)
}

/// (1/T) sum of the per-round fraction of players the round majority gets
/// right.
pub fn auc_smooth(transcript: &DebateTranscript, truth: &RoleAssignment) -> Result<f64> {
    let t_max = require_rounds(transcript)?;
    let mut sum = 0.0;
    for t in 1..=t_max {
        let snapshot = transcript.snapshot(t);
        let correct = truth
            .iter()
            .filter(|(p, role)| round_majority(&snapshot, p) == Some(**role))
            .count();
        sum += correct as f64 / truth.len() as f64;
    }
    Ok(sum / t_max as f64)
}

/// (1/T) sum of the per-round fraction of players on which all agents agree.
pub fn auc_agree_all(transcript: &DebateTranscript) -> Result<f64> {
    let t_max = require_rounds(transcript)?;
    let players = transcript.player_order.clone();
    let mut sum = 0.0;
    for t in 1..=t_max {
        let snapshot = transcript.snapshot(t);
        let agreed = players
            .iter()
            .filter(|p| {
                let mut labels = snapshot.values().map(|a| a[*p]);
                let first = labels.next();
                labels.all(|l| Some(l) == first)
            })
            .count();
        sum += agreed as f64 / players.len() as f64;
    }
    Ok(sum / t_max as f64)
}

/// (1/T) sum of the per-round fraction of players whose top label is held by
/// at least ceil(A/2) agents. Note the threshold is ceil(A/2), not a strict
/// majority: a 2-2 split among four agents counts.
pub fn auc_agree_major(transcript: &DebateTranscript) -> Result<f64> {
    let t_max = require_rounds(transcript)?;
    let players = transcript.player_order.clone();
    let a = transcript.team.len();
    let threshold = a.div_ceil(2);
    let mut sum = 0.0;
    for t in 1..=t_max {
        let snapshot = transcript.snapshot(t);
        let agreed = players
            .iter()
            .filter(|p| {
                let mut counts = [0usize; 3];
                for assignment in snapshot.values() {
                    counts[assignment[*p] as usize] += 1;
                }
                counts.iter().max().copied().unwrap_or(0) >= threshold
            })
            .count();
        sum += agreed as f64 / players.len() as f64;
    }
    Ok(sum / t_max as f64)
}

/// An agent's position relative to the group before a round: in a clear
/// majority (Ma), in a minority against one (Mi), or in chaos (C, no clear
/// majority), suffixed by whether its own label is correct (C) or wrong (W).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StartState {
    MaC,
    MaW,
    MiC,
    MiW,
    CC,
    CW,
}

impl StartState {
    pub const ALL: [StartState; 6] = [
        StartState::MaC,
        StartState::MaW,
        StartState::MiC,
        StartState::MiW,
        StartState::CC,
        StartState::CW,
    ];
}

impl fmt::Display for StartState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StartState::MaC => "MaC",
            StartState::MaW => "MaW",
            StartState::MiC => "MiC",
            StartState::MiW => "MiW",
            StartState::CC => "CC",
            StartState::CW => "CW",
        })
    }
}

/// Post-round correctness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EndState {
    C,
    W,
}

impl fmt::Display for EndState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EndState::C => "C",
            EndState::W => "W",
        })
    }
}

/// Classifies one agent's pre-round position. `all_labels` includes the
/// agent's own label. A clear majority needs at least ceil((A+1)/2) holders,
/// i.e. a strict majority; anything weaker is chaos.
pub fn classify_position(agent_label: Role, all_labels: &[Role], truth: Role) -> StartState {
    let a = all_labels.len();
    let threshold = a / 2 + 1;
    let mut counts = [0usize; 3];
    for label in all_labels {
        counts[*label as usize] += 1;
    }
    let top = counts.iter().max().copied().unwrap_or(0);
    let correct = agent_label == truth;
    if top < threshold {
        if correct {
            StartState::CC
        } else {
            StartState::CW
        }
    } else if counts[agent_label as usize] >= threshold {
        if correct {
            StartState::MaC
        } else {
            StartState::MaW
        }
    } else if correct {
        StartState::MiC
    } else {
        StartState::MiW
    }
}

/// True when no clear-majority label exists among the counts.
pub fn is_chaos(labels: &[Role]) -> bool {
    strict_majority(labels).is_none()
}

/// Counts of the 12 (start, end) transitions, overall and per agent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub counts: BTreeMap<StartState, BTreeMap<EndState, u64>>,
    pub per_agent: BTreeMap<String, BTreeMap<StartState, BTreeMap<EndState, u64>>>,
}

impl TransitionTable {
    pub fn count(&self, start: StartState, end: EndState) -> u64 {
        self.counts
            .get(&start)
            .and_then(|m| m.get(&end))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().flat_map(|m| m.values()).copied().sum()
    }

    /// Fraction of each start state's occurrences that end correct.
    pub fn correction_rates(&self) -> BTreeMap<StartState, f64> {
        let mut out = BTreeMap::new();
        for start in StartState::ALL {
            let c = self.count(start, EndState::C);
            let w = self.count(start, EndState::W);
            if c + w > 0 {
                out.insert(start, c as f64 / (c + w) as f64);
            }
        }
        out
    }

    /// Per-agent correction rates, the heatmap quantity.
    pub fn agent_correction_rates(&self) -> BTreeMap<String, BTreeMap<StartState, f64>> {
        let mut out = BTreeMap::new();
        for (agent, table) in &self.per_agent {
            let mut rates = BTreeMap::new();
            for start in StartState::ALL {
                let c = table
                    .get(&start)
                    .and_then(|m| m.get(&EndState::C))
                    .copied()
                    .unwrap_or(0);
                let w = table
                    .get(&start)
                    .and_then(|m| m.get(&EndState::W))
                    .copied()
                    .unwrap_or(0);
                if c + w > 0 {
                    rates.insert(start, c as f64 / (c + w) as f64);
                }
            }
            out.insert(agent.clone(), rates);
        }
        out
    }

    pub fn merge(&mut self, other: &TransitionTable) {
        for (start, ends) in &other.counts {
            for (end, n) in ends {
                *self
                    .counts
                    .entry(*start)
                    .or_default()
                    .entry(*end)
                    .or_default() += n;
            }
        }
        for (agent, table) in &other.per_agent {
            let mine = self.per_agent.entry(agent.clone()).or_default();
            for (start, ends) in table {
                for (end, n) in ends {
                    *mine.entry(*start).or_default().entry(*end).or_default() += n;
                }
            }
        }
    }
}

/// For every agent and round, pairs the pre-round position on the focus
/// player with the post-adjustment correctness on that player.
pub fn transition_counts(
    transcript: &DebateTranscript,
    truth: &RoleAssignment,
) -> Result<TransitionTable> {
    let t_max = require_rounds(transcript)?;
    let mut table = TransitionTable::default();
    for t in 1..=t_max {
        let focus = &transcript.rounds[t - 1].focus_player;
        let before = transcript.snapshot(t - 1);
        let after = transcript.snapshot(t);
        let labels: Vec<Role> = transcript
            .team
            .iter()
            .map(|agent| before[agent.as_str()][focus])
            .collect();
        for (i, agent) in transcript.team.iter().enumerate() {
            let start = classify_position(labels[i], &labels, truth[focus]);
            let end = if after[agent.as_str()][focus] == truth[focus] {
                EndState::C
            } else {
                EndState::W
            };
            *table
                .counts
                .entry(start)
                .or_default()
                .entry(end)
                .or_default() += 1;
            *table
                .per_agent
                .entry(agent.clone())
                .or_default()
                .entry(start)
                .or_default()
                .entry(end)
                .or_default() += 1;
        }
    }
    Ok(table)
}

/// Initial-majority accuracy of a transcript (the pre-debate baseline).
pub fn initial_vote_accuracy(transcript: &DebateTranscript, truth: &RoleAssignment) -> (f64, f64) {
    let snapshot = transcript.snapshot(0);
    let correct = truth
        .iter()
        .filter(|(p, role)| round_majority(&snapshot, p) == Some(**role))
        .count();
    let smooth = correct as f64 / truth.len() as f64;
    let strict = if correct == truth.len() { 1.0 } else { 0.0 };
    (strict, smooth)
}

/// Whether any player's initial labels lack a clear majority.
pub fn initial_has_chaos(transcript: &DebateTranscript) -> bool {
    let snapshot = transcript.snapshot(0);
    transcript.player_order.iter().any(|p| {
        let labels: Vec<Role> = snapshot.values().map(|a| a[p]).collect();
        is_chaos(&labels)
    })
}

/// All headline metrics for one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetrics {
    pub puzzle_id: String,
    pub size: usize,
    pub init_strict: f64,
    pub init_smooth: f64,
    pub final_strict: f64,
    pub final_smooth: f64,
    pub init_agent_strict: f64,
    pub final_agent_strict: f64,
    pub auc_strict: f64,
    pub auc_smooth: f64,
    pub auc_agree_all: f64,
    pub auc_agree_major: f64,
    pub supervisor_invocations: usize,
    pub fallbacks: usize,
}

pub fn instance_metrics(
    transcript: &DebateTranscript,
    truth: &RoleAssignment,
) -> Result<InstanceMetrics> {
    let (init_strict, init_smooth) = initial_vote_accuracy(transcript, truth);
    let finals = vec![(transcript.final_decision.clone(), truth.clone())];
    let agent_strict = |records: &[crate::engine::ProposalRecord]| -> f64 {
        let correct = records
            .iter()
            .filter(|r| &r.proposal.assignment == truth)
            .count();
        correct as f64 / records.len() as f64
    };
    let init_agent_strict = agent_strict(&transcript.initial_proposals);
    let final_agent_strict = {
        let correct = transcript
            .final_per_agent
            .iter()
            .filter(|r| &r.proposal.assignment == truth)
            .count();
        correct as f64 / transcript.final_per_agent.len() as f64
    };
    Ok(InstanceMetrics {
        puzzle_id: transcript.puzzle_id.clone(),
        size: truth.len(),
        init_strict,
        init_smooth,
        final_strict: strict_accuracy(&finals)?,
        final_smooth: smooth_accuracy(&finals)?,
        init_agent_strict,
        final_agent_strict,
        auc_strict: auc_strict(transcript, truth)?,
        auc_smooth: auc_smooth(transcript, truth)?,
        auc_agree_all: auc_agree_all(transcript)?,
        auc_agree_major: auc_agree_major(transcript)?,
        supervisor_invocations: transcript.supervisor_invocations.len(),
        fallbacks: transcript.fallbacks.len(),
    })
}

/// Aggregate over a batch of games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub strict_accuracy: f64,
    pub smooth_accuracy: f64,
    pub auc_strict: f64,
    pub auc_smooth: f64,
    pub auc_agree_all: f64,
    pub auc_agree_major: f64,
    pub per_instance: Vec<InstanceMetrics>,
}

pub fn compute_report(games: &[(DebateTranscript, RoleAssignment)]) -> Result<MetricsReport> {
    if games.is_empty() {
        return Err(Error::EmptyInput("compute_report"));
    }
    let per_instance: Vec<InstanceMetrics> = games
        .iter()
        .map(|(t, truth)| instance_metrics(t, truth))
        .collect::<Result<_>>()?;
    let n = per_instance.len() as f64;
    let mean = |f: fn(&InstanceMetrics) -> f64| per_instance.iter().map(f).sum::<f64>() / n;
    Ok(MetricsReport {
        n: per_instance.len(),
        strict_accuracy: mean(|m| m.final_strict),
        smooth_accuracy: mean(|m| m.final_smooth),
        auc_strict: mean(|m| m.auc_strict),
        auc_smooth: mean(|m| m.auc_smooth),
        auc_agree_all: mean(|m| m.auc_agree_all),
        auc_agree_major: mean(|m| m.auc_agree_major),
        per_instance,
    })
}

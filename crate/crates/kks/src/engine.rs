//! The debate protocol state machine: initial proposals, a player-by-player
//! loop of debate and self-adjustment phases repeated `depth` times, then a
//! final decision by per-player majority vote with supervisor tie-breaks.
//!
//! One game instance is strictly sequential. Agent failures degrade to
//! documented fallbacks and never abort a game; a supervisor failure does.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{
    Agent, AgentKind, AgentSpec, DebateTurn, Proposal, RemoteAgent, RemoteSettings, ScriptedAgent,
};
use crate::error::{Error, Result};
use crate::generator::Puzzle;
use crate::seed;
use crate::statement::{PlayerId, Role, RoleAssignment};

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderPolicy {
    /// Debate players in the puzzle's listed order.
    Fixed,
    /// Each agent proposes an order; the plurality order wins, ties broken by
    /// a seeded draw.
    Agreed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateConfig {
    pub team: Vec<AgentSpec>,
    pub confidence_visible: bool,
    pub order_policy: OrderPolicy,
    pub depth: usize,
    pub supervisor: AgentSpec,
    pub seed: u64,
}

impl DebateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.team.len() < 2 {
            return Err(Error::Config("team must have at least 2 agents".into()));
        }
        if self.depth < 1 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        let mut names: Vec<&str> = self.team.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.team.len() {
            return Err(Error::Config(
                "agent names must be unique within a team".into(),
            ));
        }
        if self.team.iter().any(|a| a.name.is_empty()) || self.supervisor.name.is_empty() {
            return Err(Error::Config("agent names must be non-empty".into()));
        }
        Ok(())
    }
}

/// Execution options orthogonal to the debate factors.
#[derive(Debug, Clone, Default)]
pub struct EngineOptions {
    /// Endpoint settings for remote agents. Required when the team or the
    /// supervisor is remote.
    pub remote: Option<RemoteSettings>,
    /// Forbids any network use; remote specs become configuration errors.
    pub offline: bool,
}

/// Read-only game state handed to agents.
#[derive(Debug, Clone, Copy)]
pub struct GameView<'a> {
    pub puzzle: &'a Puzzle,
    pub game_text: &'a str,
}

/// One agent's current stance on the focus player, as exposed to peers.
#[derive(Debug, Clone)]
pub struct PositionView {
    pub agent: String,
    pub role: Role,
    pub explanation: String,
    /// Focus-player confidence; populated only when visibility is enabled.
    pub confidence: Option<u8>,
}

/// One agent's latest full solution, as exposed during self-adjustment.
#[derive(Debug, Clone)]
pub struct LatestSolutionView {
    pub agent: String,
    pub assignment: RoleAssignment,
    pub explanation: String,
    /// Mean confidence; populated only when visibility is enabled.
    pub confidence: Option<u8>,
}

#[derive(Debug, Clone)]
pub struct DebateContext<'a> {
    pub game: GameView<'a>,
    pub self_name: &'a str,
    pub focus_player: &'a PlayerId,
    pub round_number: usize,
    pub team: &'a [String],
    /// Current positions in team order, including turns already taken this
    /// round.
    pub positions: Vec<PositionView>,
    pub previous_rounds: &'a [Round],
    pub confidence_visible: bool,
}

#[derive(Debug, Clone)]
pub struct AdjustContext<'a> {
    pub game: GameView<'a>,
    pub self_name: &'a str,
    pub focus_player: &'a PlayerId,
    pub round_number: usize,
    /// This round's debate turns in team order.
    pub turns: &'a [TurnRecord],
    pub previous_rounds: &'a [Round],
    /// Latest full solutions, frozen when the adjustment phase starts; all
    /// agents adjust against the same snapshot.
    pub latest: &'a [LatestSolutionView],
    pub confidence_visible: bool,
}

#[derive(Debug, Clone)]
pub struct FinalContext<'a> {
    pub game: GameView<'a>,
    pub self_name: &'a str,
    pub initial_proposals: &'a [ProposalRecord],
    pub rounds: &'a [Round],
    pub confidence_visible: bool,
}

impl FinalContext<'_> {
    /// The agent's assignment after the last self-adjustment.
    pub fn latest_assignment(&self, agent: &str) -> Option<&RoleAssignment> {
        for round in self.rounds.iter().rev() {
            if let Some(adj) = round.adjustments.iter().find(|a| a.agent == agent) {
                return Some(&adj.proposal.assignment);
            }
        }
        self.initial_proposals
            .iter()
            .find(|p| p.agent == agent)
            .map(|p| &p.proposal.assignment)
    }
}

#[derive(Debug, Clone)]
pub struct SupervisorContext<'a> {
    pub game: GameView<'a>,
    pub initial_proposals: &'a [ProposalRecord],
    pub rounds: &'a [Round],
    pub tied_players: &'a [PlayerId],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub agent: String,
    pub proposal: Proposal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub agent: String,
    pub turn: DebateTurn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentRecord {
    pub agent: String,
    pub proposal: Proposal,
}

/// One focus-player round: the debate turns, then everyone's full-assignment
/// self-adjustment, then the strict-majority consensus label if one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub round_number: usize,
    pub focus_player: PlayerId,
    pub turns: Vec<TurnRecord>,
    pub adjustments: Vec<AdjustmentRecord>,
    pub consensus_label: Option<Role>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Proposal,
    Debate,
    Adjustment,
    Final,
    Order,
}

/// A degraded agent call, preserved for analysis integrity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackFlag {
    pub agent: String,
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupervisorInvocation {
    pub player: PlayerId,
    pub reason: String,
}

/// The complete, replayable record of one game. Wall-clock timing stays in
/// memory only so that fixed-seed scripted games serialize byte-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTranscript {
    pub schema_version: u32,
    pub puzzle_id: String,
    pub team: Vec<String>,
    pub depth: usize,
    pub confidence_visible: bool,
    pub order_agreed: bool,
    pub player_order: Vec<PlayerId>,
    pub initial_proposals: Vec<ProposalRecord>,
    pub rounds: Vec<Round>,
    pub final_per_agent: Vec<AdjustmentRecord>,
    pub final_decision: RoleAssignment,
    pub supervisor_invocations: Vec<SupervisorInvocation>,
    pub fallbacks: Vec<FallbackFlag>,
    #[serde(skip)]
    pub elapsed: Option<Duration>,
}

impl DebateTranscript {
    /// Per-agent full assignments as of round `t` (1-based); `t = 0` is the
    /// initial proposals.
    pub fn snapshot(&self, t: usize) -> BTreeMap<&str, &RoleAssignment> {
        if t == 0 {
            self.initial_proposals
                .iter()
                .map(|p| (p.agent.as_str(), &p.proposal.assignment))
                .collect()
        } else {
            self.rounds[t - 1]
                .adjustments
                .iter()
                .map(|a| (a.agent.as_str(), &a.proposal.assignment))
                .collect()
        }
    }

    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json_line(line: &str) -> Result<DebateTranscript> {
        Ok(serde_json::from_str(line)?)
    }
}

pub fn write_transcripts(path: &Path, transcripts: &[DebateTranscript]) -> Result<()> {
    let mut file = File::create(path)?;
    for t in transcripts {
        writeln!(file, "{}", t.to_json_line()?)?;
    }
    Ok(())
}

pub fn read_transcripts(path: &Path) -> Result<Vec<DebateTranscript>> {
    let file = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in file.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(DebateTranscript::from_json_line(&line)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteOutcome {
    Majority(Role),
    Tie,
}

/// Strict majority: the label held by strictly more than half the agents.
/// Anything weaker, plurality included, is a tie.
pub fn majority_vote(labels: &[Role]) -> VoteOutcome {
    match strict_majority(labels) {
        Some(role) => VoteOutcome::Majority(role),
        None => VoteOutcome::Tie,
    }
}

pub fn strict_majority(labels: &[Role]) -> Option<Role> {
    let mut counts = [0usize; 3];
    for label in labels {
        counts[*label as usize] += 1;
    }
    Role::ALL
        .iter()
        .copied()
        .find(|r| counts[*r as usize] * 2 > labels.len())
}

/// The unique most-common label, or `None` on a tie for first place.
pub fn plurality(labels: &[Role]) -> Option<Role> {
    let mut counts = [0usize; 3];
    for label in labels {
        counts[*label as usize] += 1;
    }
    let max = *counts.iter().max().unwrap();
    if max == 0 || counts.iter().filter(|c| **c == max).count() != 1 {
        return None;
    }
    Role::ALL
        .iter()
        .copied()
        .find(|r| counts[*r as usize] == max)
}

pub fn build_agent(
    spec: &AgentSpec,
    agent_seed: u64,
    opts: &EngineOptions,
) -> Result<Box<dyn Agent>> {
    match &spec.kind {
        AgentKind::Scripted { .. } => Ok(Box::new(ScriptedAgent::new(spec.clone(), agent_seed)?)),
        AgentKind::Remote { .. } => {
            if opts.offline {
                return Err(Error::Config(format!(
                    "offline mode forbids remote agent `{}`",
                    spec.name
                )));
            }
            let settings = opts
                .remote
                .clone()
                .ok_or_else(|| Error::Config("remote agents need endpoint settings".into()))?;
            Ok(Box::new(RemoteAgent::new(spec.clone(), settings)?))
        }
    }
}

pub fn run_debate(puzzle: &Puzzle, cfg: &DebateConfig) -> Result<DebateTranscript> {
    run_debate_with(puzzle, cfg, &EngineOptions::default())
}

pub fn run_debate_with(
    puzzle: &Puzzle,
    cfg: &DebateConfig,
    opts: &EngineOptions,
) -> Result<DebateTranscript> {
    let started = Instant::now();
    cfg.validate()?;
    puzzle.validate()?;
    if puzzle.solution.is_none() {
        return Err(Error::Config("debates require a certified puzzle".into()));
    }

    let game_text = puzzle.game_info_text();
    let game = GameView {
        puzzle,
        game_text: &game_text,
    };
    let puzzle_tag = seed::hash_str(&puzzle.id);
    let team: Vec<String> = cfg.team.iter().map(|a| a.name.clone()).collect();
    let mut agents: Vec<Box<dyn Agent>> = Vec::with_capacity(cfg.team.len());
    for (i, spec) in cfg.team.iter().enumerate() {
        agents.push(build_agent(
            spec,
            seed::derive(cfg.seed, &[puzzle_tag, i as u64]),
            opts,
        )?);
    }
    let mut fallbacks: Vec<FallbackFlag> = Vec::new();

    // Phase 1: independent initial proposals.
    let mut initial_proposals: Vec<ProposalRecord> = Vec::with_capacity(agents.len());
    for (i, agent) in agents.iter_mut().enumerate() {
        let proposal = agent
            .propose(&game)
            .and_then(|p| p.validate(&puzzle.players).map(|()| p));
        let proposal = match proposal {
            Ok(p) => p,
            Err(_) => {
                fallbacks.push(FallbackFlag {
                    agent: team[i].clone(),
                    phase: Phase::Proposal,
                    round: None,
                });
                fallback_proposal(puzzle, cfg.seed, puzzle_tag, i)
            }
        };
        initial_proposals.push(ProposalRecord {
            agent: team[i].clone(),
            proposal,
        });
    }

    // Live per-agent state: last full assignment, explanation, confidence.
    let mut stances: Vec<RoleAssignment> = initial_proposals
        .iter()
        .map(|p| p.proposal.assignment.clone())
        .collect();
    let mut explanations: Vec<String> = initial_proposals
        .iter()
        .map(|p| p.proposal.explanation.clone())
        .collect();
    let mut confidences: Vec<Option<BTreeMap<PlayerId, u8>>> = initial_proposals
        .iter()
        .map(|p| p.proposal.confidence.clone())
        .collect();

    // Phase 2: the player order.
    let player_order = decide_order(cfg, puzzle, &game, &mut agents, &mut fallbacks)?;

    // Phase 3: the player-by-player loop, `depth` full passes with round
    // indices continuing across passes.
    let mut rounds: Vec<Round> = Vec::with_capacity(puzzle.players.len() * cfg.depth);
    let mut round_number = 0usize;
    for _pass in 0..cfg.depth {
        for focus in &player_order {
            round_number += 1;

            // Debate phase: turns are sequential and visible to later agents.
            let mut turns: Vec<TurnRecord> = Vec::with_capacity(agents.len());
            for i in 0..agents.len() {
                let positions: Vec<PositionView> = (0..agents.len())
                    .map(|j| PositionView {
                        agent: team[j].clone(),
                        role: stances[j][focus],
                        explanation: explanations[j].clone(),
                        confidence: if cfg.confidence_visible {
                            confidences[j].as_ref().and_then(|c| c.get(focus)).copied()
                        } else {
                            None
                        },
                    })
                    .collect();
                let ctx = DebateContext {
                    game,
                    self_name: &team[i],
                    focus_player: focus,
                    round_number,
                    team: &team,
                    positions,
                    previous_rounds: &rounds,
                    confidence_visible: cfg.confidence_visible,
                };
                let turn = agents[i]
                    .debate_turn(&ctx)
                    .and_then(|t| t.validate(&team[i], &team, focus).map(|()| t));
                let turn = match turn {
                    Ok(t) => t,
                    Err(_) => {
                        fallbacks.push(FallbackFlag {
                            agent: team[i].clone(),
                            phase: Phase::Debate,
                            round: Some(round_number),
                        });
                        // keep the current label, no agreements either way
                        DebateTurn {
                            focus_player: focus.clone(),
                            role: stances[i][focus],
                            agree_with: Default::default(),
                            disagree_with: Default::default(),
                            agree_reasoning: String::new(),
                            disagree_reasoning: String::new(),
                        }
                    }
                };
                stances[i].insert(focus.clone(), turn.role);
                turns.push(TurnRecord {
                    agent: team[i].clone(),
                    turn,
                });
            }

            // Self-adjustment phase: everyone revises against the same
            // post-debate snapshot.
            let latest: Vec<LatestSolutionView> = (0..agents.len())
                .map(|j| LatestSolutionView {
                    agent: team[j].clone(),
                    assignment: stances[j].clone(),
                    explanation: explanations[j].clone(),
                    confidence: if cfg.confidence_visible {
                        confidences[j]
                            .as_ref()
                            .and_then(crate::agents::mean_confidence)
                    } else {
                        None
                    },
                })
                .collect();
            let mut adjustments: Vec<AdjustmentRecord> = Vec::with_capacity(agents.len());
            for i in 0..agents.len() {
                let ctx = AdjustContext {
                    game,
                    self_name: &team[i],
                    focus_player: focus,
                    round_number,
                    turns: &turns,
                    previous_rounds: &rounds,
                    latest: &latest,
                    confidence_visible: cfg.confidence_visible,
                };
                let proposal = agents[i]
                    .self_adjust(&ctx)
                    .and_then(|p| p.validate(&puzzle.players).map(|()| p));
                let proposal = match proposal {
                    Ok(p) => p,
                    Err(_) => {
                        fallbacks.push(FallbackFlag {
                            agent: team[i].clone(),
                            phase: Phase::Adjustment,
                            round: Some(round_number),
                        });
                        // retain the prior full position
                        Proposal {
                            assignment: latest[i].assignment.clone(),
                            explanation: explanations[i].clone(),
                            confidence: confidences[i].clone(),
                        }
                    }
                };
                adjustments.push(AdjustmentRecord {
                    agent: team[i].clone(),
                    proposal,
                });
            }
            for (i, adj) in adjustments.iter().enumerate() {
                stances[i] = adj.proposal.assignment.clone();
                explanations[i] = adj.proposal.explanation.clone();
                confidences[i] = adj.proposal.confidence.clone();
            }

            let labels: Vec<Role> = stances.iter().map(|s| s[focus]).collect();
            rounds.push(Round {
                round_number,
                focus_player: focus.clone(),
                turns,
                adjustments,
                consensus_label: strict_majority(&labels),
            });
        }
    }

    // Phase 4: final per-agent assignments.
    let mut final_per_agent: Vec<AdjustmentRecord> = Vec::with_capacity(agents.len());
    for i in 0..agents.len() {
        let ctx = FinalContext {
            game,
            self_name: &team[i],
            initial_proposals: &initial_proposals,
            rounds: &rounds,
            confidence_visible: cfg.confidence_visible,
        };
        let proposal = agents[i]
            .final_answer(&ctx)
            .and_then(|p| p.validate(&puzzle.players).map(|()| p));
        let proposal = match proposal {
            Ok(p) => p,
            Err(_) => {
                fallbacks.push(FallbackFlag {
                    agent: team[i].clone(),
                    phase: Phase::Final,
                    round: None,
                });
                Proposal {
                    assignment: stances[i].clone(),
                    explanation: explanations[i].clone(),
                    confidence: confidences[i].clone(),
                }
            }
        };
        final_per_agent.push(AdjustmentRecord {
            agent: team[i].clone(),
            proposal,
        });
    }

    // Phase 5: per-player majority vote; the supervisor resolves only the
    // tied players, majority-decided ones keep their vote result.
    let mut final_decision = RoleAssignment::new();
    let mut tied: Vec<PlayerId> = Vec::new();
    let mut tie_reasons: Vec<String> = Vec::new();
    for player in &puzzle.players {
        let labels: Vec<Role> = final_per_agent
            .iter()
            .map(|a| a.proposal.assignment[player])
            .collect();
        match majority_vote(&labels) {
            VoteOutcome::Majority(role) => {
                final_decision.insert(player.clone(), role);
            }
            VoteOutcome::Tie => {
                tied.push(player.clone());
                let votes: Vec<&str> = labels.iter().map(|r| r.name()).collect();
                tie_reasons.push(format!("no strict majority: [{}]", votes.join(", ")));
            }
        }
    }

    let mut supervisor_invocations = Vec::new();
    if !tied.is_empty() {
        let mut supervisor = build_agent(
            &cfg.supervisor,
            seed::derive(cfg.seed, &[puzzle_tag, SUPERVISOR_TAG]),
            opts,
        )?;
        let ctx = SupervisorContext {
            game,
            initial_proposals: &initial_proposals,
            rounds: &rounds,
            tied_players: &tied,
        };
        let proposal = supervisor
            .decide_supervision(&ctx)
            .and_then(|p| p.validate(&puzzle.players).map(|()| p))
            .map_err(|e| Error::Supervisor(e.to_string()))?;
        for (player, reason) in tied.iter().zip(tie_reasons) {
            final_decision.insert(player.clone(), proposal.assignment[player]);
            supervisor_invocations.push(SupervisorInvocation {
                player: player.clone(),
                reason,
            });
        }
    }

    Ok(DebateTranscript {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        puzzle_id: puzzle.id.clone(),
        team,
        depth: cfg.depth,
        confidence_visible: cfg.confidence_visible,
        order_agreed: cfg.order_policy == OrderPolicy::Agreed,
        player_order,
        initial_proposals,
        rounds,
        final_per_agent,
        final_decision,
        supervisor_invocations,
        fallbacks,
        elapsed: Some(started.elapsed()),
    })
}

const SUPERVISOR_TAG: u64 = 0x5055_FEED;
const ORDER_TAG: u64 = 0x04DE_4711;
const FALLBACK_TAG: u64 = 0xFA11_BAC4;

/// Seeded uniform fallback when an initial proposal stays malformed after
/// retries.
fn fallback_proposal(puzzle: &Puzzle, root: u64, puzzle_tag: u64, agent_idx: usize) -> Proposal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(
        root,
        &[puzzle_tag, agent_idx as u64, FALLBACK_TAG],
    ));
    let assignment: RoleAssignment = puzzle
        .players
        .iter()
        .map(|p| (p.clone(), *Role::ALL.choose(&mut rng).unwrap()))
        .collect();
    Proposal::new(assignment, "fallback: uniform random assignment")
}

fn decide_order(
    cfg: &DebateConfig,
    puzzle: &Puzzle,
    game: &GameView<'_>,
    agents: &mut [Box<dyn Agent>],
    fallbacks: &mut Vec<FallbackFlag>,
) -> Result<Vec<PlayerId>> {
    match cfg.order_policy {
        OrderPolicy::Fixed => Ok(puzzle.players.clone()),
        OrderPolicy::Agreed => {
            let mut votes: BTreeMap<Vec<PlayerId>, usize> = BTreeMap::new();
            for agent in agents.iter_mut() {
                let name = agent.name().to_string();
                match agent.propose_order(game) {
                    Ok(order) if is_permutation(&order, &puzzle.players) => {
                        *votes.entry(order).or_insert(0) += 1;
                    }
                    _ => {
                        // a malformed order response loses that agent's vote
                        fallbacks.push(FallbackFlag {
                            agent: name,
                            phase: Phase::Order,
                            round: None,
                        });
                    }
                }
            }
            if votes.is_empty() {
                return Ok(puzzle.players.clone());
            }
            let best = *votes.values().max().unwrap();
            let winners: Vec<&Vec<PlayerId>> = votes
                .iter()
                .filter(|(_, c)| **c == best)
                .map(|(o, _)| o)
                .collect();
            if winners.len() == 1 {
                Ok(winners[0].clone())
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(
                    cfg.seed,
                    &[seed::hash_str(&puzzle.id), ORDER_TAG],
                ));
                Ok(winners[rng.gen_range(0..winners.len())].clone())
            }
        }
    }
}

fn is_permutation(order: &[PlayerId], players: &[PlayerId]) -> bool {
    if order.len() != players.len() {
        return false;
    }
    let mut sorted_order: Vec<&PlayerId> = order.iter().collect();
    let mut sorted_players: Vec<&PlayerId> = players.iter().collect();
    sorted_order.sort();
    sorted_players.sort();
    sorted_order == sorted_players
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{ScriptedProfile, StubbornStance};
    use crate::solver;

    fn oracle(name: &str, noise: f64) -> AgentSpec {
        AgentSpec::scripted(name, ScriptedProfile::Oracle { noise })
    }

    fn stubborn_wrong(name: &str) -> AgentSpec {
        AgentSpec::scripted(
            name,
            ScriptedProfile::Stubborn {
                stance: StubbornStance::Wrong,
            },
        )
    }

    fn uniform(name: &str) -> AgentSpec {
        AgentSpec::scripted(name, ScriptedProfile::UniformRandom)
    }

    fn config(team: Vec<AgentSpec>, seed: u64) -> DebateConfig {
        DebateConfig {
            team,
            confidence_visible: false,
            order_policy: OrderPolicy::Fixed,
            depth: 1,
            supervisor: oracle("supervisor", 0.0),
            seed,
        }
    }

    fn demo() -> Puzzle {
        solver::certify(&Puzzle::demo_size4()).unwrap()
    }

    #[test]
    fn all_oracle_team_lands_on_the_certified_solution() {
        let puzzle = demo();
        let cfg = config(
            vec![oracle("a1", 0.0), oracle("a2", 0.0), oracle("a3", 0.0)],
            3,
        );
        let t = run_debate(&puzzle, &cfg).unwrap();
        assert_eq!(Some(&t.final_decision), puzzle.solution.as_ref());
        assert!(t.supervisor_invocations.is_empty());
        assert!(t.fallbacks.is_empty());
        assert_eq!(t.rounds.len(), puzzle.players.len());
    }

    #[test]
    fn two_stubborn_wrong_agents_outvote_the_oracle() {
        let puzzle = demo();
        let cfg = config(
            vec![
                oracle("a1", 0.0),
                stubborn_wrong("a2"),
                stubborn_wrong("a3"),
            ],
            3,
        );
        let t = run_debate(&puzzle, &cfg).unwrap();
        let truth = puzzle.solution.as_ref().unwrap();
        assert!(t.supervisor_invocations.is_empty());
        for (player, role) in &t.final_decision {
            assert_ne!(
                role, &truth[player],
                "strict majority must be the wrong pair"
            );
        }
    }

    #[test]
    fn all_distinct_final_labels_reach_the_supervisor() {
        let puzzle = demo();
        let cfg = config(vec![oracle("a1", 0.0), stubborn_wrong("a2")], 3);
        // with two agents every disagreeing player ties, and the stubborn
        // agent disagrees everywhere
        let t = run_debate(&puzzle, &cfg).unwrap();
        assert_eq!(t.supervisor_invocations.len(), puzzle.players.len());
        // oracle(0) supervisor resolves tied players to ground truth
        assert_eq!(Some(&t.final_decision), puzzle.solution.as_ref());
    }

    #[test]
    fn supervisor_touches_only_tied_players() {
        let puzzle = demo();
        // a1/a2 agree (truth) on all players; a3/a4 hold the shared wrong
        // labels: every player splits 2-2, so every player is tied
        let cfg = config(
            vec![
                oracle("a1", 0.0),
                oracle("a2", 0.0),
                stubborn_wrong("a3"),
                stubborn_wrong("a4"),
            ],
            9,
        );
        let t = run_debate(&puzzle, &cfg).unwrap();
        assert_eq!(t.supervisor_invocations.len(), puzzle.players.len());
        for inv in &t.supervisor_invocations {
            assert!(inv.reason.starts_with("no strict majority"));
        }
        // vote identity: non-tied players (none here) would keep their vote;
        // tied ones come from the oracle supervisor
        assert_eq!(Some(&t.final_decision), puzzle.solution.as_ref());
    }

    #[test]
    fn round_count_scales_with_depth() {
        let puzzle = demo();
        let mut cfg = config(
            vec![oracle("a1", 0.0), oracle("a2", 0.2), uniform("a3")],
            11,
        );
        cfg.depth = 2;
        let t = run_debate(&puzzle, &cfg).unwrap();
        assert_eq!(t.rounds.len(), puzzle.players.len() * 2);
        assert_eq!(t.rounds.last().unwrap().round_number, 8);
        for round in &t.rounds {
            assert_eq!(round.adjustments.len(), 3);
            for adj in &round.adjustments {
                assert_eq!(adj.proposal.assignment.len(), puzzle.players.len());
            }
        }
    }

    #[test]
    fn scripted_replay_is_byte_identical() {
        let puzzle = demo();
        let cfg = config(
            vec![oracle("a1", 0.3), uniform("a2"), stubborn_wrong("a3")],
            42,
        );
        let a = run_debate(&puzzle, &cfg).unwrap().to_json_line().unwrap();
        let b = run_debate(&puzzle, &cfg).unwrap().to_json_line().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn final_decision_matches_majority_when_not_tied() {
        // all-random agents: any player whose three final labels all differ
        // must reach the supervisor, and only those players
        let puzzle = demo();
        let cfg = config(vec![uniform("a1"), uniform("a2"), uniform("a3")], 17);
        let t = run_debate(&puzzle, &cfg).unwrap();
        let tied: Vec<&PlayerId> = t.supervisor_invocations.iter().map(|i| &i.player).collect();
        let mut saw_tie = false;
        for player in &puzzle.players {
            let labels: Vec<Role> = t
                .final_per_agent
                .iter()
                .map(|a| a.proposal.assignment[player])
                .collect();
            match majority_vote(&labels) {
                VoteOutcome::Majority(role) => {
                    assert_eq!(t.final_decision[player], role);
                    assert!(!tied.contains(&player));
                }
                VoteOutcome::Tie => {
                    saw_tie = true;
                    assert!(tied.contains(&player));
                }
            }
        }
        assert!(saw_tie, "seed 17 should produce at least one tied player");
    }

    #[test]
    fn transition_endpoints_follow_the_profiles() {
        use crate::metrics::{transition_counts, EndState, StartState};
        let puzzle = demo();
        let truth = puzzle.solution.clone().unwrap();

        // perfect team: every transition ends correct
        let cfg = config(
            vec![oracle("a1", 0.0), oracle("a2", 0.0), oracle("a3", 0.0)],
            3,
        );
        let t = run_debate(&puzzle, &cfg).unwrap();
        let table = transition_counts(&t, &truth).unwrap();
        for start in StartState::ALL {
            assert_eq!(table.count(start, EndState::W), 0);
        }
        assert_eq!(table.total(), 12);

        // a stubborn-wrong agent starting wrong always ends wrong
        let cfg = config(
            vec![oracle("a1", 0.0), oracle("a2", 0.0), stubborn_wrong("a3")],
            5,
        );
        let t = run_debate(&puzzle, &cfg).unwrap();
        let table = transition_counts(&t, &truth).unwrap();
        let stubborn = &table.per_agent["a3"];
        for start in [StartState::MaW, StartState::MiW, StartState::CW] {
            let ended_correct = stubborn
                .get(&start)
                .and_then(|m| m.get(&EndState::C))
                .copied()
                .unwrap_or(0);
            assert_eq!(ended_correct, 0);
        }
    }

    #[test]
    fn majority_vote_semantics() {
        use Role::*;
        assert_eq!(
            majority_vote(&[Knight, Knight, Spy]),
            VoteOutcome::Majority(Knight)
        );
        assert_eq!(majority_vote(&[Knight, Knave, Spy]), VoteOutcome::Tie);
        // no strict majority with an even split
        assert_eq!(
            majority_vote(&[Knight, Knight, Knave, Knave]),
            VoteOutcome::Tie
        );
        assert_eq!(plurality(&[Knight, Knight, Spy]), Some(Knight));
        assert_eq!(plurality(&[Knight, Knave, Spy]), None);
    }

    #[test]
    fn fixed_order_is_the_puzzle_order() {
        let puzzle = demo();
        let cfg = config(vec![oracle("a1", 0.0), oracle("a2", 0.0)], 3);
        let t = run_debate(&puzzle, &cfg).unwrap();
        assert_eq!(t.player_order, puzzle.players);
        assert!(!t.order_agreed);
    }

    #[test]
    fn agreed_order_is_unanimous_for_identity_teams() {
        let puzzle = demo();
        let mut cfg = config(
            vec![oracle("a1", 0.0), oracle("a2", 0.0), stubborn_wrong("a3")],
            3,
        );
        cfg.order_policy = OrderPolicy::Agreed;
        let t = run_debate(&puzzle, &cfg).unwrap();
        assert_eq!(t.player_order, puzzle.players);
        assert!(t.order_agreed);
    }

    #[test]
    fn agreed_order_with_random_agents_is_reproducible() {
        let puzzle = demo();
        let mut cfg = config(vec![uniform("a1"), uniform("a2"), uniform("a3")], 23);
        cfg.order_policy = OrderPolicy::Agreed;
        let a = run_debate(&puzzle, &cfg).unwrap();
        let b = run_debate(&puzzle, &cfg).unwrap();
        assert_eq!(a.player_order, b.player_order);
        assert!(is_permutation(&a.player_order, &puzzle.players));
    }

    #[test]
    fn uncertified_puzzles_are_rejected() {
        let puzzle = Puzzle::demo_size4();
        let cfg = config(vec![oracle("a1", 0.0), oracle("a2", 0.0)], 3);
        assert!(matches!(run_debate(&puzzle, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn transcripts_round_trip_through_jsonl() {
        let puzzle = demo();
        let cfg = config(vec![oracle("a1", 0.1), uniform("a2"), uniform("a3")], 5);
        let t = run_debate(&puzzle, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transcripts.jsonl");
        write_transcripts(&path, std::slice::from_ref(&t)).unwrap();
        let back = read_transcripts(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].final_decision, t.final_decision);
        assert_eq!(back[0].rounds, t.rounds);
    }
}

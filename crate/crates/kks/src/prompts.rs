//! Prompt templates and their renderers.
//!
//! The templates ship verbatim as text assets under `assets/prompts/` with
//! `{placeholder}` substitution points. Repeated context blocks (current
//! positions, previous rounds, latest solutions, debate history) are expanded
//! by the renderers below following the per-item shapes shipped alongside the
//! main templates; golden-file tests pin every rendered byte.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::agents::JudgeContext;
use crate::engine::{AdjustContext, DebateContext, FinalContext, Round, SupervisorContext};
use crate::statement::{PlayerId, Role, RoleAssignment};

pub const INITIAL_PROPOSAL_TEMPLATE: &str = include_str!("../assets/prompts/initial_proposal.txt");
pub const DEBATE_TEMPLATE: &str = include_str!("../assets/prompts/debate.txt");
pub const SELF_ADJUSTMENT_TEMPLATE: &str = include_str!("../assets/prompts/self_adjustment.txt");
pub const FINAL_DISCUSSION_TEMPLATE: &str = include_str!("../assets/prompts/final_discussion.txt");
pub const SUPERVISOR_TEMPLATE: &str = include_str!("../assets/prompts/supervisor.txt");
pub const JUDGE_TEMPLATE: &str = include_str!("../assets/prompts/judge_soundness.txt");

/// Literal `{key}` replacement. Only the listed keys are substituted, so JSON
/// braces inside the templates survive untouched.
fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in pairs {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

fn names_list(names: &BTreeSet<String>) -> String {
    if names.is_empty() {
        "none".to_string()
    } else {
        names.iter().cloned().collect::<Vec<_>>().join(", ")
    }
}

fn role_list(players: &[PlayerId], assignment: &RoleAssignment) -> String {
    players
        .iter()
        .map(|p| format!("{p}: {}", assignment[p]))
        .collect::<Vec<_>>()
        .join(", ")
}

fn consensus_word(label: Option<Role>) -> String {
    label.map_or_else(|| "none".to_string(), |r| r.name().to_string())
}

fn you_marker(agent: &str, self_name: &str) -> &'static str {
    if agent == self_name {
        " (YOU)"
    } else {
        ""
    }
}

/// The initial-proposal prompt; the game info travels as its own message.
pub fn render_initial_proposal(num_players: usize) -> String {
    fill(
        INITIAL_PROPOSAL_TEMPLATE,
        &[("num_player", num_players.to_string().as_str())],
    )
}

pub fn render_debate(ctx: &DebateContext<'_>) -> String {
    let others: Vec<&str> = ctx
        .team
        .iter()
        .filter(|a| a.as_str() != ctx.self_name)
        .map(String::as_str)
        .collect();

    let mut agents_context = String::from("\n\nCURRENT AGENT POSITIONS:");
    for view in &ctx.positions {
        let _ = write!(
            agents_context,
            "\n- {}{}: {}\n  Reasoning: {}",
            view.agent,
            you_marker(&view.agent, ctx.self_name),
            view.role,
            view.explanation
        );
        if let Some(c) = view.confidence {
            let _ = write!(agents_context, "\n  Confidence: {c}");
        }
    }

    let previous_context = render_debate_previous_rounds(ctx.previous_rounds, ctx.self_name);

    fill(
        DEBATE_TEMPLATE,
        &[
            ("agent_name", ctx.self_name),
            ("player_name", ctx.focus_player.as_str()),
            ("game.text_game", ctx.game.game_text),
            ("agents_context", &agents_context),
            ("previous_context", &previous_context),
            ("other_agents_list", &others.join(", ")),
        ],
    )
}

fn render_debate_previous_rounds(rounds: &[Round], self_name: &str) -> String {
    if rounds.is_empty() {
        return String::new();
    }
    let mut out = String::from("\n\nPREVIOUS DEBATE ROUNDS:");
    for round in rounds {
        let _ = write!(
            out,
            "\nRound {} ({}):",
            round.round_number, round.focus_player
        );
        for adj in &round.adjustments {
            let _ = write!(
                out,
                "\n  - {}{}: {}\n    Reasoning: {}",
                adj.agent,
                you_marker(&adj.agent, self_name),
                adj.proposal.assignment[&round.focus_player],
                adj.proposal.explanation
            );
        }
        let _ = write!(
            out,
            "\n  - CONSENSUS: {}",
            consensus_word(round.consensus_label)
        );
    }
    out
}

pub fn render_self_adjustment(ctx: &AdjustContext<'_>) -> String {
    let mut debate_analysis = String::from("\n\nCURRENT DEBATE ANALYSIS:");
    for record in ctx.turns {
        let _ = write!(
            debate_analysis,
            "\n- {}{}: {}",
            record.agent,
            you_marker(&record.agent, ctx.self_name),
            record.turn.role
        );
        if ctx.confidence_visible {
            if let Some(c) = ctx
                .latest
                .iter()
                .find(|v| v.agent == record.agent)
                .and_then(|v| v.confidence)
            {
                let _ = write!(debate_analysis, "\n  Confidence: {c}");
            }
        }
        let _ = write!(
            debate_analysis,
            "\n  Agrees with: {}\n  Agree reasoning: {}\n  Disagrees with: {}\n  Disagree reasoning: {}",
            names_list(&record.turn.agree_with),
            record.turn.agree_reasoning,
            names_list(&record.turn.disagree_with),
            record.turn.disagree_reasoning
        );
    }

    let previous_context = render_adjust_previous_rounds(ctx.previous_rounds, ctx.self_name);

    let mut latest_solutions = String::from("\n\nLATEST COMPLETE SOLUTIONS FROM EACH AGENT:");
    for view in ctx.latest {
        let _ = write!(
            latest_solutions,
            "\n- {}{}:",
            view.agent,
            you_marker(&view.agent, ctx.self_name)
        );
        for player in &ctx.game.puzzle.players {
            let _ = write!(
                latest_solutions,
                "\n    {player}: {}",
                view.assignment[player]
            );
        }
        if let Some(c) = view.confidence {
            let _ = write!(latest_solutions, "\n    Confidence: {c}");
        }
        let _ = write!(latest_solutions, "\n    Reasoning: {}", view.explanation);
    }

    fill(
        SELF_ADJUSTMENT_TEMPLATE,
        &[
            ("agent_name", ctx.self_name),
            ("player_name", ctx.focus_player.as_str()),
            ("game.text_game", ctx.game.game_text),
            ("debate_analysis", &debate_analysis),
            ("previous_context", &previous_context),
            ("latest_solutions_context", &latest_solutions),
        ],
    )
}

fn render_adjust_previous_rounds(rounds: &[Round], self_name: &str) -> String {
    if rounds.is_empty() {
        return String::new();
    }
    let mut out = String::from("\n\nPREVIOUS DEBATE ROUNDS:");
    for round in rounds {
        let _ = write!(
            out,
            "\nRound {} ({}):\n  Debate phase:",
            round.round_number, round.focus_player
        );
        for record in &round.turns {
            let _ = write!(
                out,
                "\n    - {}{}: {}\n      Agrees with: {}\n      Agree reasoning: {}\n      Disagrees with: {}\n      Disagree reasoning: {}",
                record.agent,
                you_marker(&record.agent, self_name),
                record.turn.role,
                names_list(&record.turn.agree_with),
                record.turn.agree_reasoning,
                names_list(&record.turn.disagree_with),
                record.turn.disagree_reasoning
            );
        }
        out.push_str("\n  Self-adjustment phase:");
        for adj in &round.adjustments {
            let _ = write!(
                out,
                "\n    - {}{}: {}\n      Reasoning: {}",
                adj.agent,
                you_marker(&adj.agent, self_name),
                adj.proposal.assignment[&round.focus_player],
                adj.proposal.explanation
            );
        }
        let _ = write!(
            out,
            "\n  - CONSENSUS: {}",
            consensus_word(round.consensus_label)
        );
    }
    out
}

pub fn render_final_discussion(ctx: &FinalContext<'_>) -> String {
    let players = &ctx.game.puzzle.players;

    let mut initial_summary = String::from("\n\nINITIAL PROPOSALS:");
    for (i, record) in ctx.initial_proposals.iter().enumerate() {
        if i > 0 {
            initial_summary.push('\n');
        }
        let _ = write!(
            initial_summary,
            "\n- {}: {}\n  Reasoning: {}",
            record.agent,
            role_list(players, &record.proposal.assignment),
            record.proposal.explanation
        );
        if ctx.confidence_visible {
            if let Some(c) = record.proposal.mean_confidence() {
                let _ = write!(initial_summary, "\n  Confidence: {c}");
            }
        }
    }

    let mut debate_summary = String::from("\n\nDEBATE ROUNDS AND SELF-ADJUSTMENT SUMMARY:");
    for (i, round) in ctx.rounds.iter().enumerate() {
        if i > 0 {
            debate_summary.push('\n');
        }
        let _ = write!(
            debate_summary,
            "\nRound {} ({}):",
            round.round_number, round.focus_player
        );
        for record in &round.turns {
            let _ = write!(
                debate_summary,
                "\n  - {}: {}",
                record.agent, record.turn.role
            );
            if ctx.confidence_visible {
                if let Some(adj) = round.adjustments.iter().find(|a| a.agent == record.agent) {
                    if let Some(c) = adj.proposal.mean_confidence() {
                        let _ = write!(debate_summary, "\n    Confidence: {c}");
                    }
                }
            }
            let _ = write!(
                debate_summary,
                "\n    Agrees with: {}\n    Agree reasoning: {}\n    Disagrees with: {}\n    Disagree reasoning: {}",
                names_list(&record.turn.agree_with),
                record.turn.agree_reasoning,
                names_list(&record.turn.disagree_with),
                record.turn.disagree_reasoning
            );
            if let Some(adj) = round.adjustments.iter().find(|a| a.agent == record.agent) {
                let _ = write!(
                    debate_summary,
                    "\n  - {} (self-adjustment): {}\n    Reasoning: {}",
                    adj.agent,
                    role_list(players, &adj.proposal.assignment),
                    adj.proposal.explanation
                );
                if ctx.confidence_visible {
                    if let Some(c) = adj.proposal.mean_confidence() {
                        let _ = write!(debate_summary, "\n    Confidence: {c}");
                    }
                }
            }
        }
        let _ = write!(
            debate_summary,
            "\n  - CONSENSUS: {}",
            consensus_word(round.consensus_label)
        );
    }

    fill(
        FINAL_DISCUSSION_TEMPLATE,
        &[
            ("game.text_game", ctx.game.game_text),
            ("initial_summary", &initial_summary),
            ("debate_summary", &debate_summary),
        ],
    )
}

// The supervisor template contains inline per-proposal and per-round blocks;
// the scaffold below must concatenate back to the shipped asset byte-for-byte
// (a test enforces this).
const SUPERVISOR_HEADER: &str = "You are a supervisor AI tasked with making the final decision in a multi-agent debate about a Knight-Knaves-Spy game.\n\nGAME INFORMATION:\n{game.text_game}\n\nCOMPLETE DEBATE HISTORY:\n\nINITIAL PROPOSALS:\n";
const SUPERVISOR_PROPOSAL_BLOCK: &str = "{proposal.agent_name} initially proposed: {proposal.player_role_assignments}\nTheir reasoning: {proposal.explanation}\n";
const SUPERVISOR_ROUNDS_HEADER: &str = "\nDEBATE ROUNDS:\n";
const SUPERVISOR_ROUND_TITLE: &str = "--- Round {round_number}: {player_name} ---\n";
const SUPERVISOR_TURN_BLOCK: &str = "{response.agent_name} thought {player_name} is a {role}\n  Agreed with: {agent_names} - Reasoning: {reasoning}\n  Disagreed with: {agent_names} - Reasoning: {reasoning}\nReasoning: {explanation}\n";
const SUPERVISOR_INSTRUCTIONS: &str = "\nSUPERVISOR INSTRUCTIONS:\nAs the supervisor, you have access to the complete debate history. The agents have been unable to reach consensus, so you must make the final decision. Consider:\n\n1. All initial proposals and their reasoning\n2. The evolution of arguments through the debate rounds\n3. The consistency and logic of each agent's reasoning\n4. The overall coherence of the solution\n5. Any patterns or insights that emerged during the debate\n\nMake your decision based on the most logical and well-reasoned arguments you observed.\n\nReturn your response in the same JSON format:\n{\n    \"players\": [\n        {\"name\": \"player_name\", \"role\": \"role\"},\n        ...\n    ],\n    \"explanation\": \"Your final decision with comprehensive reasoning based on the complete debate history\"\n}\n\nIMPORTANT: Keep your explanation having details but less than 100 words.\n";

pub fn render_supervisor(ctx: &SupervisorContext<'_>) -> String {
    let players = &ctx.game.puzzle.players;
    let mut out = fill(SUPERVISOR_HEADER, &[("game.text_game", ctx.game.game_text)]);
    for record in ctx.initial_proposals {
        out.push_str(&fill(
            SUPERVISOR_PROPOSAL_BLOCK,
            &[
                ("proposal.agent_name", record.agent.as_str()),
                (
                    "proposal.player_role_assignments",
                    role_list(players, &record.proposal.assignment).as_str(),
                ),
                ("proposal.explanation", record.proposal.explanation.as_str()),
            ],
        ));
    }
    out.push_str(SUPERVISOR_ROUNDS_HEADER);
    for (i, round) in ctx.rounds.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&fill(
            SUPERVISOR_ROUND_TITLE,
            &[
                ("round_number", round.round_number.to_string().as_str()),
                ("player_name", round.focus_player.as_str()),
            ],
        ));
        for record in &round.turns {
            let explanation = round
                .adjustments
                .iter()
                .find(|a| a.agent == record.agent)
                .map(|a| a.proposal.explanation.as_str())
                .unwrap_or("");
            let mut block = SUPERVISOR_TURN_BLOCK.to_string();
            block = block.replacen("{agent_names}", &names_list(&record.turn.agree_with), 1);
            block = block.replacen("{reasoning}", &record.turn.agree_reasoning, 1);
            block = block.replacen("{agent_names}", &names_list(&record.turn.disagree_with), 1);
            block = block.replacen("{reasoning}", &record.turn.disagree_reasoning, 1);
            out.push_str(&fill(
                &block,
                &[
                    ("response.agent_name", record.agent.as_str()),
                    ("player_name", round.focus_player.as_str()),
                    ("role", record.turn.role.name()),
                    ("explanation", explanation),
                ],
            ));
        }
    }
    out.push_str(SUPERVISOR_INSTRUCTIONS);
    out
}

/// The judge system prompt; the proposals and the turn under evaluation
/// travel in the user message (see [`render_judge_user`]).
pub fn render_judge(ctx: &JudgeContext<'_>) -> String {
    let truth = role_list(ctx.players, ctx.ground_truth);
    let mut out = JUDGE_TEMPLATE.to_string();
    for (key, value) in [
        ("{{game_text}}", ctx.game_text),
        ("{{player_name}}", ctx.focus_player.as_str()),
        ("{{agent_name}}", ctx.agent_name),
        ("{{ground_truth}}", truth.as_str()),
    ] {
        out = out.replace(key, value);
    }
    out.replace("{num_agents}", &ctx.num_agents.to_string())
}

/// User-message content for a judge call: every initial proposal plus the
/// target agent's agree/disagree record.
pub fn render_judge_user(ctx: &JudgeContext<'_>, turn: &crate::agents::DebateTurn) -> String {
    let mut out = String::from("INITIAL PROPOSALS:");
    for record in ctx.initial_proposals {
        let _ = write!(
            out,
            "\n- {}: {}\n  Reasoning: {}",
            record.agent,
            role_list(ctx.players, &record.proposal.assignment),
            record.proposal.explanation
        );
    }
    let _ = write!(
        out,
        "\n\nDEBATE INFO FOR {}:\n- {} thought {} is a {}\n  Agrees with: {}\n  Agree reasoning: {}\n  Disagrees with: {}\n  Disagree reasoning: {}",
        ctx.agent_name,
        ctx.agent_name,
        turn.focus_player,
        turn.role,
        names_list(&turn.agree_with),
        turn.agree_reasoning,
        names_list(&turn.disagree_with),
        turn.disagree_reasoning
    );
    out
}

/// Order-agreement request (no template exists for this phase; the mechanism
/// is an artifact of the agreed-order policy).
pub fn render_order_request(players: &[PlayerId]) -> String {
    let listed = players
        .iter()
        .map(PlayerId::as_str)
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        "Before the debate starts, propose the order in which the players should be \
         discussed. The players are: {listed}.\n\nReturn your response in JSON format:\n{{\n    \
         \"order\": [\"player_name\", ...]\n}}\n\nInclude every player exactly once."
    )
}

//! One full debate over a scripted team, with a walk through the recorded
//! transcript: initial proposals, per-player rounds, final votes, and any
//! supervisor tie-breaks.

use kks::agents::{AgentSpec, ScriptedProfile};
use kks::engine::{run_debate, DebateConfig, OrderPolicy};
use kks::generator::{generate_one, GenConfig};

fn main() -> kks::Result<()> {
    let puzzle = generate_one(&GenConfig::new(4, 42))?;
    println!("{}\n", puzzle.game_info_text());

    let cfg = DebateConfig {
        team: vec![
            AgentSpec::scripted("oracle-1", ScriptedProfile::Oracle { noise: 0.2 }),
            AgentSpec::scripted("conformist-2", ScriptedProfile::Conformist),
            AgentSpec::scripted("uniform-3", ScriptedProfile::UniformRandom),
        ],
        confidence_visible: false,
        order_policy: OrderPolicy::Fixed,
        depth: 1,
        supervisor: AgentSpec::scripted("supervisor", ScriptedProfile::UniformRandom),
        seed: 7,
    };
    let transcript = run_debate(&puzzle, &cfg)?;

    println!("initial proposals:");
    for record in &transcript.initial_proposals {
        let roles: Vec<String> = record
            .proposal
            .assignment
            .iter()
            .map(|(p, r)| format!("{p}={r}"))
            .collect();
        println!("  {}: {}", record.agent, roles.join(", "));
    }

    for round in &transcript.rounds {
        println!("\nround {} ({}):", round.round_number, round.focus_player);
        for t in &round.turns {
            println!(
                "  {} says {} (agrees with {:?}, disagrees with {:?})",
                t.agent, t.turn.role, t.turn.agree_with, t.turn.disagree_with
            );
        }
        match round.consensus_label {
            Some(role) => println!("  consensus: {role}"),
            None => println!("  consensus: none"),
        }
    }

    println!("\nfinal decision:");
    let truth = puzzle.solution.as_ref().unwrap();
    for (player, role) in &transcript.final_decision {
        let mark = if truth[player] == *role {
            "ok "
        } else {
            "WRONG"
        };
        println!("  {player}: {role} [{mark}]");
    }
    for inv in &transcript.supervisor_invocations {
        println!("supervisor broke a tie on {} ({})", inv.player, inv.reason);
    }
    println!(
        "\nreplayable: {} rounds, {} fallbacks, elapsed {:?}",
        transcript.rounds.len(),
        transcript.fallbacks.len(),
        transcript.elapsed
    );
    Ok(())
}

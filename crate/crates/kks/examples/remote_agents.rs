//! Wiring remote chat-endpoint agents and the rationality judge. Needs a
//! chat-completions endpoint:
//!
//! ```sh
//! export KKS_LLM_BASE_URL=https://your-endpoint/v1
//! export KKS_LLM_API_KEY=...            # if the endpoint needs one
//! export KKS_JUDGE_MODEL=judge-model-id # for the judge section
//! cargo run --example remote_agents -- model-a model-b model-c
//! ```

use kks::agents::{AgentSpec, JudgeClient, JudgeContext, RemoteSettings, ScriptedProfile};
use kks::engine::{run_debate_with, DebateConfig, EngineOptions, OrderPolicy};
use kks::generator::{generate_one, GenConfig};

fn main() -> kks::Result<()> {
    let Ok(settings) = RemoteSettings::from_env() else {
        println!("KKS_LLM_BASE_URL is not set; nothing to call.");
        println!("Point it at a chat-completions endpoint and re-run.");
        return Ok(());
    };

    let models: Vec<String> = std::env::args().skip(1).collect();
    if models.len() < 2 {
        println!("pass at least two model ids as arguments");
        return Ok(());
    }

    let puzzle = generate_one(&GenConfig::new(4, 99))?;
    println!("{}\n", puzzle.game_info_text());

    let team = models
        .iter()
        .enumerate()
        .map(|(i, model)| AgentSpec::remote(format!("remote-{}", i + 1), model))
        .collect();
    let cfg = DebateConfig {
        team,
        confidence_visible: false,
        order_policy: OrderPolicy::Fixed,
        depth: 1,
        // ties fall back to a scripted supervisor here; use a strong remote
        // spec in real studies
        supervisor: AgentSpec::scripted("supervisor", ScriptedProfile::UniformRandom),
        seed: 1,
    };
    let opts = EngineOptions {
        remote: Some(settings),
        offline: false,
    };
    let transcript = run_debate_with(&puzzle, &cfg, &opts)?;

    let truth = puzzle.solution.as_ref().unwrap();
    for (player, role) in &transcript.final_decision {
        let mark = if truth[player] == *role {
            "ok"
        } else {
            "wrong"
        };
        println!("{player}: {role} [{mark}]");
    }
    println!(
        "{} fallbacks, {} supervisor tie-breaks",
        transcript.fallbacks.len(),
        transcript.supervisor_invocations.len()
    );

    // rate the first debate turn's reasoning, if a judge model is configured
    let Ok(judge) = JudgeClient::from_env() else {
        println!("\nKKS_JUDGE_MODEL not set; skipping the rationality judge.");
        return Ok(());
    };
    let round = &transcript.rounds[0];
    let record = &round.turns[0];
    let game_text = puzzle.game_info_text();
    let ctx = JudgeContext {
        game_text: &game_text,
        players: &puzzle.players,
        num_agents: transcript.team.len(),
        focus_player: &round.focus_player,
        agent_name: &record.agent,
        ground_truth: truth,
        initial_proposals: &transcript.initial_proposals,
    };
    match judge.judge_rationality(&record.turn, &ctx) {
        Ok(rating) => println!(
            "\njudge rated {}: agree {}, disagree {}",
            record.agent, rating.agree_soundness, rating.disagree_soundness
        ),
        Err(e) => println!("\njudge rating missing: {e}"),
    }
    Ok(())
}

//! Process-level analysis: position states (majority/minority/chaos, correct
//! or wrong), the 12 transition counts, per-agent correction rates, and the
//! ridge weights tying transitions to final smooth accuracy.

use kks::agents::{AgentSpec, ScriptedProfile, StubbornStance};
use kks::engine::{run_debate, DebateConfig, DebateTranscript, OrderPolicy};
use kks::generator;
use kks::metrics::{self, EndState, StartState, TransitionTable};
use kks::regression::{fit_linear, transition_feature_table, DEFAULT_RIDGE_LAMBDA};
use kks::seed;
use kks::statement::RoleAssignment;

fn main() -> kks::Result<()> {
    let puzzles = generator::build_dataset(&[4, 5], 25, 2026)?;
    let mut games: Vec<(DebateTranscript, RoleAssignment)> = Vec::new();
    for puzzle in &puzzles {
        let cfg = DebateConfig {
            team: vec![
                AgentSpec::scripted("oracle-1", ScriptedProfile::Oracle { noise: 0.25 }),
                AgentSpec::scripted("conformist-2", ScriptedProfile::Conformist),
                AgentSpec::scripted(
                    "stubborn-3",
                    ScriptedProfile::Stubborn {
                        stance: StubbornStance::Random,
                    },
                ),
            ],
            confidence_visible: false,
            order_policy: OrderPolicy::Fixed,
            depth: 1,
            supervisor: AgentSpec::scripted("supervisor", ScriptedProfile::UniformRandom),
            seed: seed::derive(8, &[seed::hash_str(&puzzle.id)]),
        };
        let transcript = run_debate(puzzle, &cfg)?;
        games.push((transcript, puzzle.solution.clone().unwrap()));
    }

    let mut total = TransitionTable::default();
    for (transcript, truth) in &games {
        total.merge(&metrics::transition_counts(transcript, truth)?);
    }
    println!("transition counts over {} games:", games.len());
    for start in StartState::ALL {
        for end in [EndState::C, EndState::W] {
            println!("  {start}->{end}: {}", total.count(start, end));
        }
    }

    println!("\ncorrection rates by start state:");
    for (start, rate) in total.correction_rates() {
        println!("  {start}: {rate:.3}");
    }

    println!("\nper-agent correction heatmap:");
    for (agent, rates) in total.agent_correction_rates() {
        let cells: Vec<String> = rates.iter().map(|(s, r)| format!("{s}={r:.2}")).collect();
        println!("  {agent}: {}", cells.join(" "));
    }

    // which transitions predict final smooth accuracy (ridge, lambda = 1)
    let pairs: Vec<(&DebateTranscript, &RoleAssignment)> =
        games.iter().map(|(t, s)| (t, s)).collect();
    let (names, rows, target) = transition_feature_table(&pairs)?;
    let fit = fit_linear(&rows, &names, &target, DEFAULT_RIDGE_LAMBDA)?;
    println!("\nridge weights (higher helps final accuracy):");
    let mut weighted: Vec<(&String, f64)> =
        names.iter().zip(fit.coefficients.iter().copied()).collect();
    weighted.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (name, w) in weighted {
        println!("  {name}: {w:+.4}");
    }
    Ok(())
}

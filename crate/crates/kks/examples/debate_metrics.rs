//! Outcome metrics over a batch of debates: strict/smooth accuracy, the four
//! AUC variants, and the initial-vs-final comparison.

use kks::agents::{AgentSpec, ScriptedProfile};
use kks::engine::{run_debate, DebateConfig, OrderPolicy};
use kks::generator;
use kks::metrics;
use kks::seed;

fn main() -> kks::Result<()> {
    let puzzles = generator::build_dataset(&[4], 30, 11)?;
    let mut games = Vec::new();
    let mut initial_strict = 0.0;
    for puzzle in &puzzles {
        let cfg = DebateConfig {
            team: vec![
                AgentSpec::scripted("oracle-1", ScriptedProfile::Oracle { noise: 0.15 }),
                AgentSpec::scripted("conformist-2", ScriptedProfile::Conformist),
                AgentSpec::scripted("conformist-3", ScriptedProfile::Conformist),
            ],
            confidence_visible: false,
            order_policy: OrderPolicy::Fixed,
            depth: 1,
            supervisor: AgentSpec::scripted("supervisor", ScriptedProfile::UniformRandom),
            seed: seed::derive(3, &[seed::hash_str(&puzzle.id)]),
        };
        let transcript = run_debate(puzzle, &cfg)?;
        let truth = puzzle.solution.clone().unwrap();
        initial_strict += metrics::initial_vote_accuracy(&transcript, &truth).0;
        games.push((transcript, truth));
    }
    initial_strict /= games.len() as f64;

    let report = metrics::compute_report(&games)?;
    println!("games:            {}", report.n);
    println!("initial strict:   {initial_strict:.3}");
    println!("final strict:     {:.3}", report.strict_accuracy);
    println!("final smooth:     {:.3}", report.smooth_accuracy);
    println!("auc strict:       {:.3}", report.auc_strict);
    println!("auc smooth:       {:.3}", report.auc_smooth);
    println!("auc agree-all:    {:.3}", report.auc_agree_all);
    println!("auc agree-major:  {:.3}", report.auc_agree_major);

    // the identities every report obeys
    assert!(report.auc_strict <= report.auc_smooth);
    assert!(report.auc_agree_all <= report.auc_agree_major);
    println!("\nper-instance rows: {}", report.per_instance.len());
    let worst = report
        .per_instance
        .iter()
        .min_by(|a, b| a.final_smooth.total_cmp(&b.final_smooth))
        .unwrap();
    println!(
        "hardest game: {} (final smooth {:.2}, {} supervisor tie-breaks)",
        worst.puzzle_id, worst.final_smooth, worst.supervisor_invocations
    );
    Ok(())
}

//! The controlled-experiment harness end to end: anchor plus single-factor
//! cells, a resumable batch, and the full report file set.

use kks::experiment::{self, BatchOptions, ExperimentConfig};

fn main() -> kks::Result<()> {
    let out_dir = std::env::temp_dir().join("kks-grid-example");
    let _ = std::fs::remove_dir_all(&out_dir);

    let cfg = ExperimentConfig {
        sizes: vec![4, 5],
        puzzles_per_cell: 8,
        seed: 20260810,
        out_dir: out_dir.clone(),
        // anchor plus team-size, confidence, and depth variants
        cells: ["A", "C1", "C3", "C5"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        ..ExperimentConfig::default()
    };

    for cell in experiment::expand_grid(&cfg)? {
        println!(
            "cell {}: {} agents, confidence {}, order {:?}, depth {}, sizes {:?}",
            cell.id,
            cell.debate.team.len(),
            if cell.debate.confidence_visible {
                "visible"
            } else {
                "hidden"
            },
            cell.debate.order_policy,
            cell.debate.depth,
            cell.sizes,
        );
    }

    let summary = experiment::run_batch(&cfg, &BatchOptions::default())?;
    println!(
        "\nbatch: {} completed, {} skipped, {} failed",
        summary.completed, summary.skipped, summary.failed
    );

    // a second invocation resumes from the manifest and replays nothing
    let resume = experiment::run_batch(&cfg, &BatchOptions::default())?;
    assert_eq!(resume.completed, 0);
    println!("resume: {} games skipped as already done", resume.skipped);

    let report_dir = out_dir.join("report");
    experiment::report(&cfg, &report_dir)?;
    println!("\nreport files:");
    let mut names: Vec<_> = std::fs::read_dir(&report_dir)?
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    for name in names {
        println!("  {}", report_dir.join(name).display());
    }

    let aggregate = std::fs::read_to_string(report_dir.join("aggregate_metrics.csv"))?;
    println!("\naggregate_metrics.csv:\n{aggregate}");
    Ok(())
}

//! Certifying puzzles by exhaustive enumeration: the two built-in demo
//! puzzles plus a freshly generated one.

use kks::generator::{generate_one, GenConfig, Puzzle};
use kks::solver;

fn show(puzzle: &Puzzle) -> kks::Result<()> {
    println!("=== {} ===", puzzle.id);
    println!("{}\n", puzzle.game_info_text());
    let result = solver::solve(puzzle)?;
    println!(
        "{} solution(s), {} worlds checked in {:?}",
        result.solutions.len(),
        result.worlds_checked,
        result.elapsed
    );
    for solution in &result.solutions {
        let roles: Vec<String> = solution.iter().map(|(p, r)| format!("{p}={r}")).collect();
        println!("  {}", roles.join(", "));
    }
    println!();
    Ok(())
}

fn main() -> kks::Result<()> {
    show(&Puzzle::demo_size4())?;
    show(&Puzzle::demo_size3())?;

    let generated = generate_one(&GenConfig::new(6, 2024))?;
    show(&generated)?;

    // generated puzzles already carry their certified solution
    assert_eq!(
        generated.solution.as_ref(),
        Some(&solver::solve(&generated)?.solutions[0])
    );
    Ok(())
}

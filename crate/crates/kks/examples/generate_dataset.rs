//! Building a puzzle dataset: seeded, certified-unique, and distinct per
//! size, written as line-delimited JSON plus the plain-text game-info
//! rendering used in prompts.

use std::path::Path;

use kks::generator;

fn main() -> kks::Result<()> {
    let out_dir = std::env::temp_dir().join("kks-dataset-example");
    std::fs::create_dir_all(&out_dir)?;

    // the full study shape is sizes 4..9 with 300 puzzles each; keep the
    // example quick
    let dataset = generator::build_dataset(&[4, 5, 6], 20, 7)?;
    println!("generated {} puzzles", dataset.len());

    let jsonl = out_dir.join("puzzles.jsonl");
    let text = out_dir.join("puzzles.txt");
    generator::write_puzzles(&jsonl, &dataset)?;
    generator::write_puzzles_text(&text, &dataset)?;
    println!("wrote {} and {}", jsonl.display(), text.display());

    let reloaded = generator::read_puzzles(Path::new(&jsonl))?;
    assert_eq!(reloaded, dataset);

    let sample = &dataset[0];
    println!("\nfirst record:\n{}", sample.to_json_line()?);
    println!("\nits game info block:\n{}", sample.game_info_text());
    Ok(())
}

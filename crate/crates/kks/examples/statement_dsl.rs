//! The statement DSL: parsing, canonical printing, English rendering, and
//! truth evaluation against a concrete world.

use kks::dsl;
use kks::statement::{evaluate, PlayerId, Role, World};

fn main() -> kks::Result<()> {
    let texts = [
        "same_role(Rachel, Violet)",
        "truth_claim(Violet, lying)",
        "count(all, spy, 1)",
        "xor(count(all, knave, even), liars({Rachel, Violet, Olivia}, odd))",
    ];

    let rachel = PlayerId::new("Rachel");
    let world = World::new(
        [
            (PlayerId::new("Rachel"), Role::Knight),
            (PlayerId::new("Violet"), Role::Knight),
            (PlayerId::new("Olivia"), Role::Knave),
            (PlayerId::new("Peter"), Role::Spy),
        ]
        .into_iter()
        .collect(),
        [
            (PlayerId::new("Rachel"), true),
            (PlayerId::new("Violet"), true),
            (PlayerId::new("Olivia"), false),
            (PlayerId::new("Peter"), true),
        ]
        .into_iter()
        .collect(),
    );

    for text in texts {
        let stmt = dsl::parse(text)?;
        println!("dsl:      {}", dsl::print(&stmt));
        println!("english:  {}", dsl::render_natural(&stmt, Some(&rachel)));
        println!("value:    {}\n", evaluate(&stmt, &world)?);
    }

    // parse errors carry byte positions
    match dsl::parse("count(all, wizard, 2)") {
        Err(e) => println!("rejected as expected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}

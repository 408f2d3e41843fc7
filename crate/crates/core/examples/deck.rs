//! Drive the command-line front end from a deck given inline.

use approxlie::cli;
use approxlie::deck::{ConfigDeck, Format};

const DECK: &str = r#"
[case]
ids = ["II"]

[generators]
names = ["xi1", "xi9"]

[[generators.inline]]
name = "mixed_translation"
xi_x = ["1", "0"]
xi_y = ["0", "1"]

[[generators.inline]]
name = "not_a_symmetry"
eta_u = ["0", "u0*x"]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let deck = ConfigDeck::parse(DECK)?;
    let outcome = cli::verify_symmetries(&deck, Format::Text)?;
    print!("{}", outcome.body);
    for n in &outcome.notes {
        println!("{n}");
    }
    println!("exit code {}", outcome.exit_code());
    Ok(())
}

//! Parse, canonicalize and differentiate expressions.

use approxlie::expr::NormalForm;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let inputs = if args.is_empty() {
        vec![
            "sin(x)^2 + cos(x)^2".to_string(),
            "exp(2*x)^2/exp(4*x) + (x^2 - y^2)/(x - y)".to_string(),
            "arctan(y/x)".to_string(),
            "log(1 + x^2)*exp(-y)".to_string(),
        ]
    } else {
        args
    };
    for text in inputs {
        let e = NormalForm::parse(&text)?;
        println!("{text}");
        println!("  = {e}");
        println!("  d/dx = {}", e.diff("x"));
        println!("  d/dy = {}", e.diff("y"));
    }
    Ok(())
}

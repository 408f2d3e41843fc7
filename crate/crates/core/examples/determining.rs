//! Determining equations of a generator that is not a symmetry.

use approxlie::expr::NormalForm;
use approxlie::invariance::InvarianceEngine;
use approxlie::model::{self, GivenFunctions, ModelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::symbolic();
    let sys = model::creeping_system(&params);
    let engine = InvarianceEngine::new(&sys, 1)?;
    let (_, mut g) = model::symmetry_generators(&GivenFunctions::symbolic(), &params)
        .into_iter()
        .find(|(n, _)| n == "xi4")
        .expect("listed");
    let extra = std::env::args().nth(1).unwrap_or_else(|| "x*y".to_string());
    let forms = vec![NormalForm::zero(), NormalForm::parse(&extra)?];
    g.set_slot("eta_u", forms)?;
    println!("X = {g}");
    let set = engine.determining(&g)?;
    println!("{set}");
    Ok(())
}

//! Second prolongation of a rotation mixed with a small dilation.

use approxlie::expr::NormalForm;
use approxlie::model;
use approxlie::prolong::{prolong, Generator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let space = model::jet_space();
    let nf = |s: &str| NormalForm::parse(s).expect("valid");
    let xi = vec![vec![nf("-y"), nf("x")], vec![nf("x"), nf("y")]];
    let eta = vec![vec![nf("-v"), nf("0")], vec![nf("u"), nf("0")], vec![nf("0"), nf("-2*p")]];
    let g = Generator::from_infinitesimals(&space, &xi, &eta)?;
    println!("X = {g}");
    let pg = prolong(&g, 2)?;
    for ((alpha, index), coeff) in &pg.eta_deriv {
        let name = space.dependents[*alpha].name();
        println!("  eta[{name}; {index:?}] = {coeff}");
    }
    Ok(())
}

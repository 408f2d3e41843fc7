//! Truncated series in the small parameter.

use approxlie::expr::NormalForm;
use approxlie::series::EpsSeries;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = 2;
    let nf = NormalForm::parse;
    let a = EpsSeries::new(vec![nf("1 + x")?, nf("y")?, nf("x*y")?]);
    let b = EpsSeries::new(vec![nf("2")?, nf("-x")?, nf("0")?]);
    println!("a = {a}");
    println!("b = {b}");
    println!("a b = {}", a.mul(&b)?);
    println!("1/a = {}", a.inv()?);
    println!("a^3 = {}", a.pow(3)?);
    let closed = nf("(1 + x)/(1 - eps*y)")?;
    println!("{closed} = {}", EpsSeries::from_normal(&closed, p)?);
    println!("truncated at eps^1: {}", a.mul(&b)?.with_order(1));
    Ok(())
}

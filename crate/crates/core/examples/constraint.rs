//! The compatibility constraint on the given functions, per ansatz case.

use approxlie::expr::NormalForm;
use approxlie::model::{self, AnsatzCase, CaseId, ModelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::symbolic();
    for case in CaseId::ALL {
        let c = AnsatzCase::symbolic(case, &params)?;
        let r = model::constraint_residual(c.f1(), c.f2(), &params);
        println!("case {case}: f1 = {}", c.f1());
        println!("  f2 = {}", c.f2());
        println!("  residual = {r}");
    }
    let f1 = NormalForm::parse("x^2*y^3")?;
    let f2 = NormalForm::zero();
    println!("f1 = {f1}, f2 = 0: residual = {}", model::constraint_residual(&f1, &f2, &params));
    Ok(())
}

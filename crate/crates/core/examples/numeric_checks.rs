//! Point evaluation in double and extended precision, finite-difference
//! oracles and magnitude checks on the families.

use approxlie::catalog::{self, FamilyId, FamilyParams};
use approxlie::expr::NormalForm;
use approxlie::numeric::{self, Bindings, Compiled, Extended, Real, SamplePlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let e = NormalForm::parse("exp(x)*sin(y)/(1 + x^2) - arctan(x*y)")?;
    let point: Bindings = [("x".to_string(), 0.75), ("y".to_string(), -0.4)].into();
    println!("{e} at {point:?}");
    println!("  double   {:.17e}", numeric::eval(&e, &point)?);
    let c = Compiled::new(&e);
    let ext = c.eval_with::<Extended>(&|n: &str| point.get(n).map(|v| Extended::from_f64(*v)))?;
    println!("  extended {:.17e}", ext.to_f64());
    for var in ["x", "y"] {
        println!("  fd error d/d{var}: {:.2e}", numeric::fd_check(&e, var, &point, numeric::FD_STEP)?);
    }
    for id in FamilyId::ALL {
        let fam = catalog::solution_family(id, &FamilyParams::numeric_defaults())?;
        let fam = catalog::repair_family(&fam)?.repaired.unwrap_or(fam);
        let plan = SamplePlan::default_for(id);
        println!("{}", numeric::magnitude_check(&fam, &plan)?);
        println!("{}", numeric::fd_family(&fam, &plan, numeric::FD_STEP)?);
    }
    Ok(())
}

//! Residual against the small parameter for every family and its
//! zeroth-order truncation.

use approxlie::catalog::{self, FamilyId, FamilyParams};
use approxlie::model;
use approxlie::numeric::{eps_sweep, Precision, SamplePlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let precision = if std::env::args().any(|a| a == "--extended") { Precision::Extended } else { Precision::Double };
    let eps = [1e-1, 1e-2, 1e-3, 1e-4];
    for id in FamilyId::ALL {
        let fam = catalog::solution_family(id, &FamilyParams::numeric_defaults())?;
        let fam = catalog::repair_family(&fam)?.repaired.unwrap_or(fam);
        let sys = model::creeping_system(&fam.params.model()?);
        let plan = SamplePlan::default_for(id);
        println!("{}", eps_sweep(&fam, &sys, &eps, &plan, precision)?);
        println!("eps^0 truncation of {id}:");
        println!("{}", eps_sweep(&fam.truncated(), &sys, &eps, &plan, precision)?);
    }
    Ok(())
}

//! Check every closed-form family against the full system, its generator's
//! surface conditions and its reduced system.

use std::time::Instant;

use approxlie::catalog::{self, FamilyId, FamilyParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let numeric = std::env::args().any(|a| a == "--numeric");
    let params = if numeric { FamilyParams::numeric_defaults() } else { FamilyParams::symbolic() };
    for id in FamilyId::ALL {
        let t = Instant::now();
        let fam = catalog::solution_family(id, &params)?;
        let (reports, repair) = catalog::verify_family(&fam)?;
        for r in &reports {
            println!("{r}");
        }
        if let Some(rp) = repair {
            println!("{rp}");
        }
        println!("  {id}: {:.2?}", t.elapsed());
    }
    Ok(())
}

//! Verify the nine generators at first order, with xi9 checked against the
//! constraint in each ansatz case.

use std::time::Instant;

use approxlie::invariance::InvarianceEngine;
use approxlie::model::{self, AnsatzCase, CaseId, GivenFunctions, ModelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = Instant::now();
    let params = ModelParams::symbolic();
    let sys = model::creeping_system(&params);
    let given = GivenFunctions::symbolic();
    let plain = InvarianceEngine::new(&sys, 1)?;
    let modulo = InvarianceEngine::with_modulo(&sys, 1, &model::constraint_rules(&given, &params))?;
    for (name, g) in model::symmetry_generators(&given, &params) {
        let engine = if model::needs_constraint(&name) { &modulo } else { &plain };
        let v = engine.verify(&name, &g);
        println!("{} {name}", if v.passed { "PASS" } else { "FAIL" });
    }
    for case in CaseId::ALL {
        let c = AnsatzCase::symbolic(case, &params)?;
        let engine = InvarianceEngine::with_modulo(&sys, 1, &model::constraint_rules(&c.given, &params))?;
        let (_, g) = model::symmetry_generators(&c.given, &params)
            .into_iter()
            .find(|(n, _)| n == "xi9")
            .expect("listed");
        let v = engine.verify("xi9", &g);
        println!("{} xi9 case {case}", if v.passed { "PASS" } else { "FAIL" });
    }
    println!("{:.2?}", t.elapsed());
    Ok(())
}

//! Acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use approxlie::catalog::{self, FamilyId, FamilyParams, SolutionFamily};
use approxlie::expr::NormalForm;
use approxlie::invariance::InvarianceEngine;
use approxlie::model::{self, AnsatzCase, CaseId, GivenFunctions, ModelParams};
use approxlie::numeric::{self, eps_sweep, fd_check, Precision, SamplePlan};
use common::{bindings, expr_text, nf, Generators};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, TestRng, TestRunner};

const SLOPE_BAND: (f64, f64) = (1.95, 2.05);
const CONTROL_BAND: (f64, f64) = (0.95, 1.05);
const SWEEP_EPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
const SWEEP_POINTS: usize = 64;
const FD_TOL: f64 = 1e-6;
const RANDOM_EXPRESSIONS: u32 = 1000;
const MUTANTS: usize = 50;

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn new(ok: bool, detail: impl Into<String>) -> Verdict {
        Verdict { ok, detail: detail.into() }
    }
}

fn symbolic_case(case: CaseId) -> AnsatzCase {
    AnsatzCase::symbolic(case, &ModelParams::symbolic()).unwrap()
}

fn criterion_1() -> Verdict {
    let params = ModelParams::symbolic();
    let sys = model::creeping_system(&params);
    let given = GivenFunctions::symbolic();
    let plain = InvarianceEngine::new(&sys, 1).unwrap();
    let modulo = InvarianceEngine::with_modulo(&sys, 1, &model::constraint_rules(&given, &params)).unwrap();
    let mut failed = Vec::new();
    let generators = model::symmetry_generators(&given, &params);
    for (name, g) in &generators {
        let engine = if model::needs_constraint(name) { &modulo } else { &plain };
        if !engine.verify(name, g).passed {
            failed.push(name.clone());
        }
    }
    for case in CaseId::ALL {
        let c = symbolic_case(case);
        let engine = InvarianceEngine::with_modulo(&sys, 1, &model::constraint_rules(&c.given, &params)).unwrap();
        let (_, xi9) = model::symmetry_generators(&c.given, &params).into_iter().find(|(n, _)| n == "xi9").unwrap();
        let label = format!("xi9 case {case}");
        if !engine.verify(&label, &xi9).passed {
            failed.push(label);
        }
    }
    Verdict::new(
        generators.len() == 9 && failed.is_empty(),
        format!("{} generators, xi9 in 3 cases, failures {failed:?}", generators.len()),
    )
}

fn criterion_2() -> Verdict {
    let params = ModelParams::symbolic();
    let surviving: Vec<String> = CaseId::ALL
        .iter()
        .filter_map(|&case| {
            let c = symbolic_case(case);
            let r = model::constraint_residual(c.f1(), c.f2(), &params);
            (!r.is_zero()).then(|| format!("case {case}: {r}"))
        })
        .collect();
    Verdict::new(surviving.is_empty(), format!("nonzero residuals {surviving:?}"))
}

/// The family that passes the full residual, original or repaired, plus a
/// description of what happened.
fn verified_family(id: FamilyId, params: &FamilyParams) -> Result<(SolutionFamily, String), String> {
    let fam = catalog::solution_family(id, params).map_err(|e| e.to_string())?;
    let first = catalog::check_full_residual(&fam).map_err(|e| e.to_string())?;
    if first.passed() {
        return Ok((fam, format!("{id} exact")));
    }
    let rp = catalog::repair_family(&fam).map_err(|e| e.to_string())?;
    if rp.surviving.is_empty() {
        return Err(format!("{id} failed without surviving coefficients"));
    }
    let fixed = rp.repaired.ok_or_else(|| format!("{id} unrepairable: {}", rp.reason.unwrap_or_default()))?;
    let again = catalog::check_full_residual(&fixed).map_err(|e| e.to_string())?;
    if !again.passed() {
        return Err(format!("{id} repair does not pass"));
    }
    Ok((fixed, format!("{id} repaired ({} surviving)", rp.surviving.len())))
}

fn criterion_3() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for id in FamilyId::ALL {
        match verified_family(id, &FamilyParams::symbolic()) {
            Ok((_, note)) => notes.push(note),
            Err(e) => {
                ok = false;
                notes.push(e);
            }
        }
    }
    Verdict::new(ok, notes.join(", "))
}

fn criterion_4() -> Verdict {
    let mut failed = Vec::new();
    for id in FamilyId::ALL.into_iter().filter(|id| *id != FamilyId::BvpMud) {
        let pass = verified_family(id, &FamilyParams::symbolic())
            .ok()
            .and_then(|(fam, _)| catalog::check_reduced_system(&fam).ok())
            .is_some_and(|r| r.passed());
        if !pass {
            failed.push(id.to_string());
        }
    }
    Verdict::new(failed.is_empty(), format!("4 families, failures {failed:?}"))
}

fn criterion_5() -> Verdict {
    let fam = match verified_family(FamilyId::BvpMud, &FamilyParams::symbolic()) {
        Ok((f, _)) => f,
        Err(e) => return Verdict::new(false, e),
    };
    let mut data = catalog::BoundaryData::symbolic();
    for v in [&mut data.u_shear, &mut data.v_suction, &mut data.p_far] {
        *v = fam.params.bind(v).unwrap();
    }
    let rep = catalog::check_bvp(&fam, &data).unwrap();
    Verdict::new(rep.passed(), format!("{} nonzero eps^0 or eps=0 residuals", rep.residuals.len()))
}

fn criterion_6() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for id in FamilyId::ALL {
        let fam = match verified_family(id, &FamilyParams::numeric_defaults()) {
            Ok((f, _)) => f,
            Err(e) => {
                ok = false;
                notes.push(e);
                continue;
            }
        };
        let sys = model::creeping_system(&fam.params.model().unwrap());
        let plan = SamplePlan::default_for(id);
        assert_eq!(plan.count, SWEEP_POINTS);
        let full = eps_sweep(&fam, &sys, &SWEEP_EPS, &plan, Precision::Double).unwrap();
        let cut = eps_sweep(&fam.truncated(), &sys, &SWEEP_EPS, &plan, Precision::Double).unwrap();
        let in_band = |s: Option<f64>, band: (f64, f64)| s.is_some_and(|s| s >= band.0 && s <= band.1);
        let (a, b) = (in_band(full.slope, SLOPE_BAND), in_band(cut.slope, CONTROL_BAND));
        ok &= a && b;
        notes.push(format!(
            "{id} {}{} control {}{}",
            full.slope_label(),
            if a { "" } else { " out of band" },
            cut.slope_label(),
            if b { "" } else { " out of band" },
        ));
    }
    Verdict::new(ok, notes.join(", "))
}

fn criterion_7() -> Verdict {
    let p = Generators::new();
    let count = |r: Vec<(String, bool)>| (r.iter().filter(|(_, ok)| *ok).count(), r.len());
    let stable = count(p.stable_parts());
    let closure = count(p.eps_multiples());
    let brackets = count(p.commutators());
    let mutants = p.mutations(MUTANTS, 7);
    let rejected = mutants
        .iter()
        .filter(|(n, g)| !p.engine(n.split(' ').nth(1).unwrap()).verify(n, g).passed)
        .count();
    let full = |(a, b): (usize, usize)| a == b && b > 0;
    Verdict::new(
        full(stable) && full(closure) && full(brackets) && rejected == MUTANTS,
        format!(
            "stable {}/{}, eps-closure {}/{}, commutators {}/{}, mutants rejected {rejected}/{MUTANTS}",
            stable.0, stable.1, closure.0, closure.1, brackets.0, brackets.1
        ),
    )
}

fn criterion_8() -> Verdict {
    let classes = [
        "x^3*y - 2*x*y^2 + 5",
        "(x^2 + y)/(1 + x^2*y^2)",
        "sin(2*x)*cos(y) + cos(x*y)",
        "exp(-x*y)*sin(x) + exp(2*y)",
        "arctan(x/(1 + y^2)) + log(1 + x^2 + y^2)",
        "y/x^2 + x/(x - 3)",
    ];
    let pt = bindings(&[("x", 1.3), ("y", 0.7)]);
    let mut worst: f64 = 0.0;
    let mut forms: Vec<NormalForm> = classes.iter().map(|t| nf(t)).collect();
    for id in FamilyId::ALL {
        let fam = verified_family(id, &FamilyParams::numeric_defaults()).unwrap().0;
        for (_, s) in fam.components() {
            forms.push(s.to_normal().substitute_param("eps", &nf("1/10")).unwrap());
        }
    }
    for e in &forms {
        for var in ["x", "y"] {
            worst = worst.max(fd_check(e, var, &pt, numeric::FD_STEP).unwrap());
        }
    }
    let mut runner = TestRunner::new_with_rng(
        Config { cases: RANDOM_EXPRESSIONS, ..Config::default() },
        TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let strategy = expr_text();
    let mut broken = Vec::new();
    for _ in 0..RANDOM_EXPRESSIONS {
        let a = nf(&strategy.new_tree(&mut runner).unwrap().current());
        let b = nf(&strategy.new_tree(&mut runner).unwrap().current());
        let clairaut = a.diff("x").diff("y").sub(&a.diff("y").diff("x")).is_zero();
        let product = a.mul(&b).diff("x").sub(&a.diff("x").mul(&b).add(&a.mul(&b.diff("x")))).is_zero();
        if !(clairaut && product) {
            broken.push(a.to_string());
        }
    }
    Verdict::new(
        worst < FD_TOL && broken.is_empty(),
        format!(
            "fd worst {worst:.2e} over {} expressions, {RANDOM_EXPRESSIONS} random expressions with {} failures",
            forms.len(),
            broken.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Duration, fn() -> Verdict); 8] = [
        (1, "symmetry verification", Duration::from_secs(120), criterion_1),
        (2, "constraint", Duration::from_secs(5), criterion_2),
        (3, "solution residuals", Duration::from_secs(600), criterion_3),
        (4, "reduced systems", Duration::from_secs(60), criterion_4),
        (5, "boundary value problem", Duration::from_secs(5), criterion_5),
        (6, "numeric order check", Duration::from_secs(30), criterion_6),
        (7, "structural properties", Duration::MAX, criterion_7),
        (8, "kernel oracles", Duration::MAX, criterion_8),
    ];
    let mut all = true;
    for (n, title, budget, run) in criteria {
        let start = Instant::now();
        let v = run();
        let took = start.elapsed();
        let timely = took < budget;
        let ok = v.ok && timely;
        all &= ok;
        let limit = if budget == Duration::MAX { String::new() } else { format!(" of {:.0} s", budget.as_secs_f64()) };
        println!(
            "criterion {n} {}: {title} ({:.2} s{limit}) {}{}",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            v.detail,
            if timely { "" } else { "; over time budget" },
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

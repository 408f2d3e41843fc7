//! The perturbed creeping-flow system, its nine approximate generators, the
//! constraint on the prescribed functions and the three ansatz cases.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::ModelError;
use crate::expr::{DerivativeSymbol, NormalForm, SymbolTable, Q};
use crate::invariance::{Constraint, PdeSystem};
use crate::prolong::{Generator, JetSpace};

const CONTINUITY: &str = "u_x + v_y";

const X_MOMENTUM: &str = "p_x - (u_xx + u_yy)/Re - eps*(5*u_x*u_xx + u_x*u_yy + u*u_xxx + v*u_yyy \
    + u*u_xyy + 2*v_x*v_xx + u_y*u_xy + u_y*v_xx + v*u_xxy)";

const Y_MOMENTUM: &str = "p_y - (v_xx - u_xy)/Re - eps*(5*u_x*u_xy - u_x*v_xx - v*u_xyy \
    + u*v_xxx - v*u_xxx + 2*u_y*u_yy - v_x*u_xx + v_x*u_yy - u*u_xxy)";

pub fn table() -> &'static SymbolTable {
    SymbolTable::standard()
}

fn parse(s: &str) -> NormalForm {
    NormalForm::parse(s).expect("built-in expression")
}

fn jet(name: &str) -> DerivativeSymbol {
    table().derivative(name).expect("built-in jet")
}

/// The Reynolds number, symbolic unless fixed.
#[derive(Clone, PartialEq, Debug)]
pub struct ModelParams {
    pub re: NormalForm,
}

impl ModelParams {
    pub fn symbolic() -> ModelParams {
        ModelParams {
            re: NormalForm::param("Re"),
        }
    }

    pub fn numeric(re: Q) -> ModelParams {
        ModelParams {
            re: NormalForm::constant(re),
        }
    }

    /// Replace the `Re` atom of a form by this value.
    pub fn apply(&self, e: &NormalForm) -> NormalForm {
        e.substitute_param("Re", &self.re).expect("Re is nonzero")
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::symbolic()
    }
}

/// Continuity and the two momentum equations, solved for `v_y`, `p_x`, `p_y`.
pub fn creeping_system(params: &ModelParams) -> PdeSystem {
    let t = table();
    let deps = ["u", "v", "p"].map(|n| t.function(n).expect("dependent").clone()).to_vec();
    let given = ["f1", "f2"].map(|n| t.function(n).expect("given").clone()).to_vec();
    let eqs = [
        ("continuity", CONTINUITY, "v_y"),
        ("x-momentum", X_MOMENTUM, "p_x"),
        ("y-momentum", Y_MOMENTUM, "p_y"),
    ]
    .map(|(label, text, lead)| (label.to_string(), params.apply(&parse(text)), jet(lead)))
    .to_vec();
    PdeSystem::new(&["x", "y"], deps, given, eqs).expect("leading derivatives are triangular")
}

/// The prescribed pair `(f1(x, y), f2(x))` with the derivatives the
/// generators need.
#[derive(Clone, PartialEq, Debug)]
pub struct GivenFunctions {
    pub f1: NormalForm,
    pub f2: NormalForm,
    pub f1_yy: NormalForm,
    pub f1_xy: NormalForm,
    pub f1_xyy: NormalForm,
    pub f1_xxx: NormalForm,
}

impl GivenFunctions {
    pub fn new(f1: NormalForm, f2: NormalForm) -> GivenFunctions {
        let f1_y = f1.diff("y");
        let f1_x = f1.diff("x");
        let f1_xx = f1_x.diff("x");
        GivenFunctions {
            f1_yy: f1_y.diff("y"),
            f1_xy: f1_x.diff("y"),
            f1_xyy: f1_x.diff("y").diff("y"),
            f1_xxx: f1_xx.diff("x"),
            f1,
            f2,
        }
    }

    /// Arbitrary `f1(x, y)` and `f2(x)`.
    pub fn symbolic() -> GivenFunctions {
        GivenFunctions::new(parse("f1"), parse("f2"))
    }

    pub fn zero() -> GivenFunctions {
        GivenFunctions::new(NormalForm::zero(), NormalForm::zero())
    }

    /// `f2 - (f1_xyy + f1_xxx)/Re`.
    pub fn pressure_shift(&self, params: &ModelParams) -> NormalForm {
        let third = self.f1_xyy.add(&self.f1_xxx);
        self.f2.sub(&third.div(&params.re).expect("Re is nonzero"))
    }
}

/// `df2/dx - (f1_xxxx + 2 f1_xxyy + f1_yyyy)/Re`.
pub fn constraint_residual(f1: &NormalForm, f2: &NormalForm, params: &ModelParams) -> NormalForm {
    let xx = f1.diff("x").diff("x");
    let yy = f1.diff("y").diff("y");
    let bih = xx.diff("x").diff("x").add(&xx.diff("y").diff("y").scale(&Q::from_integer(2.into()))).add(&yy.diff("y").diff("y"));
    f2.diff("x").sub(&bih.div(&params.re).expect("Re is nonzero"))
}

/// The constraint as an on-shell rule solved for `f2_x`.
pub fn constraint(given: &GivenFunctions, params: &ModelParams) -> Constraint {
    Constraint {
        expr: constraint_residual(&given.f1, &given.f2, params),
        lead: jet("f2_x"),
    }
}

/// The constraint together with its `y`-derivative, which holds because
/// `f2` depends on `x` alone; the latter is solved for `f1_yyyyy` and is
/// dropped when `f1` is explicit.
pub fn constraint_rules(given: &GivenFunctions, params: &ModelParams) -> Vec<Constraint> {
    let c = constraint(given, params);
    let lead = jet("f1_yyyyy");
    let dy = c.expr.diff("y");
    let mut out = vec![c];
    if dy.derivative_symbols().contains(&lead) {
        out.push(Constraint { expr: dy, lead });
    }
    out
}

pub fn jet_space() -> Arc<JetSpace> {
    creeping_system(&ModelParams::symbolic()).jet_space(1)
}

fn generator(space: &Arc<JetSpace>, slots: &[(&str, [NormalForm; 2])]) -> Generator {
    let mut g = Generator::zero(space);
    for (key, forms) in slots {
        g.set_slot(key, forms.to_vec()).expect("built-in slot");
    }
    g
}

/// `Ξ1..Ξ9`, named `xi1..xi9`, at series order one.
pub fn symmetry_generators(given: &GivenFunctions, params: &ModelParams) -> Vec<(String, Generator)> {
    let s = jet_space();
    let z = NormalForm::zero;
    let one = NormalForm::one;
    let list = vec![
        generator(&s, &[("xi_x", [one(), z()])]),
        generator(&s, &[("xi_y", [one(), z()])]),
        generator(&s, &[("eta_p", [one(), z()])]),
        generator(&s, &[("xi_x", [z(), one()])]),
        generator(&s, &[("xi_y", [z(), one()])]),
        generator(
            &s,
            &[
                ("eta_u", [z(), parse("u0")]),
                ("eta_v", [z(), parse("v0")]),
                ("eta_p", [z(), parse("p0")]),
            ],
        ),
        generator(
            &s,
            &[
                ("xi_x", [z(), parse("x")]),
                ("xi_y", [z(), parse("y")]),
                ("eta_p", [z(), parse("-p0")]),
            ],
        ),
        generator(
            &s,
            &[
                ("xi_x", [parse("x"), z()]),
                ("xi_y", [parse("y"), z()]),
                ("eta_u", [parse("u0"), parse("u1")]),
                ("eta_v", [parse("v0"), parse("v1")]),
            ],
        ),
        generator(
            &s,
            &[
                ("eta_u", [z(), given.f1_yy.clone()]),
                ("eta_v", [z(), given.f1_xy.neg()]),
                ("eta_p", [z(), given.pressure_shift(params)]),
            ],
        ),
    ];
    list.into_iter()
        .enumerate()
        .map(|(i, g)| (format!("xi{}", i + 1), g))
        .collect()
}

/// Whether a generator of the list needs the constraint as an extra rule.
pub fn needs_constraint(name: &str) -> bool {
    matches!(name, "xi9" | "xiA" | "xiB")
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, serde::Serialize, serde::Deserialize)]
pub enum CaseId {
    I,
    II,
    III,
}

impl CaseId {
    pub const ALL: [CaseId; 3] = [CaseId::I, CaseId::II, CaseId::III];
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseId::I => "I",
            CaseId::II => "II",
            CaseId::III => "III",
        })
    }
}

impl FromStr for CaseId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(CaseId::I),
            "II" | "2" => Ok(CaseId::II),
            "III" | "3" => Ok(CaseId::III),
            _ => Err(ModelError::InvalidCaseParams(format!("unknown case `{s}`"))),
        }
    }
}

/// `f1 = F(x) G(y) + H(x)` with `f2 = (H''' - a7)/Re`.
#[derive(Clone, PartialEq, Debug)]
pub struct AnsatzCase {
    pub case: CaseId,
    pub a: [NormalForm; 7],
    pub b: NormalForm,
    pub big_f: NormalForm,
    pub big_g: NormalForm,
    pub h: NormalForm,
    pub given: GivenFunctions,
    /// `F G` vanishes identically, so `f1 = H`.
    pub degenerate: bool,
}

impl AnsatzCase {
    pub fn f1(&self) -> &NormalForm {
        &self.given.f1
    }

    pub fn f2(&self) -> &NormalForm {
        &self.given.f2
    }

    /// All of `a1..a7`, `b` left as parameters, `H = a7 x^3/6`.
    pub fn symbolic(case: CaseId, params: &ModelParams) -> Result<AnsatzCase, ModelError> {
        let a = std::array::from_fn(|i| NormalForm::param(&format!("a{}", i + 1)));
        ansatz_case(case, &a, &NormalForm::param("b"), None, params)
    }
}

/// Default `H = a7 x^3/6`.
pub fn default_h(a7: &NormalForm) -> NormalForm {
    parse("x^3/6").mul(a7)
}

pub fn ansatz_case(
    case: CaseId,
    a: &[NormalForm; 7],
    b: &NormalForm,
    h: Option<NormalForm>,
    params: &ModelParams,
) -> Result<AnsatzCase, ModelError> {
    if case != CaseId::I && b.is_zero() {
        return Err(ModelError::InvalidCaseParams(format!("case {case}")));
    }
    let x = NormalForm::var("x");
    let y = NormalForm::var("y");
    let trig = |f: crate::expr::TransFn, arg: &NormalForm| NormalForm::apply_fn(f, arg);
    use crate::expr::TransFn::{Cos, Exp, Sin};
    let bx = b.mul(&x);
    let by = b.mul(&y);
    let lin = |c: &NormalForm, d: &NormalForm| c.add(&d.mul(&x));
    let (big_f, big_g) = match case {
        CaseId::I => (
            parse("x^3").mul(&a[2]).add(&parse("x^2").mul(&a[3])).add(&x.mul(&a[4])).add(&a[5]),
            a[0].mul(&y).add(&a[1]),
        ),
        CaseId::II => (
            lin(&a[2], &a[4]).mul(&trig(Cos, &bx)?).add(&lin(&a[3], &a[5]).mul(&trig(Sin, &bx)?)),
            a[0].mul(&trig(Exp, &by)?).add(&a[1].mul(&trig(Exp, &by.neg())?)),
        ),
        CaseId::III => (
            lin(&a[2], &a[4]).mul(&trig(Exp, &bx)?).add(&lin(&a[3], &a[5]).mul(&trig(Exp, &bx.neg())?)),
            a[0].mul(&trig(Cos, &by)?).add(&a[1].mul(&trig(Sin, &by)?)),
        ),
    };
    let h = h.unwrap_or_else(|| default_h(&a[6]));
    let h3 = h.diff("x").diff("x").diff("x");
    let f2 = h3.sub(&a[6]).div(&params.re)?;
    let fg = big_f.mul(&big_g);
    let degenerate = fg.is_zero();
    let f1 = fg.add(&h);
    Ok(AnsatzCase {
        case,
        a: a.clone(),
        b: b.clone(),
        big_f,
        big_g,
        h,
        given: GivenFunctions::new(f1, f2),
        degenerate,
    })
}

/// Numeric parameters used when none are supplied.
pub fn default_a() -> [NormalForm; 7] {
    ["1", "1/2", "1/4", "1/10", "1/5", "3/10", "2/5"].map(parse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariance::InvarianceEngine;

    fn nf(s: &str) -> NormalForm {
        parse(s)
    }

    #[test]
    fn unperturbed_limit() {
        let sys = creeping_system(&ModelParams::symbolic()).eps_zero().unwrap();
        assert_eq!(sys.equations()[1], nf("p_x - (u_xx + u_yy)/Re"));
        assert_eq!(sys.equations()[2], nf("p_y - (v_xx - u_xy)/Re"));
    }

    #[test]
    fn momentum_correction_coefficients() {
        let sys = creeping_system(&ModelParams::symbolic());
        let part = sys.equations()[1].coefficient_of_param("eps", 1).unwrap().neg();
        let mut coeffs: Vec<String> = part.collect_by(&|_| true).unwrap().iter().map(|c| c.coeff.to_string()).collect();
        coeffs.sort();
        assert_eq!(coeffs, ["1", "1", "1", "1", "1", "1", "1", "2", "5"]);
    }

    #[test]
    fn stagnation_flow_is_exact() {
        let sys = creeping_system(&ModelParams::symbolic());
        let sol = [nf("c*x"), nf("-c*y"), nf("q")];
        let t = table();
        let funcs: Vec<_> = ["u", "v", "p"]
            .iter()
            .zip(sol)
            .map(|(n, s)| (t.function(n).unwrap().clone(), s))
            .collect();
        for e in sys.equations() {
            assert!(e.instantiate(&funcs).unwrap().is_zero());
        }
    }

    #[test]
    fn generator_slots() {
        let gens = symmetry_generators(&GivenFunctions::symbolic(), &ModelParams::symbolic());
        let g7 = &gens[6].1;
        assert_eq!(g7.xi()[0].coeff(1), &nf("x"));
        assert_eq!(g7.xi()[1].coeff(1), &nf("y"));
        assert_eq!(g7.eta()[2].coeff(1), &nf("-p0"));
        assert_eq!(gens[8].1.eta()[0].coeff(1), &nf("f1_yy"));
        let g2 = &gens[1].1;
        assert_eq!(g2.xi()[1].coeff(0), &nf("1"));
        assert_eq!(g2.slots().iter().filter(|(_, s)| !s.is_zero()).count(), 1);
    }

    #[test]
    fn constraint_examples() {
        let re = ModelParams::symbolic();
        assert_eq!(constraint_residual(&nf("x^4"), &nf("0"), &re), nf("-24/Re"));
        for case in CaseId::ALL {
            let c = AnsatzCase::symbolic(case, &re).unwrap();
            assert!(constraint_residual(c.f1(), c.f2(), &re).is_zero(), "case {case}");
        }
    }

    #[test]
    fn ansatz_instances() {
        let re = ModelParams::symbolic();
        let unit = |on: &[usize]| -> [NormalForm; 7] {
            std::array::from_fn(|i| if on.contains(&(i + 1)) { NormalForm::one() } else { NormalForm::zero() })
        };
        let c = ansatz_case(CaseId::II, &unit(&[1, 3]), &NormalForm::one(), None, &re).unwrap();
        assert_eq!(c.f1(), &nf("cos(x)*exp(y)"));
        assert!(constraint_residual(c.f1(), c.f2(), &re).is_zero());
        let c = ansatz_case(CaseId::III, &unit(&[2, 4]), &NormalForm::one(), None, &re).unwrap();
        assert_eq!(c.f1(), &nf("exp(-x)*sin(y)"));
        assert!(constraint_residual(c.f1(), c.f2(), &re).is_zero());
        let c = ansatz_case(CaseId::I, &unit(&[3]), &NormalForm::zero(), Some(NormalForm::zero()), &re).unwrap();
        assert!(c.degenerate);
        assert!(matches!(
            ansatz_case(CaseId::II, &unit(&[1]), &NormalForm::zero(), None, &re),
            Err(ModelError::InvalidCaseParams(_))
        ));
    }

    #[test]
    fn generators_pass_symbolically() {
        let re = ModelParams::symbolic();
        let sys = creeping_system(&re);
        let given = GivenFunctions::symbolic();
        let plain = InvarianceEngine::new(&sys, 1).unwrap();
        let modulo = InvarianceEngine::with_modulo(&sys, 1, &constraint_rules(&given, &re)).unwrap();
        assert_eq!(constraint_rules(&given, &re).len(), 2);
        let case = AnsatzCase::symbolic(CaseId::II, &re).unwrap();
        assert_eq!(constraint_rules(&case.given, &re).len(), 1);
        for (name, g) in symmetry_generators(&given, &re) {
            let engine = if needs_constraint(&name) { &modulo } else { &plain };
            let v = engine.verify(&name, &g);
            assert!(v.passed, "{name}: {:?}\n{}", v.error, v.determining);
        }
        let v = plain.verify("xi9", &symmetry_generators(&given, &re)[8].1);
        assert!(!v.passed);
    }
}

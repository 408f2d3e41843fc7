//! Closed-form approximately invariant solutions, the two one-parameter
//! generators they come from, and the checks tying them together.
//!
//! Families are transcribed as text and parsed once; auxiliary names such
//! as `Q` or `W` are ordinary parameters eliminated by substitution before
//! the family is handed out.
//!
//! The boundary-value family is the scale family under
//! `k1 = 0, c2 = 0, c1 = us, c3 = -vs, c4 = pf, k3 = k2, c6 = 0,
//! a7 = -6 a2 a3/Re`. The first four follow from the boundary conditions at
//! `eps^0`: `v0(x, 0) = c3 x` forces `c3 = -vs`, `u0(x, 0) = c2 x` forces
//! `c2 = 0`, the far-field pressure kills `k1` and fixes `c4`. At `eps^1`,
//! `u1(x, 0)` keeps only `c6 x`, and the far-field conditions remove every
//! `log` growth, which needs `k2 = k3`, and the `y arctan` term in `u1`,
//! which fixes `a7`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{KernelError, ModelError};
use crate::expr::{atoms, FunctionSymbol, NormalForm, Poly, Q};
use crate::invariance::{self, PdeSystem};
use crate::model::{self, AnsatzCase, CaseId, GivenFunctions, ModelParams};
use crate::prolong::Generator;
use crate::report::VerificationReport;
use crate::series::EpsSeries;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum FamilyId {
    ScaleI,
    TraslI,
    TraslII,
    TraslIII,
    BvpMud,
}

impl FamilyId {
    pub const ALL: [FamilyId; 5] = [
        FamilyId::ScaleI,
        FamilyId::TraslI,
        FamilyId::TraslII,
        FamilyId::TraslIII,
        FamilyId::BvpMud,
    ];

    /// Deck name.
    pub fn key(self) -> &'static str {
        match self {
            FamilyId::ScaleI => "scale_i",
            FamilyId::TraslI => "trasl_i",
            FamilyId::TraslII => "trasl_ii",
            FamilyId::TraslIII => "trasl_iii",
            FamilyId::BvpMud => "bvp_mud",
        }
    }

    pub fn case(self) -> CaseId {
        match self {
            FamilyId::TraslII => CaseId::II,
            FamilyId::TraslIII => CaseId::III,
            _ => CaseId::I,
        }
    }

    pub fn is_translation(self) -> bool {
        matches!(self, FamilyId::TraslI | FamilyId::TraslII | FamilyId::TraslIII)
    }

    /// Parameters the closed form may contain.
    pub fn free_set(self) -> Vec<String> {
        let mut out: Vec<String> = vec!["Re".into()];
        let push = |out: &mut Vec<String>, p: &str, r: std::ops::RangeInclusive<u32>| {
            out.extend(r.map(|i| format!("{p}{i}")));
        };
        match self {
            FamilyId::ScaleI => {
                push(&mut out, "k", 1..=3);
                push(&mut out, "c", 1..=8);
                push(&mut out, "a", 1..=7);
            }
            FamilyId::TraslI | FamilyId::TraslII | FamilyId::TraslIII => {
                push(&mut out, "k", 1..=4);
                push(&mut out, "c", 1..=8);
                push(&mut out, "a", 1..=7);
                if self != FamilyId::TraslI {
                    out.push("b".into());
                }
            }
            FamilyId::BvpMud => {
                out.extend(["us", "vs", "pf", "a1", "a3", "a4", "a5", "c5", "c7", "c8"].map(String::from));
            }
        }
        out
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key().to_ascii_uppercase())
    }
}

impl FromStr for FamilyId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let k = s.trim().to_ascii_lowercase().replace('-', "_");
        FamilyId::ALL
            .into_iter()
            .find(|f| f.key() == k)
            .ok_or_else(|| ModelError::UnknownFamily(s.to_string()))
    }
}

/// Values for family parameters; anything unbound stays symbolic. Values
/// may mention other parameters and are substituted to a fixpoint.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct FamilyParams {
    values: BTreeMap<String, NormalForm>,
}

fn q(s: &str) -> NormalForm {
    NormalForm::parse(s).expect("built-in constant")
}

impl FamilyParams {
    pub fn symbolic() -> FamilyParams {
        FamilyParams::default()
    }

    /// `Re = 1`, `k = (0.3, 0.7, 0.4, 0.2)`, `a = (1, 0.5, 0.25, 0.1, 0.2,
    /// 0.3, 0.4)`, `b = 1`, `c = (1, 0.5, -0.5, 0.25, 0.1, -0.1, 0.2, -0.2)`
    /// and the boundary defaults.
    pub fn numeric_defaults() -> FamilyParams {
        let mut p = FamilyParams::symbolic();
        p.set("Re", q("1"));
        p.set("b", q("1"));
        for (i, v) in ["3/10", "7/10", "2/5", "1/5"].iter().enumerate() {
            p.set(&format!("k{}", i + 1), q(v));
        }
        for (i, v) in model::default_a().into_iter().enumerate() {
            p.set(&format!("a{}", i + 1), v);
        }
        for (i, v) in ["1", "1/2", "-1/2", "1/4", "1/10", "-1/10", "1/5", "-1/5"].iter().enumerate() {
            p.set(&format!("c{}", i + 1), q(v));
        }
        let bd = BoundaryData::default();
        p.set("us", bd.u_shear);
        p.set("vs", bd.v_suction);
        p.set("pf", bd.p_far);
        p
    }

    pub fn set(&mut self, name: &str, value: NormalForm) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<&NormalForm> {
        self.values.get(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<NormalForm> {
        self.values.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &NormalForm)> {
        self.values.iter()
    }

    pub fn is_numeric_for(&self, id: FamilyId) -> bool {
        id.free_set().iter().all(|n| self.values.get(n).is_some_and(|v| v.as_constant().is_some()))
    }

    pub fn bind(&self, e: &NormalForm) -> Result<NormalForm, KernelError> {
        if self.values.is_empty() {
            return Ok(e.clone());
        }
        let map: HashMap<_, _> = self
            .values
            .iter()
            .map(|(k, v)| (atoms::parameter(k), v.clone()))
            .collect();
        let mut cur = e.clone();
        for _ in 0..8 {
            if !cur.deep_atoms().iter().any(|a| map.contains_key(a)) {
                return Ok(cur);
            }
            cur = cur.substitute_ids(&map)?;
        }
        Err(KernelError::FixpointLimit(8))
    }

    pub fn bind_series(&self, s: &EpsSeries) -> Result<EpsSeries, KernelError> {
        s.try_map(|c| self.bind(c))
    }

    pub fn bind_generator(&self, g: &Generator) -> Result<Generator, KernelError> {
        g.try_map(|s| self.bind_series(s))
    }

    pub fn model(&self) -> Result<ModelParams, KernelError> {
        Ok(ModelParams {
            re: self.bind(&NormalForm::param("Re"))?,
        })
    }
}

/// Boundary constants of the mud-flow problem: far-field shear rate,
/// suction speed and far-field pressure.
#[derive(Clone, PartialEq, Debug)]
pub struct BoundaryData {
    pub u_shear: NormalForm,
    pub v_suction: NormalForm,
    pub p_far: NormalForm,
}

impl BoundaryData {
    pub fn symbolic() -> BoundaryData {
        BoundaryData {
            u_shear: NormalForm::param("us"),
            v_suction: NormalForm::param("vs"),
            p_far: NormalForm::param("pf"),
        }
    }

    pub fn numeric(u_shear: Q, v_suction: Q, p_far: Q) -> BoundaryData {
        BoundaryData {
            u_shear: NormalForm::constant(u_shear),
            v_suction: NormalForm::constant(v_suction),
            p_far: NormalForm::constant(p_far),
        }
    }

    /// Store the constants under the family's parameter names.
    pub fn apply(&self, params: &mut FamilyParams) {
        params.set("us", self.u_shear.clone());
        params.set("vs", self.v_suction.clone());
        params.set("pf", self.p_far.clone());
    }
}

impl Default for BoundaryData {
    fn default() -> Self {
        BoundaryData {
            u_shear: q("1"),
            v_suction: q("1/2"),
            p_far: q("1/4"),
        }
    }
}

/// Points a family's closed form cannot be evaluated at.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SingularLocus {
    pub nonpositive_x: bool,
    pub origin: bool,
}

impl SingularLocus {
    pub const NONE: SingularLocus = SingularLocus {
        nonpositive_x: false,
        origin: false,
    };

    /// Distance from `(x, y)` to the excluded set; negative inside it.
    pub fn clearance(&self, x: f64, y: f64) -> f64 {
        let mut d = f64::INFINITY;
        if self.nonpositive_x {
            d = d.min(x);
        }
        if self.origin {
            d = d.min(x.hypot(y));
        }
        d
    }

    pub fn describe(&self) -> &'static str {
        match (self.nonpositive_x, self.origin) {
            (false, false) => "none",
            (true, false) => "x <= 0",
            (false, true) => "origin",
            (true, true) => "x <= 0 and the origin",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolutionFamily {
    pub id: FamilyId,
    pub params: FamilyParams,
    pub u: EpsSeries,
    pub v: EpsSeries,
    pub p: EpsSeries,
    pub singular: SingularLocus,
    /// The similarity variable in `(x, y)`.
    pub omega: NormalForm,
    /// Set on families produced by [`repair_family`].
    pub repaired: bool,
}

impl SolutionFamily {
    pub fn components(&self) -> [(&'static str, &EpsSeries); 3] {
        [("u", &self.u), ("v", &self.v), ("p", &self.p)]
    }

    /// The family with every first-order part dropped.
    pub fn truncated(&self) -> SolutionFamily {
        let cut = |s: &EpsSeries| EpsSeries::new(vec![s.coeff(0).clone(), NormalForm::zero()]);
        SolutionFamily {
            u: cut(&self.u),
            v: cut(&self.v),
            p: cut(&self.p),
            ..self.clone()
        }
    }

    /// Expansion-symbol instantiation `u0, u1, v0, ...` for this family.
    pub fn instantiation(&self) -> Vec<(FunctionSymbol, NormalForm)> {
        let t = model::table();
        let mut out = Vec::new();
        for (name, s) in self.components() {
            let f = t.function(name).expect("dependent");
            for k in 0..=s.order() {
                out.push((f.at_order(k as u32), s.coeff(k).clone()));
            }
        }
        out
    }
}

impl fmt::Display for SolutionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}{}", self.id, if self.repaired { " (repaired)" } else { "" })?;
        for (name, s) in self.components() {
            for (k, c) in s.coeffs().iter().enumerate() {
                writeln!(f, "  {name}{k} = {c}")?;
            }
        }
        write!(f, "  omega = {}, singular: {}", self.omega, self.singular.describe())
    }
}

type Defs = &'static [(&'static str, &'static str)];

const SCALE_DEFS: Defs = &[
    ("A", "arctan(y/x)"),
    ("LG", "log((y/x)^2 + 1)"),
    ("L", "LG/2 + log(x)"),
    ("K", "k2 - k3"),
];

const SCALE_I: [&str; 6] = [
    "k1*Re/2*y*A + c2*x + c1*y",
    "(K/2*((k1*L + c4)*Re*y + (c1 + c3)*x - 2*c2*y) - a1*a4*x - (3*a2*a3 + Re/2*(k1*k3 + a7))*y)*A \
     + K*(c2*x + c1*y)*L + c6*x + (c5 - c1*K)*y",
    "-k1*Re/2*x*A + (k1*Re/2 - c2)*y + c3*x",
    "(-K/2*((k1*L + c4)*Re*x + 2*c2*x + (c1 + c3)*y) + a1*a4*y + (3*a2*a3 + Re/2*(k1*k2 + a7))*x)*A \
     + (K*(c3*x + (k1*Re/2 - c2)*y) - 2*a1*a4*x)*L - 3*a1*a3*x^2 + c7*x \
     - (c6 - Re/2*(c4*K - k1*k2 - a7) + 3*a2*a3)*y + a1*a5",
    "k1*L + c4",
    "-k1/2*K*A^2 + k1/8*K*LG^2 + (K*(c3 - c1) - 2*a1*a4)/Re*A \
     + ((K/2*(k1*log(x) + c4) - k1*k3/2) - 3*a2*a3/Re - a7/2)*LG + k1/2*K*log(x)^2 \
     + (c4*K - k1*k3 - 6*a2*a3/Re - a7)*log(x) + k1*Re*x/(x^2 + y^2)*((4*c2 - k1*Re)*x + 2*(c1 + c3)*y) \
     - 6*a1*a3/Re*y + c8",
];

const TRASL_DEFS: Defs = &[("Q", "k1^2 + 1"), ("W", "y - k1*x"), ("K", "k1*k3 - k4")];

const TRASL_ZERO: [&str; 3] = [
    "k2*Re/(2*Q^2)*W^2 + c1*W + c2",
    "k1*k2*Re/(2*Q^2)*W^2 + k1*c1*W + c3",
    "k1*k2/Q*W + k2*x + c4",
];

const TRASL_I: [&str; 3] = [
    "-a1*a3/Q^2*W^3 + (k2*Re*(k1*(3*k1*k3 - 4*k4) - k3)/(2*Q^3) - (a7*Re + 2*(3*a2*a3 - a1*a4*k1))/(2*Q^2))*W^2 \
     + (k2*Re*K/Q^2*x + c5)*W + c1*K*x + c6",
    "-a1*a3*k1/Q^2*W^3 + (k2*Re*(k4 + k1*(2*(k1^2 - 1)*k3 - 3*k1*k4))/(2*Q^3) \
     - k1*(a7*Re + 2*(3*a2*a3 - a1*a4*k1))/(2*Q^2))*W^2 + (K*(k1*k2*Re/Q^2*x - c1) + k1*c5)*W \
     - a1*(a3*x^3 + a4*x^2) + (k1*c1*K - a1*a5)*x + c7",
    "k2^2*Re^2/Q^2*W^2 + (k2*(2*c1*Re + k4*k1*(k1*k4 + 2*k3)/Q^2) - (a7*k1*Re + 2*(3*a2*a3*k1 + a1*a4))/(Re*Q))*W \
     + 3*a1*a3/(Re*Q)*(k1*(x^2 - y^2) - 2*x*y) - (a7 + 6*a2*a3/Re + k2*(k1*k4 + k3)/Q)*x + c8",
];

/// Shared first-order parts of the two exponential cases; `UP`, `VP`, `PP`
/// are the case-specific particular terms.
const TRASL_EXP: [&str; 3] = [
    "Re*(k2*(k1*(3*k1*k3 - 4*k4) - k3) - a7*Q)/(2*Q^3)*W^2 + (k2*Re*K/Q^2*x + c5)*W + UP + c1*K*x + c6",
    "Re*(k2*(k4 + k1*(2*(k1^2 - 1)*k3 - 3*k1*k4)) - a7*k1*Q)/(2*Q^3)*W^2 + (K*(k1*k2*Re/Q^2*x - c1) + k1*c5)*W \
     + VP + k1*c1*K*x + c7",
    "k2^2*Re^2/Q^2*W^2 + 2*k2*(c1*Re - K/Q^2)*W + PP - (k2*k3 + a7)/Q*x - (k2*k4 + a7*k1)/Q*y + c8",
];

const TRASL_II_DEFS: Defs = &[
    ("E", "exp(b*y)"),
    ("Em", "exp(-b*y)"),
    (
        "S",
        "(a2*Em*(a5 - a6*k1) + a1*E*(a5 + a6*k1))/Q*b*x + a2*Em*(b*(a3 - a4*k1)*Q - a6*(k1^2 - 1) + 2*a5*k1)/Q^2 \
         + a1*E*(b*(a3 + a4*k1)*Q - a6*(k1^2 - 1) - 2*a5*k1)/Q^2",
    ),
    (
        "C",
        "(a2*Em*(a6 + a5*k1) + a1*E*(a6 - a5*k1))/Q*b*x + a2*Em*(b*(a4 + a3*k1)*Q + a5*(k1^2 - 1) + 2*a6*k1)/Q^2 \
         + a1*E*(b*(a4 - a3*k1)*Q + a5*(k1^2 - 1) - 2*a6*k1)/Q^2",
    ),
    (
        "SV",
        "(a2*Em*(a6 + a5*k1) - a1*E*(a6 - a5*k1))/Q*b*x \
         + a2*Em*(b*(a4 + a3*k1)*Q - a6*k1*(k1^2 - 1) + 2*a5*k1^2)/Q^2 \
         - a1*E*(b*(a4 - a3*k1)*Q + a6*k1*(k1^2 - 1) + 2*a5*k1^2)/Q^2",
    ),
    (
        "CV",
        "(a2*Em*(a5 - a6*k1) - a1*E*(a5 + a6*k1))/Q*b*x \
         + a2*Em*(b*(a3 - a4*k1)*Q - a5*k1*(k1^2 - 1) - 2*a6*k1^2)/Q^2 \
         - a1*E*(b*(a3 + a4*k1)*Q + a5*k1*(k1^2 - 1) - 2*a6*k1^2)/Q^2",
    ),
    ("PS", "2*b*(a2*Em*(a5 - a6*k1) + a1*E*(a5 + a6*k1))/(Re*Q)"),
    ("PC", "2*b*(a2*Em*(a6 + a5*k1) + a1*E*(a6 - a5*k1))/(Re*Q)"),
    ("UP", "S*sin(b*x) - C*cos(b*x)"),
    ("VP", "SV*sin(b*x) + CV*cos(b*x)"),
    ("PP", "PS*sin(b*x) - PC*cos(b*x)"),
];

const TRASL_III_DEFS: Defs = &[
    ("Ex", "exp(b*x)"),
    ("Exm", "exp(-b*x)"),
    (
        "S",
        "(a6*Exm*(a2 - a1*k1) - a5*Ex*(a2 + a1*k1))/Q*b*x \
         + Exm*(b*a4*(a2 - a1*k1)*Q - a6*(a2*(k1^2 - 1) + 2*a1*k1))/Q^2 \
         - Ex*(b*a3*(a2 + a1*k1)*Q + a5*(a2*(k1^2 - 1) - 2*a1*k1))/Q^2",
    ),
    (
        "C",
        "(a6*Exm*(a1 + a2*k1) - a5*Ex*(a1 - a2*k1))/Q*b*x \
         + Exm*(b*a4*(a1 + a2*k1)*Q - a6*(a1*(k1^2 - 1) - 2*a2*k1))/Q^2 \
         - Ex*(b*a3*(a1 - a2*k1)*Q + a5*(a1*(k1^2 - 1) + 2*a2*k1))/Q^2",
    ),
    (
        "SV",
        "(a6*Exm*(a1 + a2*k1) + a5*Ex*(a1 - a2*k1))/Q*b*x \
         + Exm*(b*a4*(a1 + a2*k1)*Q - a6*k1*(a2*(k1^2 - 1) + 2*a1*k1))/Q^2 \
         + Ex*(b*a3*(a1 - a2*k1)*Q - a5*k1*(a2*(k1^2 - 1) - 2*a1*k1))/Q^2",
    ),
    (
        "CV",
        "(a6*Exm*(a2 - a1*k1) + a5*Ex*(a2 + a1*k1))/Q*b*x \
         + Exm*(b*a4*(a2 - a1*k1)*Q + a6*k1*(a1*(k1^2 - 1) - 2*a2*k1))/Q^2 \
         + Ex*(b*a3*(a2 + a1*k1)*Q + a5*k1*(a1*(k1^2 - 1) + 2*a2*k1))/Q^2",
    ),
    ("PS", "2*b*(a6*Exm*(a2 - a1*k1) - a5*Ex*(a2 + a1*k1))/(Re*Q)"),
    ("PC", "2*b*(a6*Exm*(a1 + a2*k1) - a5*Ex*(a1 - a2*k1))/(Re*Q)"),
    ("UP", "S*sin(b*y) + C*cos(b*y)"),
    ("VP", "SV*sin(b*y) - CV*cos(b*y)"),
    ("PP", "PS*sin(b*y) + PC*cos(b*y)"),
];

const BVP_DEFS: Defs = &[("A", "arctan(y/x)")];

const BVP_MUD: [&str; 6] = [
    "us*y",
    "-a1*a4*x*A + c5*y",
    "-vs*x",
    "-3*a1*a3*x^2 + c7*x + a1*a5 + a1*a4*(y*A - x*log(x^2 + y^2))",
    "pf",
    "-2*a1*a4/Re*A - 6*a1*a3/Re*y + c8",
];

/// Parse `text` after resolving the auxiliary names of `defs`, each of
/// which may use the ones before it.
fn parse_with_defs(text: &str, defs: &[Defs]) -> Result<NormalForm, KernelError> {
    let mut map: HashMap<_, NormalForm> = HashMap::new();
    for group in defs {
        for (name, def) in group.iter() {
            let v = NormalForm::parse(def)?.substitute_ids(&map)?;
            map.insert(atoms::parameter(name), v);
        }
    }
    NormalForm::parse(text)?.substitute_ids(&map)
}

fn series_pair(zero: &str, one: &str, defs: &[Defs]) -> Result<EpsSeries, KernelError> {
    Ok(EpsSeries::new(vec![parse_with_defs(zero, defs)?, parse_with_defs(one, defs)?]))
}

/// The closed form of a family with `params` substituted.
pub fn solution_family(id: FamilyId, params: &FamilyParams) -> Result<SolutionFamily, ModelError> {
    let (u, v, p, singular, omega) = match id {
        FamilyId::ScaleI => {
            let d = [SCALE_DEFS];
            (
                series_pair(SCALE_I[0], SCALE_I[1], &d)?,
                series_pair(SCALE_I[2], SCALE_I[3], &d)?,
                series_pair(SCALE_I[4], SCALE_I[5], &d)?,
                SingularLocus {
                    nonpositive_x: true,
                    origin: true,
                },
                q("y/x"),
            )
        }
        FamilyId::TraslI => {
            let d = [TRASL_DEFS];
            (
                series_pair(TRASL_ZERO[0], TRASL_I[0], &d)?,
                series_pair(TRASL_ZERO[1], TRASL_I[1], &d)?,
                series_pair(TRASL_ZERO[2], TRASL_I[2], &d)?,
                SingularLocus::NONE,
                parse_with_defs("W", &d)?,
            )
        }
        FamilyId::TraslII | FamilyId::TraslIII => {
            let extra = if id == FamilyId::TraslII { TRASL_II_DEFS } else { TRASL_III_DEFS };
            let d = [TRASL_DEFS, extra];
            (
                series_pair(TRASL_ZERO[0], TRASL_EXP[0], &d)?,
                series_pair(TRASL_ZERO[1], TRASL_EXP[1], &d)?,
                series_pair(TRASL_ZERO[2], TRASL_EXP[2], &d)?,
                SingularLocus::NONE,
                parse_with_defs("W", &d)?,
            )
        }
        FamilyId::BvpMud => {
            let d = [BVP_DEFS];
            (
                series_pair(BVP_MUD[0], BVP_MUD[1], &d)?,
                series_pair(BVP_MUD[2], BVP_MUD[3], &d)?,
                series_pair(BVP_MUD[4], BVP_MUD[5], &d)?,
                SingularLocus {
                    nonpositive_x: true,
                    origin: false,
                },
                q("y/x"),
            )
        }
    };
    Ok(SolutionFamily {
        id,
        u: params.bind_series(&u)?,
        v: params.bind_series(&v)?,
        p: params.bind_series(&p)?,
        params: params.clone(),
        singular,
        omega: params.bind(&omega)?,
        repaired: false,
    })
}

/// Scale-family parameters that reproduce the boundary-value family.
pub fn bvp_parameter_map() -> FamilyParams {
    let mut m = FamilyParams::symbolic();
    for (k, v) in [
        ("k1", "0"),
        ("c2", "0"),
        ("c1", "us"),
        ("c3", "-vs"),
        ("c4", "pf"),
        ("k3", "k2"),
        ("c6", "0"),
        ("a7", "-6*a2*a3/Re"),
    ] {
        m.set(k, q(v));
    }
    m
}

/// `Ξ_A` as displayed, at series order one.
pub fn xi_a(k: [&NormalForm; 3], given: &GivenFunctions, params: &ModelParams) -> Generator {
    let [k1, k2, k3] = k;
    let s = model::jet_space();
    let mut g = Generator::zero(&s);
    let x = NormalForm::var("x");
    let y = NormalForm::var("y");
    let nf = |t: &str| NormalForm::parse(t).expect("jet symbol");
    let slots = [
        ("xi_x", [x.clone(), k3.mul(&x)]),
        ("xi_y", [y.clone(), k3.mul(&y)]),
        ("eta_u", [nf("u0"), nf("u1").add(&k2.mul(&nf("u0"))).add(&given.f1_yy)]),
        ("eta_v", [nf("v0"), nf("v1").add(&k2.mul(&nf("v0"))).sub(&given.f1_xy)]),
        ("eta_p", [k1.clone(), k2.sub(k3).mul(&nf("p0")).add(&given.pressure_shift(params))]),
    ];
    for (key, forms) in slots {
        g.set_slot(key, forms.to_vec()).expect("built-in slot");
    }
    g
}

/// `Ξ_B` as displayed, at series order one.
pub fn xi_b(k: [&NormalForm; 4], given: &GivenFunctions, params: &ModelParams) -> Generator {
    let [k1, k2, k3, k4] = k;
    let s = model::jet_space();
    let mut g = Generator::zero(&s);
    let slots = [
        ("xi_x", [NormalForm::one(), k3.clone()]),
        ("xi_y", [k1.clone(), k4.clone()]),
        ("eta_u", [NormalForm::zero(), given.f1_yy.clone()]),
        ("eta_v", [NormalForm::zero(), given.f1_xy.neg()]),
        ("eta_p", [k2.clone(), given.pressure_shift(params)]),
    ];
    for (key, forms) in slots {
        g.set_slot(key, forms.to_vec()).expect("built-in slot");
    }
    g
}

fn kappa(i: usize) -> NormalForm {
    NormalForm::param(&format!("k{i}"))
}

/// The ansatz behind a family: `a7` enters `H` scaled by `Re`, so that
/// `f2 = 0` and the family's `a7` is the coefficient of `x^3/6` in `f1/Re`.
pub fn family_case(id: FamilyId) -> Result<AnsatzCase, ModelError> {
    let params = ModelParams::symbolic();
    let mut a: [NormalForm; 7] = std::array::from_fn(|i| NormalForm::param(&format!("a{}", i + 1)));
    a[6] = a[6].mul(&params.re);
    model::ansatz_case(id.case(), &a, &NormalForm::param("b"), None, &params)
}

/// The generator a family is invariant under, with the family's
/// parameters substituted.
pub fn matched_generator(fam: &SolutionFamily) -> Result<Generator, ModelError> {
    let case = family_case(fam.id)?;
    let params = ModelParams::symbolic();
    let g = if fam.id.is_translation() {
        xi_b([&kappa(1), &kappa(2), &kappa(3), &kappa(4)], &case.given, &params)
    } else {
        xi_a([&kappa(1), &kappa(2), &kappa(3)], &case.given, &params)
    };
    let g = if fam.id == FamilyId::BvpMud {
        bvp_parameter_map().bind_generator(&g)?
    } else {
        g
    };
    Ok(fam.params.bind_generator(&g)?)
}

/// `[continuity, x-momentum, y-momentum]` residuals of a family as series.
pub fn full_residual(fam: &SolutionFamily) -> Result<Vec<(String, EpsSeries)>, ModelError> {
    let sys = model::creeping_system(&ModelParams::symbolic());
    residual_in(&sys, fam)
}

fn residual_in(sys: &PdeSystem, fam: &SolutionFamily) -> Result<Vec<(String, EpsSeries)>, ModelError> {
    let inst = fam.instantiation();
    let order = fam.u.order();
    let mut out = Vec::new();
    for (label, eq) in sys.labels().iter().zip(sys.expanded(order)?) {
        let r = eq.try_map(|c| fam.params.bind(&c.instantiate(&inst)?))?;
        out.push((label.clone(), r));
    }
    Ok(out)
}

/// Every `eps^k` coefficient of the full residual must vanish.
pub fn check_full_residual(fam: &SolutionFamily) -> Result<VerificationReport, ModelError> {
    let mut rep = VerificationReport::new(&family_label(fam), "full residual");
    for (label, r) in full_residual(fam)? {
        for (k, c) in r.coeffs().iter().enumerate() {
            rep.residual(format!("{label} eps^{k}"), c.clone());
        }
    }
    Ok(rep)
}

fn family_label(fam: &SolutionFamily) -> String {
    if fam.repaired {
        format!("{} (repaired)", fam.id)
    } else {
        fam.id.to_string()
    }
}

/// The six `eps`-separated invariant surface conditions of `g` on `fam`.
pub fn check_surface_conditions(fam: &SolutionFamily, g: &Generator) -> Result<VerificationReport, ModelError> {
    let mut rep = VerificationReport::new(&family_label(fam), "surface conditions");
    let inst = fam.instantiation();
    for c in invariance::surface_conditions(g)? {
        let r = fam.params.bind(&c.expr.instantiate(&inst)?)?;
        rep.residual(format!("{} eps^{}", c.dependent, c.order), r);
    }
    Ok(rep)
}

const SCALE_TEMPLATE: [&str; 6] = [
    "x*U0",
    "x*V0",
    "k1*log(x) + P0",
    "x*((k2 - k3)*U0*log(x) + U1)",
    "x*((k2 - k3)*V0*log(x) + V1) - a1*(3*a3*x^2 + 2*a4*x*log(x) - a5)",
    "P1 - 6*a1*a3/Re*y + k1/2*(k2 - k3)*log(x)^2 + ((k2 - k3)*P0 - (k1*k3 + 6*a2*a3/Re + a7))*log(x)",
];

const TRASL_I_TEMPLATE: [&str; 6] = [
    "U0",
    "V0",
    "k2*x + P0",
    "K*x*U0_w + U1",
    "(K*V0_w - a1*(a3*x^2 + a4*x + a5))*x + V1",
    "(K*P0_w - 3*a3/Re*(2*(a1*w + a2) + k1*a1*x) - k2*k3 - a7)*x + P1",
];

const TRASL_EXP_TEMPLATE: [&str; 6] = [
    "U0",
    "V0",
    "k2*x + P0",
    "UP + K*x*U0_w + U1",
    "VP + K*x*V0_w + V1",
    "PP + (K*P0_w - k2*k3 - a7)*x + P1",
];

const SCALE_REDUCED: [&str; 6] = [
    "V0_w - w*U0_w + U0",
    "(w^2 + 1)*U0_ww + Re*(w*P0_w - k1)",
    "w*(U0_ww + w*V0_ww) - Re*P0_w",
    "V1_w - w*U1_w + U1 + K*U0",
    "(w^2 + 1)*((w*U0 - V0)*U0_www - U1_ww/Re) + w^2*(2*(w*V0_w - V0) - U0_w)*V0_ww \
     - w*(2*(w*U0 + V0) - (5*w^2 + 2)*U0_w)*U0_ww + K*(P0 - (U0 - 2*w*U0_w)/Re) \
     - k1*k3 - 6*a2*a3/Re - a7 - w*P1_w",
    "w*(w*U0 - (w^2 + 1)*V0)*U0_www + w^3*U0*V0_www - w/Re*(w*V1_ww + U1_ww) \
     - ((5*w^2 + 2)*U0_w + w*((w^2 - 1)*V0_w - 7*U0) + 2*(w^2 + 1)*V0)*U0_ww \
     - w^2*(w*U0_w - 4*U0)*V0_ww + K/Re*(U0_w + 2*w*V0_w - V0) + 2*a1*a4/Re + P1_w",
];

const TRASL_REDUCED: [&str; 6] = [
    "V0_w - k1*U0_w",
    "Q*U0_ww + Re*(k1*P0_w - k2)",
    "k1*(U0_ww + k1*V0_ww) - Re*P0_w",
    "V1_w - k1*U1_w + K*U0_w",
    "Q*((k1*U0 - V0)*U0_www - U1_ww/Re) + k1^2*(2*k1*V0_w - U0_w)*V0_ww \
     + k1*((5*k1^2 + 2)*U0_w + 2*K/Re)*U0_ww - k1*P1_w + K*P0_w - k2*k3 - a7 + alpha",
    "k1*(k1*U0 - Q*V0)*U0_www + k1^3*U0*V0_www - k1/Re*(U1_ww + k1*V1_ww) \
     - (k1*(k1^2 - 1)*V0_w + (5*k1^2 + 2)*U0_w - K/Re)*U0_ww - k1*(k1^2*U0_w - 2*K/Re)*V0_ww + P1_w + beta",
];

const PROFILE_NAMES: [&str; 6] = ["U0", "V0", "P0", "U1", "V1", "P1"];

/// Six ODEs in `w` for the profiles `U0..P1`.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub family: FamilyId,
    pub unknowns: Vec<FunctionSymbol>,
    pub equations: Vec<NormalForm>,
    /// `(alpha, beta)` for the translation families.
    pub inhomogeneities: Option<(NormalForm, NormalForm)>,
}

fn no_template(id: FamilyId) -> ModelError {
    ModelError::ExtractionFailure {
        family: id.to_string(),
        reason: "no similarity template".into(),
    }
}

pub fn reduced_system(fam: &SolutionFamily) -> Result<ReducedSystem, ModelError> {
    let t = model::table();
    let unknowns = PROFILE_NAMES.iter().map(|n| t.function(n).expect("profile").clone()).collect();
    let (texts, defs, inhom): (&[&str; 6], Vec<(&str, String)>, _) = match fam.id {
        FamilyId::ScaleI => (&SCALE_REDUCED, vec![("K", "k2 - k3".into())], None),
        FamilyId::TraslI => (
            &TRASL_REDUCED,
            vec![],
            Some(("-6*a3*(a1*w + a2)/Re", "2*a1*a4/Re")),
        ),
        FamilyId::TraslII | FamilyId::TraslIII => (&TRASL_REDUCED, vec![], Some(("0", "0"))),
        FamilyId::BvpMud => return Err(no_template(fam.id)),
    };
    let mut map: HashMap<_, NormalForm> = HashMap::new();
    for (name, def) in TRASL_DEFS.iter().filter(|(n, _)| *n != "W") {
        map.insert(atoms::parameter(name), NormalForm::parse(def)?);
    }
    for (name, def) in defs {
        map.insert(atoms::parameter(name), NormalForm::parse(&def)?);
    }
    let inhomogeneities = match inhom {
        Some((a, b)) => {
            let a = fam.params.bind(&NormalForm::parse(a)?)?;
            let b = fam.params.bind(&NormalForm::parse(b)?)?;
            map.insert(atoms::parameter("alpha"), a.clone());
            map.insert(atoms::parameter("beta"), b.clone());
            Some((a, b))
        }
        None => None,
    };
    let equations = texts
        .iter()
        .map(|s| {
            let e = NormalForm::parse_with(s, t)?.substitute_ids(&map)?;
            fam.params.bind(&e)
        })
        .collect::<Result<_, _>>()?;
    Ok(ReducedSystem {
        family: fam.id,
        unknowns,
        equations,
        inhomogeneities,
    })
}

/// Profiles `U0..P1` read off a family through its similarity template.
#[derive(Clone, Debug)]
pub struct Profiles {
    pub family: FamilyId,
    pub profiles: Vec<(FunctionSymbol, NormalForm)>,
}

impl Profiles {
    pub fn get(&self, name: &str) -> Option<&NormalForm> {
        self.profiles.iter().find(|(f, _)| f.name() == name).map(|(_, v)| v)
    }
}

/// Solve each template for its profile after writing `y` through `w`, and
/// insist that the result is free of `x`.
pub fn extract_profiles(fam: &SolutionFamily) -> Result<Profiles, ModelError> {
    let t = model::table();
    let (template, defs, y_of_w): (&[&str; 6], Vec<Defs>, &str) = match fam.id {
        FamilyId::ScaleI => (&SCALE_TEMPLATE, vec![], "w*x"),
        FamilyId::TraslI => (&TRASL_I_TEMPLATE, vec![TRASL_DEFS], "w + k1*x"),
        FamilyId::TraslII => (&TRASL_EXP_TEMPLATE, vec![TRASL_DEFS, TRASL_II_DEFS], "w + k1*x"),
        FamilyId::TraslIII => (&TRASL_EXP_TEMPLATE, vec![TRASL_DEFS, TRASL_III_DEFS], "w + k1*x"),
        FamilyId::BvpMud => return Err(no_template(fam.id)),
    };
    let fail = |reason: String| ModelError::ExtractionFailure {
        family: fam.id.to_string(),
        reason,
    };
    let y_sub = fam.params.bind(&NormalForm::parse(y_of_w)?)?;
    let closed = [
        fam.u.coeff(0),
        fam.v.coeff(0),
        fam.p.coeff(0),
        fam.u.coeff(1),
        fam.v.coeff(1),
        fam.p.coeff(1),
    ];
    let mut known: Vec<(FunctionSymbol, NormalForm)> = Vec::new();
    for (i, name) in PROFILE_NAMES.iter().enumerate() {
        let f = t.function(name).expect("profile").clone();
        let text = template[i];
        let tpl = {
            let mut map: HashMap<_, NormalForm> = HashMap::new();
            for group in &defs {
                for (n, d) in group.iter() {
                    let v = NormalForm::parse(d)?.substitute_ids(&map)?;
                    map.insert(atoms::parameter(n), v);
                }
            }
            NormalForm::parse_with(text, t)?.substitute_ids(&map)?
        };
        let tpl = fam.params.bind(&tpl)?.substitute_var("y", &y_sub)?.instantiate(&known)?;
        let slope = tpl.partial_deriv(&f.value());
        if slope.is_zero() || slope.derivative_symbols().iter().any(|d| d.function == f) {
            return Err(fail(format!("template for {name} is not linear in it")));
        }
        let rest = tpl.instantiate(&[(f.clone(), NormalForm::zero())])?;
        let target = closed[i].substitute_var("y", &y_sub)?;
        let mut prof = target.sub(&rest).div(&slope)?;
        if !prof.diff("x").is_zero() {
            return Err(fail(format!("{name} depends on x: {prof}")));
        }
        if prof.contains_var("x") {
            prof = prof.substitute_var("x", &NormalForm::one())?;
        }
        known.push((f, prof));
    }
    Ok(Profiles {
        family: fam.id,
        profiles: known,
    })
}

pub fn check_reduced_system(fam: &SolutionFamily) -> Result<VerificationReport, ModelError> {
    let mut rep = VerificationReport::new(&family_label(fam), "reduced system");
    let profiles = extract_profiles(fam)?;
    let red = reduced_system(fam)?;
    for (i, e) in red.equations.iter().enumerate() {
        rep.residual(format!("ode {}", i + 1), e.instantiate(&profiles.profiles)?);
    }
    Ok(rep)
}

/// Boundary conditions of the mud-flow problem. Each condition's `eps^0`
/// part must vanish; the `eps^1` part is reported.
pub fn check_bvp(fam: &SolutionFamily, data: &BoundaryData) -> Result<VerificationReport, ModelError> {
    let mut rep = VerificationReport::new(&family_label(fam), "boundary conditions");
    if fam.id != FamilyId::BvpMud {
        rep.fail(format!("{} is not the boundary-value family", fam.id));
        return Ok(rep);
    }
    let bind = |e: NormalForm| fam.params.bind(&e);
    let data = BoundaryData {
        u_shear: bind(data.u_shear.clone())?,
        v_suction: bind(data.v_suction.clone())?,
        p_far: bind(data.p_far.clone())?,
    };
    let zero = NormalForm::zero();
    let y = NormalForm::var("y");
    let x = NormalForm::var("x");
    let at_wall = |s: &EpsSeries| s.try_map(|c| c.substitute_var("y", &zero));
    let conds: [(&str, EpsSeries); 5] = [
        ("u(x,0)", at_wall(&fam.u)?),
        (
            "v(x,0) + v_suction*x",
            at_wall(&fam.v)?.add(&EpsSeries::constant(data.v_suction.mul(&x), 1))?,
        ),
        (
            "u(-inf,y) - u_shear*y",
            fam.u.sub(&EpsSeries::constant(data.u_shear.mul(&y), 1))?,
        ),
        ("v_y(x,inf)", fam.v.map(|c| c.diff("y"))),
        ("p(-inf,y) - p_far", fam.p.sub(&EpsSeries::constant(data.p_far.clone(), 1))?),
    ];
    for (label, s) in conds {
        rep.residual(format!("{label} eps^0"), s.coeff(0).clone());
        rep.note(format!("{label} eps^1 = {}", s.coeff(1)));
    }
    let exact = [
        ("u", data.u_shear.mul(&y)),
        ("v", data.v_suction.mul(&x).neg()),
        ("p", data.p_far.clone()),
    ];
    for ((name, s), (_, e)) in fam.components().into_iter().zip(exact) {
        rep.residual(format!("{name} at eps=0 vs exact"), s.coeff(0).sub(&e));
    }
    Ok(rep)
}

/// The outcome of trying to fix a family that fails the full residual.
#[derive(Clone, Debug)]
pub struct Repair {
    pub original: SolutionFamily,
    /// Surviving coefficients of the original, verbatim.
    pub surviving: Vec<(String, NormalForm)>,
    /// Solved values of the added constants, named `d<comp><0|1>`.
    pub corrections: Vec<(String, NormalForm)>,
    pub repaired: Option<SolutionFamily>,
    pub reason: Option<String>,
}

impl fmt::Display for Repair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: surviving coefficients", self.original.id)?;
        for (l, c) in &self.surviving {
            writeln!(f, "  {l}: {c}")?;
        }
        match &self.repaired {
            Some(fam) => {
                for (n, v) in &self.corrections {
                    writeln!(f, "  {n} = {v}")?;
                }
                for ((name, o), (_, r)) in self.original.components().into_iter().zip(fam.components()) {
                    if o != r {
                        writeln!(f, "  {name}1 original: {}", o.coeff(1))?;
                        writeln!(f, "  {name}1 repaired: {}", r.coeff(1))?;
                    }
                }
                Ok(())
            }
            None => write!(f, "  no repair: {}", self.reason.as_deref().unwrap_or("unknown")),
        }
    }
}

const REPAIR_UNKNOWNS: [&str; 6] = ["du0", "du1", "dv0", "dv1", "dp0", "dp1"];

/// Add `eps (d0 + d1 w)` to each first-order component and solve the
/// first-order residual, which is affine in the `d`s, for them.
pub fn repair_family(fam: &SolutionFamily) -> Result<Repair, ModelError> {
    let mut surviving = Vec::new();
    for (label, r) in full_residual(fam)? {
        for (k, c) in r.coeffs().iter().enumerate() {
            if !c.is_zero() {
                surviving.push((format!("{label} eps^{k}"), c.clone()));
            }
        }
    }
    let mut out = Repair {
        original: fam.clone(),
        surviving,
        corrections: Vec::new(),
        repaired: None,
        reason: None,
    };
    if out.surviving.is_empty() {
        out.reason = Some("nothing to repair".into());
        return Ok(out);
    }
    if out.surviving.iter().any(|(l, _)| l.ends_with("eps^0")) {
        out.reason = Some("the zeroth-order part fails; only first-order terms are repairable".into());
        return Ok(out);
    }
    let d: Vec<NormalForm> = REPAIR_UNKNOWNS.iter().map(|n| NormalForm::param(n)).collect();
    let lin = |i: usize| d[2 * i].add(&d[2 * i + 1].mul(&fam.omega));
    let trial_of = |vals: &[NormalForm]| -> Result<SolutionFamily, KernelError> {
        let mut t = fam.clone();
        let map: HashMap<_, _> = REPAIR_UNKNOWNS
            .iter()
            .zip(vals)
            .map(|(n, v)| (atoms::parameter(n), v.clone()))
            .collect();
        for (i, s) in [&mut t.u, &mut t.v, &mut t.p].into_iter().enumerate() {
            let one = s.coeff(1).add(&lin(i)).substitute_ids(&map)?;
            *s = EpsSeries::new(vec![s.coeff(0).clone(), one]);
        }
        Ok(t)
    };
    let trial = trial_of(&d)?;
    let ids: Vec<_> = REPAIR_UNKNOWNS.iter().map(|n| atoms::parameter(n)).collect();
    let mut rows: Vec<(Vec<NormalForm>, NormalForm)> = Vec::new();
    for (_, r) in full_residual(&trial)? {
        for group in coefficient_groups(r.coeff(1)) {
            let a: Vec<NormalForm> = ids.iter().map(|id| NormalForm::from_poly(group.partial(*id))).collect();
            let zero_map: HashMap<_, _> = ids.iter().map(|id| (*id, NormalForm::zero())).collect();
            let b = NormalForm::from_poly(group).substitute_ids(&zero_map)?;
            rows.push((a, b));
        }
    }
    match solve_affine(rows, ids.len()) {
        Some(sol) => {
            let mut fixed = trial_of(&sol)?;
            fixed.repaired = true;
            out.corrections = REPAIR_UNKNOWNS
                .iter()
                .zip(&sol)
                .filter(|(_, v)| !v.is_zero())
                .map(|(n, v)| (n.to_string(), v.clone()))
                .collect();
            if check_full_residual(&fixed)?.passed() {
                out.repaired = Some(fixed);
            } else {
                out.reason = Some("solved constants leave a residual".into());
            }
        }
        None => out.reason = Some("no constant or linear-in-omega correction cancels the residual".into()),
    }
    Ok(out)
}

/// Numerator coefficients grouped by monomials in the non-parameter atoms.
fn coefficient_groups(e: &NormalForm) -> Vec<Poly> {
    let mut groups: BTreeMap<_, Poly> = BTreeMap::new();
    let is_param = |a| matches!(atoms::kind(a), atoms::AtomKind::Parameter);
    for (m, c) in &e.num.terms {
        let (sel, rest) = m.split(|a| !is_param(a));
        groups.entry(sel).or_default().add_term(rest, c.clone());
    }
    groups.into_values().filter(|p| !p.is_zero()).collect()
}

/// Gauss-Jordan elimination for `A d + b = 0`; free unknowns are set to zero.
fn solve_affine(mut rows: Vec<(Vec<NormalForm>, NormalForm)>, n: usize) -> Option<Vec<NormalForm>> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i].0[col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r].0[col].inv().ok()?;
        let (a, b) = &mut rows[r];
        for v in a.iter_mut() {
            *v = v.mul(&inv);
        }
        *b = b.mul(&inv);
        let (pa, pb) = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row.0[col].is_zero() {
                continue;
            }
            let f = row.0[col].clone();
            for (v, pv) in row.0.iter_mut().zip(&pa) {
                *v = v.sub(&f.mul(pv));
            }
            row.1 = row.1.sub(&f.mul(&pb));
        }
        pivots.push(col);
        r += 1;
    }
    if rows[r..].iter().any(|(_, b)| !b.is_zero()) {
        return None;
    }
    let mut sol = vec![NormalForm::zero(); n];
    for (i, col) in pivots.into_iter().enumerate() {
        sol[col] = rows[i].1.neg();
    }
    Some(sol)
}

/// All reports for one family: the full residual, a repair attempt when it
/// fails, then surface, reduced-system and boundary checks on whichever
/// form passed.
pub fn verify_family(fam: &SolutionFamily) -> Result<(Vec<VerificationReport>, Option<Repair>), ModelError> {
    let mut reports = vec![check_full_residual(fam)?];
    let mut repair = None;
    let mut subject = fam.clone();
    if !reports[0].passed() {
        let rp = repair_family(fam)?;
        let mut rep = VerificationReport::new(&format!("{} (repaired)", fam.id), "full residual");
        match &rp.repaired {
            Some(fixed) => {
                for (n, v) in &rp.corrections {
                    rep.note(format!("{n} = {v}"));
                }
                subject = fixed.clone();
            }
            None => rep.fail(rp.reason.clone().unwrap_or_default()),
        }
        reports.push(rep);
        repair = Some(rp);
    }
    let g = matched_generator(&subject)?;
    reports.push(check_surface_conditions(&subject, &g)?);
    if subject.id == FamilyId::BvpMud {
        let mut data = BoundaryData::symbolic();
        for v in [&mut data.u_shear, &mut data.v_suction, &mut data.p_far] {
            *v = subject.params.bind(v)?;
        }
        reports.push(check_bvp(&subject, &data)?);
    } else {
        match check_reduced_system(&subject) {
            Ok(r) => reports.push(r),
            Err(e @ ModelError::ExtractionFailure { .. }) => {
                let mut r = VerificationReport::new(&family_label(&subject), "reduced system");
                r.fail(e.to_string());
                reports.push(r);
            }
            Err(e) => return Err(e),
        }
    }
    Ok((reports, repair))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(id: FamilyId) -> SolutionFamily {
        solution_family(id, &FamilyParams::symbolic()).unwrap()
    }

    fn nf(s: &str) -> NormalForm {
        NormalForm::parse(s).unwrap()
    }

    #[test]
    fn family_names() {
        assert_eq!("trasl_ii".parse::<FamilyId>().unwrap(), FamilyId::TraslII);
        assert_eq!("BVP-MUD".parse::<FamilyId>().unwrap(), FamilyId::BvpMud);
        assert!("scale_ii".parse::<FamilyId>().is_err());
        assert_eq!(FamilyId::ScaleI.to_string(), "SCALE_I");
    }

    #[test]
    fn stagnation_reduction_of_scale_family() {
        let mut p = FamilyParams::symbolic();
        for n in FamilyId::ScaleI.free_set() {
            if n != "c2" && n != "Re" {
                p.set(&n, NormalForm::zero());
            }
        }
        let f = solution_family(FamilyId::ScaleI, &p).unwrap();
        assert_eq!(f.u.to_normal(), nf("c2*x"));
        assert_eq!(f.v.to_normal(), nf("-c2*y"));
        assert!(f.p.to_normal().is_zero());
    }

    #[test]
    fn translation_zeroth_order() {
        let f = sym(FamilyId::TraslI);
        let want = nf("k2*Re/(2*(k1^2+1)^2)*(y-k1*x)^2 + c1*(y-k1*x) + c2");
        assert!(f.u.coeff(0).sub(&want).is_zero());
    }

    #[test]
    fn boundary_family_is_a_scale_specialization() {
        let bvp = sym(FamilyId::BvpMud);
        let scale = solution_family(FamilyId::ScaleI, &bvp_parameter_map()).unwrap();
        for ((n, a), (_, b)) in scale.components().into_iter().zip(bvp.components()) {
            assert!(a.sub(b).unwrap().is_zero(), "{n}");
        }
        let mut num = FamilyParams::numeric_defaults();
        num.remove("k2");
        let f = solution_family(FamilyId::BvpMud, &num).unwrap();
        assert_eq!(f.u.coeff(0), &nf("y"));
        assert_eq!(f.v.coeff(0), &nf("-x/2"));
        assert_eq!(f.p.coeff(0), &nf("1/4"));
    }

    #[test]
    fn displayed_generators_are_combinations() {
        let params = ModelParams::symbolic();
        let given = GivenFunctions::symbolic();
        let gens = model::symmetry_generators(&given, &params);
        let g = |i: usize| gens[i - 1].1.clone();
        let (k1, k2, k3, k4) = (kappa(1), kappa(2), kappa(3), kappa(4));
        let a = g(3).scale(&k1).add(&g(6).scale(&k2)).unwrap().add(&g(7).scale(&k3)).unwrap();
        let a = a.add(&g(8)).unwrap().add(&g(9)).unwrap();
        assert_eq!(xi_a([&k1, &k2, &k3], &given, &params), a);
        let b = g(1).add(&g(2).scale(&k1)).unwrap().add(&g(3).scale(&k2)).unwrap();
        let b = b.add(&g(4).scale(&k3)).unwrap().add(&g(5).scale(&k4)).unwrap().add(&g(9)).unwrap();
        assert_eq!(xi_b([&k1, &k2, &k3, &k4], &given, &params), b);
        let z = NormalForm::zero();
        assert_eq!(xi_a([&z, &z, &z], &GivenFunctions::zero(), &params), g(8));
        assert_eq!(xi_b([&z, &z, &z, &z], &GivenFunctions::zero(), &params), g(1));
        assert_eq!(xi_a([&k1, &k2, &k3], &given, &params).xi()[0].coeff(1), &nf("k3*x"));
    }

    #[test]
    fn translation_family_passes_surface_conditions() {
        let f = sym(FamilyId::TraslI);
        let g = matched_generator(&f).unwrap();
        assert!(check_surface_conditions(&f, &g).unwrap().passed());
        let wrong = matched_generator(&sym(FamilyId::ScaleI)).unwrap();
        let rep = check_surface_conditions(&f, &wrong).unwrap();
        assert!(!rep.passed());
        assert!(!rep.residuals.is_empty());
    }

    #[test]
    fn boundary_conditions() {
        let f = sym(FamilyId::BvpMud);
        let rep = check_bvp(&f, &BoundaryData::symbolic()).unwrap();
        assert!(rep.passed(), "{rep}");
        assert!(rep.details.contains("u(x,0) eps^1 = 0"));
        let off = BoundaryData::numeric(Q::from_integer(2.into()), Q::from_integer(0.into()), Q::from_integer(0.into()));
        assert!(!check_bvp(&f, &off).unwrap().passed());
        assert!(!check_bvp(&sym(FamilyId::ScaleI), &BoundaryData::symbolic()).unwrap().passed());
    }

    #[test]
    fn every_family_verifies_or_is_repaired() {
        for id in FamilyId::ALL {
            let (reports, repair) = verify_family(&sym(id)).unwrap();
            let failed: Vec<_> = reports.iter().filter(|r| !r.passed()).collect();
            match id {
                FamilyId::TraslI => {
                    assert_eq!(failed.len(), 1, "{id}");
                    assert_eq!(failed[0].check, "full residual");
                    let rp = repair.unwrap();
                    assert_eq!(rp.corrections.len(), 1);
                    assert_eq!(rp.corrections[0].0, "dp1");
                    let want = nf("-k2*(k1^2*k4^2 + k1^2*k4 + 2*k1*k3*k4 + 2*k1*k3 - k4)/(k1^2 + 1)^2");
                    assert!(rp.corrections[0].1.sub(&want).is_zero());
                }
                _ => {
                    assert!(failed.is_empty(), "{id}: {:?}", failed);
                    assert!(repair.is_none());
                }
            }
        }
    }

    #[test]
    fn scale_profiles() {
        let p = extract_profiles(&sym(FamilyId::ScaleI)).unwrap();
        assert!(p.get("U0").unwrap().sub(&nf("k1*Re/2*w*arctan(w) + c2 + c1*w")).is_zero());
        assert!(p.get("P0").unwrap().sub(&nf("k1/2*log(w^2 + 1) + c4")).is_zero());
        assert!(extract_profiles(&sym(FamilyId::BvpMud)).is_err());
    }

    #[test]
    fn affine_solver() {
        let rows = vec![
            (vec![nf("1"), nf("1")], nf("-3")),
            (vec![nf("1"), nf("-1")], nf("-1")),
            (vec![nf("2"), nf("0")], nf("-4")),
        ];
        assert_eq!(solve_affine(rows, 2).unwrap(), vec![nf("2"), nf("1")]);
        let bad = vec![(vec![nf("1")], nf("1")), (vec![nf("2")], nf("1"))];
        assert!(solve_affine(bad, 1).is_none());
        let free = vec![(vec![nf("k"), nf("0")], nf("k"))];
        assert_eq!(solve_affine(free, 2).unwrap(), vec![nf("-1"), nf("0")]);
    }
}

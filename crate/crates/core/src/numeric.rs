//! Floating-point evaluation, a central-difference oracle for symbolic
//! derivatives, and residual sweeps in the small parameter.
//!
//! Evaluation runs in `f64` or in a 106-bit binary float ([`Extended`]).
//! Terms are visited in canonical print order so results do not depend on
//! atom interning order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use dashu_float::ops::Abs;
use dashu_float::FBig;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::catalog::{FamilyId, SingularLocus, SolutionFamily};
use crate::error::NumericError;
use crate::expr::{atoms, normal, AtomId, DerivativeSymbol, NormalForm, TransFn, Q};
use crate::invariance::PdeSystem;
use crate::model;
use crate::report::VerificationReport;

const TINY: f64 = 1e-300;

/// Arithmetic the evaluator needs.
pub trait Real: Clone + Send + Sync + fmt::Debug {
    /// Unit roundoff of the representation.
    const EPSILON: f64;

    fn from_f64(v: f64) -> Self;
    fn from_q(q: &Q) -> Result<Self, NumericError>;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn abs(&self) -> Self;
    fn apply(&self, f: TransFn) -> Self;

    fn powi(&self, k: u32) -> Self {
        let mut acc = Self::from_f64(1.0);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }
}

impl Real for f64 {
    const EPSILON: f64 = f64::EPSILON;

    fn from_f64(v: f64) -> Self {
        v
    }

    fn from_q(q: &Q) -> Result<Self, NumericError> {
        q.to_f64().ok_or_else(|| NumericError::Invalid(format!("constant {q} overflows")))
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn add(&self, o: &Self) -> Self {
        self + o
    }

    fn sub(&self, o: &Self) -> Self {
        self - o
    }

    fn mul(&self, o: &Self) -> Self {
        self * o
    }

    fn div(&self, o: &Self) -> Self {
        self / o
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn apply(&self, f: TransFn) -> Self {
        match f {
            TransFn::Sin => self.sin(),
            TransFn::Cos => self.cos(),
            TransFn::Exp => self.exp(),
            TransFn::Log => self.ln(),
            TransFn::Arctan => self.atan(),
        }
    }
}

/// Binary float with a 106-bit significand, the precision of a
/// double-double pair, correctly rounded.
#[derive(Clone, Debug)]
pub struct Extended(FBig);

pub const EXTENDED_BITS: usize = 106;

impl Extended {
    fn new(v: FBig) -> Extended {
        Extended(v.with_precision(EXTENDED_BITS).value())
    }
}

impl Real for Extended {
    const EPSILON: f64 = 2.465190328815662e-32;

    fn from_f64(v: f64) -> Self {
        Extended::new(FBig::try_from(v).expect("finite value"))
    }

    fn from_q(q: &Q) -> Result<Self, NumericError> {
        let big = |b: &num_bigint::BigInt| {
            b.to_i128()
                .map(FBig::from)
                .ok_or_else(|| NumericError::Invalid(format!("constant {q} overflows")))
        };
        let n = Extended::new(big(q.numer())?);
        let d = Extended::new(big(q.denom())?);
        Ok(n.div(&d))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    fn add(&self, o: &Self) -> Self {
        Extended::new(&self.0 + &o.0)
    }

    fn sub(&self, o: &Self) -> Self {
        Extended::new(&self.0 - &o.0)
    }

    fn mul(&self, o: &Self) -> Self {
        Extended::new(&self.0 * &o.0)
    }

    fn div(&self, o: &Self) -> Self {
        Extended::new(&self.0 / &o.0)
    }

    fn abs(&self) -> Self {
        Extended(self.0.clone().abs())
    }

    fn apply(&self, f: TransFn) -> Self {
        Extended::new(match f {
            TransFn::Sin => self.0.sin(),
            TransFn::Cos => self.0.cos(),
            TransFn::Exp => self.0.exp(),
            TransFn::Log => self.0.ln(),
            TransFn::Arctan => self.0.atan(),
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

impl Precision {
    pub fn epsilon(self) -> f64 {
        match self {
            Precision::Double => f64::EPSILON,
            Precision::Extended => Extended::EPSILON,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::Double => "double",
            Precision::Extended => "extended",
        })
    }
}

pub type Bindings = HashMap<String, f64>;

#[derive(Clone, Debug)]
enum Slot {
    Input(String),
    Trans(TransFn, Box<Compiled>),
}

#[derive(Clone, Debug)]
struct Term {
    coeff: Q,
    factors: Vec<(usize, i32)>,
}

/// A form flattened for repeated evaluation.
#[derive(Clone, Debug)]
pub struct Compiled {
    slots: Vec<Slot>,
    num: Vec<Term>,
    den: Vec<(Vec<Term>, u32)>,
    text: String,
}

fn atom_name(id: AtomId) -> String {
    match atoms::as_derivative(id) {
        Some(d) => d.name(),
        None => atoms::name_of(id).map(|n| n.to_string()).unwrap_or_default(),
    }
}

impl Compiled {
    pub fn new(e: &NormalForm) -> Compiled {
        let mut ids: Vec<AtomId> = e.atoms().into_iter().collect();
        ids.sort_by(|a, b| atoms::compare(*a, *b));
        let pos: HashMap<AtomId, usize> = ids.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let slots = ids
            .iter()
            .map(|&a| match atoms::trans_parts(a) {
                Some((f, arg)) => Slot::Trans(f, Box::new(Compiled::new(&arg))),
                None => Slot::Input(atom_name(a)),
            })
            .collect();
        let terms = |p: &crate::expr::Poly| {
            let mut ms: Vec<_> = p.terms.iter().collect();
            ms.sort_by(|a, b| normal::structural_cmp(a.0, b.0).then(Ordering::Equal));
            ms.into_iter()
                .map(|(m, c)| Term {
                    coeff: c.clone(),
                    factors: m.0.iter().map(|(a, k)| (pos[a], *k)).collect(),
                })
                .collect::<Vec<_>>()
        };
        Compiled {
            num: terms(&e.num),
            den: e.den.iter().map(|(f, k)| (terms(f), *k)).collect(),
            slots,
            text: e.to_string(),
        }
    }

    /// Names of the inputs this form reads, transcendental arguments
    /// included.
    pub fn inputs(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.slots {
            match s {
                Slot::Input(n) => out.push(n.clone()),
                Slot::Trans(_, c) => out.extend(c.inputs()),
            }
        }
        out.sort();
        out.dedup();
        out
    }

    fn singular(&self) -> NumericError {
        NumericError::NumericSingularity(self.text.clone())
    }

    fn slot_values<R: Real>(&self, b: &dyn Fn(&str) -> Option<R>) -> Result<Vec<R>, NumericError> {
        self.slots
            .iter()
            .map(|s| match s {
                Slot::Input(n) => b(n).ok_or_else(|| NumericError::MissingBinding(n.clone())),
                Slot::Trans(f, arg) => {
                    let v = arg.eval_with(b)?;
                    let x = v.to_f64();
                    match f {
                        TransFn::Log if x <= 0.0 => Err(NumericError::NumericSingularity(format!("log({})", arg.text))),
                        _ => Ok(v.apply(*f)),
                    }
                }
            })
            .collect()
    }

    fn term_values<R: Real>(&self, terms: &[Term], vals: &[R]) -> Result<Vec<R>, NumericError> {
        terms
            .iter()
            .map(|t| {
                let mut acc = R::from_q(&t.coeff)?;
                for (i, k) in &t.factors {
                    let v = &vals[*i];
                    if *k < 0 {
                        if v.to_f64().abs() < TINY {
                            return Err(self.singular());
                        }
                        acc = acc.div(&v.powi(k.unsigned_abs()));
                    } else {
                        acc = acc.mul(&v.powi(*k as u32));
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    fn den_value<R: Real>(&self, vals: &[R]) -> Result<R, NumericError> {
        let mut d = R::from_f64(1.0);
        for (f, k) in &self.den {
            let s = sum(self.term_values(f, vals)?);
            d = d.mul(&s.powi(*k));
        }
        if d.to_f64().abs() < TINY {
            return Err(self.singular());
        }
        Ok(d)
    }

    pub fn eval_with<R: Real>(&self, b: &dyn Fn(&str) -> Option<R>) -> Result<R, NumericError> {
        let vals = self.slot_values(b)?;
        let n = sum(self.term_values(&self.num, &vals)?);
        Ok(n.div(&self.den_value(&vals)?))
    }

    /// Value together with the sum of absolute numerator term values over
    /// the absolute denominator.
    pub fn eval_with_scale<R: Real>(&self, b: &dyn Fn(&str) -> Option<R>) -> Result<(R, R), NumericError> {
        let vals = self.slot_values(b)?;
        let terms = self.term_values(&self.num, &vals)?;
        let scale = sum(terms.iter().map(|t| t.abs()).collect());
        let d = self.den_value(&vals)?;
        Ok((sum(terms).div(&d), scale.div(&d.abs())))
    }

    pub fn eval(&self, b: &Bindings) -> Result<f64, NumericError> {
        self.eval_with(&|n: &str| b.get(n).copied())
    }
}

fn sum<R: Real>(terms: Vec<R>) -> R {
    terms.iter().fold(R::from_f64(0.0), |a, t| a.add(t))
}

/// Evaluate a form in double precision.
pub fn eval(e: &NormalForm, bindings: &Bindings) -> Result<f64, NumericError> {
    Compiled::new(e).eval(bindings)
}

/// Relative error between a central difference of `e` along `var` and the
/// symbolic derivative, both at `point`.
pub fn fd_check(e: &NormalForm, var: &str, point: &Bindings, h: f64) -> Result<f64, NumericError> {
    let f = Compiled::new(e);
    let df = Compiled::new(&e.diff(var));
    let x0 = *point.get(var).ok_or_else(|| NumericError::MissingBinding(var.to_string()))?;
    let at = |x: f64| {
        let mut p = point.clone();
        p.insert(var.to_string(), x);
        f.eval(&p)
    };
    let fd = (at(x0 + h)? - at(x0 - h)?) / (2.0 * h);
    let exact = df.eval(point)?;
    Ok((fd - exact).abs() / exact.abs().max(1.0))
}

/// Uniform samples from a box in the plane.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplePlan {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub count: usize,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 42;
pub const LOCUS_MARGIN: f64 = 1e-3;

impl SamplePlan {
    /// `[0.5, 2.5] x [-1, 1]` for families with a singular locus,
    /// `[-2, 2]^2` otherwise, 64 points.
    pub fn default_for(id: FamilyId) -> SamplePlan {
        let (x, y) = if id.is_translation() {
            ([-2.0, 2.0], [-2.0, 2.0])
        } else {
            ([0.5, 2.5], [-1.0, 1.0])
        };
        SamplePlan {
            x,
            y,
            count: 64,
            seed: DEFAULT_SEED,
        }
    }

    /// Smallest distance from the box to the excluded set.
    pub fn clearance(&self, locus: &SingularLocus) -> f64 {
        let mut d = f64::INFINITY;
        if locus.nonpositive_x {
            d = d.min(self.x[0]);
        }
        if locus.origin {
            let near = |r: [f64; 2]| if r[0] > 0.0 { r[0] } else if r[1] < 0.0 { -r[1] } else { 0.0 };
            d = d.min(near(self.x).hypot(near(self.y)));
        }
        d
    }

    pub fn validate(&self, locus: &SingularLocus) -> Result<(), NumericError> {
        if !(self.x[0] < self.x[1] && self.y[0] < self.y[1]) || self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(NumericError::Invalid(format!("empty or non-finite box {:?} x {:?}", self.x, self.y)));
        }
        if self.count == 0 {
            return Err(NumericError::Invalid("sample count is zero".into()));
        }
        let c = self.clearance(locus);
        if c < LOCUS_MARGIN {
            let how = if c <= 0.0 {
                "overlaps".to_string()
            } else {
                format!("comes within {c:.3e} of")
            };
            return Err(NumericError::SingularRegion(format!(
                "box {:?} x {:?} {how} the excluded set ({}); keep a margin of {LOCUS_MARGIN:e}",
                self.x,
                self.y,
                locus.describe()
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| {
                let x = rng.random_range(self.x[0]..=self.x[1]);
                let y = rng.random_range(self.y[0]..=self.y[1]);
                (x, y)
            })
            .collect()
    }
}

fn require_numeric(fam: &SolutionFamily) -> Result<(), NumericError> {
    for (_, s) in fam.components() {
        for c in s.coeffs() {
            if let Some(p) = c.parameters().into_iter().next() {
                return Err(NumericError::MissingBinding(p));
            }
        }
    }
    Ok(())
}

/// Closed-form jets of a family, keyed by expansion-symbol name such as
/// `u1_xy`.
struct FamilyJets {
    jets: BTreeMap<String, Compiled>,
}

impl FamilyJets {
    fn new(fam: &SolutionFamily, wanted: &[DerivativeSymbol]) -> FamilyJets {
        let mut jets = BTreeMap::new();
        for d in wanted {
            let f = &d.function;
            let series = match f.base() {
                "u" => &fam.u,
                "v" => &fam.v,
                "p" => &fam.p,
                _ => continue,
            };
            let orders: Vec<u32> = match f.order() {
                Some(k) => vec![k],
                None => (0..=series.order() as u32).collect(),
            };
            for k in orders {
                let mut e = series.coeff(k as usize).clone();
                for (slot, n) in d.index.iter().enumerate() {
                    let var = f.args()[slot].label();
                    for _ in 0..*n {
                        e = e.diff(&var);
                    }
                }
                let name = DerivativeSymbol::new(f.at_order(k), d.index.clone()).name();
                jets.entry(name).or_insert_with(|| Compiled::new(&e));
            }
        }
        FamilyJets { jets }
    }

    fn eval<R: Real>(&self, x: &R, y: &R) -> Result<HashMap<String, R>, NumericError> {
        let b = |n: &str| match n {
            "x" => Some(x.clone()),
            "y" => Some(y.clone()),
            _ => None,
        };
        self.jets.iter().map(|(n, c)| Ok((n.clone(), c.eval_with(&b)?))).collect()
    }
}

fn system_for(fam: &SolutionFamily, sys: &PdeSystem) -> Result<Vec<Compiled>, NumericError> {
    let re = fam.params.model()?.re;
    sys.equations()
        .iter()
        .map(|e| Ok(Compiled::new(&e.substitute_param("Re", &re)?)))
        .collect()
}

/// Max residual per equation and overall at each `eps`, with the
/// least-squares slope of `log max` against `log eps`.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub family: String,
    pub precision: Precision,
    pub points: usize,
    pub eps: Vec<f64>,
    pub residual: Vec<[f64; 3]>,
    pub max: Vec<f64>,
    pub slope: Option<f64>,
    /// Every residual is below `1e-12`.
    pub exact: bool,
}

pub const EXACT_FLOOR: f64 = 1e-12;

impl SweepResult {
    pub fn slope_label(&self) -> String {
        match (self.exact, self.slope) {
            (true, _) => "EXACT".into(),
            (false, Some(s)) => format!("{s:.4}"),
            (false, None) => "UNDETERMINED".into(),
        }
    }

    /// Whether the slope lies in `[lo, hi]`; an exact sweep always does.
    pub fn within(&self, band: (f64, f64)) -> bool {
        self.exact || self.slope.is_some_and(|s| s >= band.0 && s <= band.1)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "family": self.family,
            "precision": self.precision.to_string(),
            "points": self.points,
            "eps": self.eps,
            "residual": self.residual,
            "max": self.max,
            "slope": self.slope,
            "exact": self.exact,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,residual_eq1,residual_eq2,residual_eq3,max\n");
        for ((e, r), m) in self.eps.iter().zip(&self.residual).zip(&self.max) {
            out.push_str(&format!("{e:e},{:.9e},{:.9e},{:.9e},{m:.9e}\n", r[0], r[1], r[2]));
        }
        out
    }
}

impl fmt::Display for SweepResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({}, {} points): slope {}", self.family, self.precision, self.points, self.slope_label())?;
        for (e, m) in self.eps.iter().zip(&self.max) {
            writeln!(f, "  eps {e:e}: max residual {m:.3e}")?;
        }
        Ok(())
    }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Residuals of the full system at `u = u0 + eps u1` (and likewise `v`,
/// `p`) over the sample plan, for each `eps`.
pub fn eps_sweep(
    fam: &SolutionFamily,
    sys: &PdeSystem,
    eps_list: &[f64],
    plan: &SamplePlan,
    precision: Precision,
) -> Result<SweepResult, NumericError> {
    if eps_list.is_empty() {
        return Err(NumericError::Invalid("empty eps list".into()));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) || eps_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(NumericError::Invalid(format!("eps list must descend within (0, 1): {eps_list:?}")));
    }
    require_numeric(fam)?;
    plan.validate(&fam.singular)?;
    let eqs = system_for(fam, sys)?;
    let wanted: Vec<DerivativeSymbol> = sys.equations().iter().flat_map(|e| e.derivative_symbols()).collect();
    let jets = FamilyJets::new(fam, &wanted);
    let dep_jets: Vec<(String, String, String)> = wanted
        .iter()
        .map(|d| {
            let name = d.name();
            let k0 = DerivativeSymbol::new(d.function.at_order(0), d.index.clone()).name();
            let k1 = DerivativeSymbol::new(d.function.at_order(1), d.index.clone()).name();
            (name, k0, k1)
        })
        .collect();
    let points = plan.points();
    let per_point: Vec<Vec<[f64; 3]>> = points
        .par_iter()
        .map(|&(x, y)| match precision {
            Precision::Double => sweep_point::<f64>(x, y, eps_list, &jets, &dep_jets, &eqs),
            Precision::Extended => sweep_point::<Extended>(x, y, eps_list, &jets, &dep_jets, &eqs),
        })
        .collect::<Result<_, _>>()?;
    let mut residual = vec![[0.0f64; 3]; eps_list.len()];
    for pt in &per_point {
        for (i, r) in pt.iter().enumerate() {
            for q in 0..3 {
                residual[i][q] = residual[i][q].max(r[q]);
            }
        }
    }
    let max: Vec<f64> = residual.iter().map(|r| r.iter().cloned().fold(0.0, f64::max)).collect();
    let exact = max.iter().all(|m| *m < EXACT_FLOOR);
    let floor = 100.0 * precision.epsilon();
    let (xs, ys): (Vec<f64>, Vec<f64>) = eps_list
        .iter()
        .zip(&max)
        .filter(|(_, m)| **m > floor)
        .map(|(e, m)| (e.ln(), m.ln()))
        .unzip();
    Ok(SweepResult {
        family: fam.id.to_string(),
        precision,
        points: points.len(),
        eps: eps_list.to_vec(),
        residual,
        max,
        slope: if exact { None } else { least_squares_slope(&xs, &ys) },
        exact,
    })
}

fn sweep_point<R: Real>(
    x: f64,
    y: f64,
    eps_list: &[f64],
    jets: &FamilyJets,
    dep_jets: &[(String, String, String)],
    eqs: &[Compiled],
) -> Result<Vec<[f64; 3]>, NumericError> {
    let (xr, yr) = (R::from_f64(x), R::from_f64(y));
    let vals = jets.eval(&xr, &yr)?;
    let zero = R::from_f64(0.0);
    eps_list
        .iter()
        .map(|&e| {
            let er = R::from_f64(e);
            let mut b: HashMap<String, R> = HashMap::new();
            for (name, k0, k1) in dep_jets {
                let v0 = vals.get(k0).unwrap_or(&zero);
                let v1 = vals.get(k1).unwrap_or(&zero);
                b.insert(name.clone(), v0.add(&er.mul(v1)));
            }
            b.insert("x".into(), xr.clone());
            b.insert("y".into(), yr.clone());
            b.insert(crate::series::EPS.into(), er);
            let mut out = [0.0; 3];
            for (q, eq) in eqs.iter().enumerate().take(3) {
                out[q] = eq.eval_with(&|n: &str| b.get(n).cloned())?.to_f64().abs();
            }
            Ok(out)
        })
        .collect()
}

pub const MAGNITUDE_TOL: f64 = 1e-9;

/// Evaluate each `eps^k` coefficient of the expanded system term by term
/// on the family and compare the sum with the sum of absolute terms.
pub fn magnitude_check(fam: &SolutionFamily, plan: &SamplePlan) -> Result<VerificationReport, NumericError> {
    require_numeric(fam)?;
    plan.validate(&fam.singular)?;
    let sys = model::creeping_system(&fam.params.model()?);
    let order = fam.u.order();
    let coeffs: Vec<(String, Compiled, NormalForm)> = sys
        .labels()
        .iter()
        .zip(sys.expanded(order)?)
        .flat_map(|(l, s)| {
            s.coeffs()
                .iter()
                .enumerate()
                .map(|(k, c)| (format!("{l} eps^{k}"), Compiled::new(c), c.clone()))
                .collect::<Vec<_>>()
        })
        .collect();
    let wanted: Vec<DerivativeSymbol> = coeffs.iter().flat_map(|(_, _, c)| c.derivative_symbols()).collect();
    let jets = FamilyJets::new(fam, &wanted);
    let ratios: Vec<f64> = plan
        .points()
        .par_iter()
        .map(|&(x, y)| -> Result<f64, NumericError> {
            let mut b = jets.eval(&x, &y)?;
            b.insert("x".into(), x);
            b.insert("y".into(), y);
            let mut worst: f64 = 0.0;
            for (_, c, _) in &coeffs {
                let (v, s) = c.eval_with_scale(&|n: &str| b.get(n).copied())?;
                worst = worst.max(v.abs() / s.max(TINY));
            }
            Ok(worst)
        })
        .collect::<Result<_, _>>()?;
    let mut rep = VerificationReport::new(&fam.id.to_string(), "numeric magnitude");
    rep.numeric(ratios.iter().cloned().fold(0.0, f64::max), MAGNITUDE_TOL);
    Ok(rep)
}

pub const FD_TOL: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-5;

/// Central differences against every symbolic jet the system uses, one
/// derivative order at a time.
pub fn fd_family(fam: &SolutionFamily, plan: &SamplePlan, h: f64) -> Result<VerificationReport, NumericError> {
    require_numeric(fam)?;
    let shrunk = SamplePlan {
        x: [plan.x[0] + h, plan.x[1] - h],
        y: [plan.y[0] + h, plan.y[1] - h],
        ..plan.clone()
    };
    shrunk.validate(&fam.singular)?;
    let sys = model::creeping_system(&fam.params.model()?);
    let mut pairs: Vec<(NormalForm, String, NormalForm)> = Vec::new();
    for d in sys.equations().iter().flat_map(|e| e.derivative_symbols()) {
        let series = match d.function.base() {
            "u" => &fam.u,
            "v" => &fam.v,
            "p" => &fam.p,
            _ => continue,
        };
        for c in series.coeffs() {
            let mut e = c.clone();
            for (slot, n) in d.index.iter().enumerate() {
                let var = d.function.args()[slot].label();
                for _ in 0..*n {
                    pairs.push((e.clone(), var.clone(), e.diff(&var)));
                    e = e.diff(&var);
                }
            }
        }
    }
    pairs.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    let errs: Vec<f64> = shrunk
        .points()
        .par_iter()
        .map(|&(x, y)| -> Result<f64, NumericError> {
            let pt: Bindings = [("x".to_string(), x), ("y".to_string(), y)].into();
            let mut worst: f64 = 0.0;
            for (e, var, _) in &pairs {
                worst = worst.max(fd_check(e, var, &pt, h)?);
            }
            Ok(worst)
        })
        .collect::<Result<_, _>>()?;
    let mut rep = VerificationReport::new(&fam.id.to_string(), "finite differences");
    rep.numeric(errs.iter().cloned().fold(0.0, f64::max), FD_TOL);
    rep.note(format!("{} derivative pairs", pairs.len()));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, FamilyParams};

    fn nf(s: &str) -> NormalForm {
        NormalForm::parse(s).unwrap()
    }

    fn b(pairs: &[(&str, f64)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(eval(&nf("x^2 + y"), &b(&[("x", 2.0), ("y", 1.0)])).unwrap(), 5.0);
        assert_eq!(eval(&nf("arctan(y/x)"), &b(&[("x", 1.0), ("y", 1.0)])).unwrap(), 0.7853981633974483);
        assert!(matches!(
            eval(&nf("1/x"), &b(&[("x", 0.0)])),
            Err(NumericError::NumericSingularity(_))
        ));
        assert!(matches!(eval(&nf("x + k"), &b(&[("x", 1.0)])), Err(NumericError::MissingBinding(n)) if n == "k"));
    }

    #[test]
    fn extended_precision() {
        let ext = |text: &str, x: f64| -> f64 {
            let c = Compiled::new(&nf(text));
            let v: Extended = c.eval_with(&|_: &str| Some(Extended::from_f64(x))).unwrap();
            v.to_f64()
        };
        assert!(ext("sin(x)^2 + cos(x)^2 - 1", 0.7).abs() < 1e-30);
        assert!(ext("exp(log(x)) - x", 3.0).abs() < 1e-30);
        assert!((ext("arctan(x)", 1.0) - std::f64::consts::FRAC_PI_4).abs() < 1e-16);
        let third = Extended::from_q(&Q::new(1.into(), 3.into())).unwrap();
        assert!(third.mul(&Extended::from_f64(3.0)).sub(&Extended::from_f64(1.0)).to_f64().abs() < 1e-31);
        let d: f64 = Compiled::new(&nf("1/3")).eval(&Bindings::new()).unwrap();
        assert!((d * 3.0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn finite_difference_oracle() {
        let pt = b(&[("x", 2.0)]);
        assert!(fd_check(&nf("x^3"), "x", &pt, 1e-5).unwrap() < 1e-9);
        assert_eq!(fd_check(&nf("7"), "x", &pt, 1e-5).unwrap(), 0.0);
        let fam = catalog::solution_family(FamilyId::ScaleI, &FamilyParams::numeric_defaults()).unwrap();
        let u = fam.u.to_normal().substitute_param("eps", &nf("1/10")).unwrap();
        let pt = b(&[("x", 1.3), ("y", 0.7)]);
        assert!(fd_check(&u, "x", &pt, 1e-5).unwrap() < 1e-6);
        assert!(fd_check(&u, "y", &pt, 1e-5).unwrap() < 1e-6);
    }

    #[test]
    fn sample_plan_respects_locus() {
        let plan = SamplePlan::default_for(FamilyId::ScaleI);
        let locus = SingularLocus {
            nonpositive_x: true,
            origin: true,
        };
        plan.validate(&locus).unwrap();
        assert!(plan.points().iter().all(|(x, y)| locus.clearance(*x, *y) >= LOCUS_MARGIN));
        assert_eq!(plan.points(), plan.points());
        let bad = SamplePlan {
            x: [-1.0, 1.0],
            ..plan
        };
        assert!(matches!(bad.validate(&locus), Err(NumericError::SingularRegion(_))));
        assert!(bad.validate(&SingularLocus::NONE).is_ok());
    }

    #[test]
    fn slope_fit() {
        let xs: Vec<f64> = [1e-1f64, 1e-2, 1e-3].iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = [1e-1f64, 1e-2, 1e-3].iter().map(|e| (3.0 * e * e).ln()).collect();
        assert!((least_squares_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(least_squares_slope(&xs[..1], &ys[..1]).is_none());
    }

    fn sweep(fam: &SolutionFamily, precision: Precision) -> SweepResult {
        let sys = model::creeping_system(&fam.params.model().unwrap());
        let plan = SamplePlan::default_for(fam.id);
        eps_sweep(fam, &sys, &[1e-1, 1e-2, 1e-3, 1e-4], &plan, precision).unwrap()
    }

    fn effective(id: FamilyId) -> SolutionFamily {
        let fam = catalog::solution_family(id, &FamilyParams::numeric_defaults()).unwrap();
        catalog::repair_family(&fam).unwrap().repaired.unwrap_or(fam)
    }

    #[test]
    fn sweep_slopes() {
        for id in FamilyId::ALL {
            let fam = effective(id);
            let full = sweep(&fam, Precision::Double);
            if id == FamilyId::BvpMud {
                assert!(full.slope.unwrap() >= 1.95, "{full}");
                let tail = full.max[1..].iter().zip(&full.eps[1..]).map(|(m, e)| m / (e * e));
                assert!(tail.clone().fold(0.0, f64::max) < 1.15 * tail.fold(f64::INFINITY, f64::min));
            } else {
                assert!(full.within((1.95, 2.05)), "{full}");
            }
            let cut = sweep(&fam.truncated(), Precision::Double);
            if id == FamilyId::BvpMud {
                assert!(cut.exact, "{cut}");
            } else {
                assert!(cut.within((0.95, 1.05)), "{cut}");
            }
        }
    }

    #[test]
    fn stagnation_flow_is_exact() {
        let mut fam = effective(FamilyId::BvpMud).truncated();
        fam.u = fam.u.with_order(1);
        let r = sweep(&fam, Precision::Extended);
        assert!(r.exact && r.slope_label() == "EXACT");
        assert!(r.to_csv().starts_with("eps,residual_eq1,residual_eq2,residual_eq3,max\n1e-1,"));
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let fam = effective(FamilyId::TraslI);
        let sys = model::creeping_system(&fam.params.model().unwrap());
        let plan = SamplePlan::default_for(fam.id);
        for eps in [&[][..], &[1e-2, 1e-1][..], &[1.5][..]] {
            assert!(matches!(
                eps_sweep(&fam, &sys, eps, &plan, Precision::Double),
                Err(NumericError::Invalid(_))
            ));
        }
        let symbolic = catalog::solution_family(FamilyId::TraslI, &FamilyParams::symbolic()).unwrap();
        assert!(matches!(
            eps_sweep(&symbolic, &sys, &[0.1], &plan, Precision::Double),
            Err(NumericError::MissingBinding(_))
        ));
    }

    #[test]
    fn family_jets_and_magnitudes() {
        for id in FamilyId::ALL {
            let fam = effective(id);
            let plan = SamplePlan {
                count: 20,
                ..SamplePlan::default_for(id)
            };
            let fd = fd_family(&fam, &plan, FD_STEP).unwrap();
            assert!(fd.passed(), "{fd}");
            let mag = magnitude_check(&fam, &plan).unwrap();
            assert!(mag.passed(), "{mag}");
        }
    }
}

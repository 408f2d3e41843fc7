//! Truncated power series in the small parameter, the expansion of
//! dependent variables, and the recursion operator generating higher-order
//! pieces of infinitesimals.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::One;

use crate::error::SeriesError;
use crate::expr::atoms::{self, AtomKind};
use crate::expr::{normal, AtomId, DerivativeSymbol, FnArg, FunctionSymbol, Monomial, NormalForm, Poly, Q};
use crate::invariance::PdeSystem;

/// Name of the small-parameter atom.
pub const EPS: &str = "eps";

/// `c_0 + c_1 eps + ... + c_p eps^p`; products drop everything above `p`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct EpsSeries {
    coeffs: Vec<NormalForm>,
}

impl EpsSeries {
    pub fn new(coeffs: Vec<NormalForm>) -> Self {
        assert!(!coeffs.is_empty(), "a series has at least one coefficient");
        EpsSeries { coeffs }
    }

    pub fn zero(p: usize) -> Self {
        EpsSeries::new(vec![NormalForm::zero(); p + 1])
    }

    pub fn constant(c: NormalForm, p: usize) -> Self {
        let mut s = EpsSeries::zero(p);
        s.coeffs[0] = c;
        s
    }

    /// `c * eps^k`, or zero when `k > p`.
    pub fn monomial(c: NormalForm, k: usize, p: usize) -> Self {
        let mut s = EpsSeries::zero(p);
        if k <= p {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &NormalForm {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[NormalForm] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<NormalForm> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(NormalForm::is_zero)
    }

    fn check(&self, other: &EpsSeries) -> Result<(), SeriesError> {
        if self.order() == other.order() {
            Ok(())
        } else {
            Err(SeriesError::OrderMismatch(self.order(), other.order()))
        }
    }

    pub fn add(&self, other: &EpsSeries) -> Result<EpsSeries, SeriesError> {
        self.check(other)?;
        Ok(EpsSeries::new(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.add(b)).collect(),
        ))
    }

    pub fn sub(&self, other: &EpsSeries) -> Result<EpsSeries, SeriesError> {
        self.check(other)?;
        Ok(EpsSeries::new(
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.sub(b)).collect(),
        ))
    }

    pub fn mul(&self, other: &EpsSeries) -> Result<EpsSeries, SeriesError> {
        self.check(other)?;
        let p = self.order();
        let mut out = EpsSeries::zero(p);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs[..=p - i].iter().enumerate() {
                if !b.is_zero() {
                    out.coeffs[i + j] = out.coeffs[i + j].add(&a.mul(b));
                }
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> EpsSeries {
        self.map(NormalForm::neg)
    }

    pub fn scale(&self, c: &NormalForm) -> EpsSeries {
        self.map(|a| a.mul(c))
    }

    /// Multiply by `eps^k` and truncate.
    pub fn shift(&self, k: usize) -> EpsSeries {
        let p = self.order();
        let mut out = EpsSeries::zero(p);
        for i in 0..=p {
            if i + k <= p {
                out.coeffs[i + k] = self.coeffs[i].clone();
            }
        }
        out
    }

    /// Same coefficients, truncated or zero-padded to order `p`.
    pub fn with_order(&self, p: usize) -> EpsSeries {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(p + 1, NormalForm::zero());
        EpsSeries::new(coeffs)
    }

    pub fn map(&self, f: impl Fn(&NormalForm) -> NormalForm) -> EpsSeries {
        EpsSeries::new(self.coeffs.iter().map(f).collect())
    }

    pub fn try_map<E>(&self, f: impl Fn(&NormalForm) -> Result<NormalForm, E>) -> Result<EpsSeries, E> {
        Ok(EpsSeries::new(self.coeffs.iter().map(f).collect::<Result<_, _>>()?))
    }

    pub fn inv(&self) -> Result<EpsSeries, SeriesError> {
        let a0 = &self.coeffs[0];
        if a0.is_zero() {
            return Err(SeriesError::NotInvertible);
        }
        let inv0 = a0.inv()?;
        let p = self.order();
        let mut b = vec![inv0.clone()];
        for k in 1..=p {
            let mut acc = NormalForm::zero();
            for i in 1..=k {
                acc = acc.add(&self.coeffs[i].mul(&b[k - i]));
            }
            b.push(acc.mul(&inv0).neg());
        }
        Ok(EpsSeries::new(b))
    }

    pub fn pow(&self, k: i32) -> Result<EpsSeries, SeriesError> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut out = EpsSeries::constant(NormalForm::one(), self.order());
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base)?;
        }
        Ok(out)
    }

    /// `sum c_k eps^k` as a single form.
    pub fn to_normal(&self) -> NormalForm {
        let eps = NormalForm::param(EPS);
        let mut acc = NormalForm::zero();
        let mut pw = NormalForm::one();
        for c in &self.coeffs {
            acc = acc.add(&c.mul(&pw));
            pw = pw.mul(&eps);
        }
        acc
    }

    /// Expand a form containing `eps` to order `p`.
    pub fn from_normal(nf: &NormalForm, p: usize) -> Result<EpsSeries, SeriesError> {
        let mut map = HashMap::new();
        map.insert(atoms::parameter(EPS), EpsSeries::monomial(NormalForm::one(), 1, p));
        series_eval(nf, &map, p)
    }

    /// Substitute `eps = 0` everywhere; the result is the zeroth coefficient.
    pub fn leading(nf: &NormalForm) -> Result<NormalForm, SeriesError> {
        Ok(EpsSeries::from_normal(nf, 0)?.coeffs.swap_remove(0))
    }
}

impl fmt::Display for EpsSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if wrote {
                f.write_str(" + ")?;
            }
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{EPS}*({c})")?,
                _ => write!(f, "{EPS}^{k}*({c})")?,
            }
            wrote = true;
        }
        if !wrote {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Evaluate a form with some atoms replaced by series.
pub(crate) fn series_eval(
    nf: &NormalForm,
    map: &HashMap<AtomId, EpsSeries>,
    p: usize,
) -> Result<EpsSeries, SeriesError> {
    let mut ev = SeriesEval {
        map,
        p,
        trans: HashMap::new(),
    };
    ev.eval(nf)
}

struct SeriesEval<'a> {
    map: &'a HashMap<AtomId, EpsSeries>,
    p: usize,
    trans: HashMap<AtomId, Option<EpsSeries>>,
}

impl SeriesEval<'_> {
    fn eval(&mut self, nf: &NormalForm) -> Result<EpsSeries, SeriesError> {
        let mut out = self.poly(&nf.num)?;
        for (f, e) in &nf.den {
            let fs = self.poly(f)?;
            out = out.mul(&fs.pow(-(*e as i32))?)?;
        }
        Ok(out)
    }

    fn atom(&mut self, a: AtomId) -> Result<Option<EpsSeries>, SeriesError> {
        if let Some(s) = self.map.get(&a) {
            return Ok(Some(s.clone()));
        }
        if !matches!(atoms::kind(a), AtomKind::Trans(_)) {
            return Ok(None);
        }
        if let Some(s) = self.trans.get(&a) {
            return Ok(s.clone());
        }
        let (f, arg) = atoms::trans_parts(a).expect("transcendental atom");
        let touched = arg.deep_atoms().iter().any(|b| self.map.contains_key(b));
        let out = if touched {
            let s = self.eval(&arg)?;
            Some(taylor(f, &s)?)
        } else {
            None
        };
        self.trans.insert(a, out.clone());
        Ok(out)
    }

    fn poly(&mut self, poly: &Poly) -> Result<EpsSeries, SeriesError> {
        let p = self.p;
        let mut groups: BTreeMap<Monomial, Poly> = BTreeMap::new();
        let mut hit: HashMap<AtomId, EpsSeries> = HashMap::new();
        for a in poly.atoms() {
            if let Some(s) = self.atom(a)? {
                hit.insert(a, s);
            }
        }
        for (m, c) in &poly.terms {
            let (sel, rest) = m.split(|a| hit.contains_key(&a));
            groups.entry(sel).or_default().add_term(rest, c.clone());
        }
        let mut powers: HashMap<(AtomId, i32), EpsSeries> = HashMap::new();
        let mut out = EpsSeries::zero(p);
        for (sel, rest) in groups {
            let mut term = EpsSeries::constant(NormalForm::from_poly(rest), p);
            for &(a, e) in sel.0.iter() {
                let pw = match powers.get(&(a, e)) {
                    Some(s) => s.clone(),
                    None => {
                        let s = hit[&a].pow(e)?;
                        powers.insert((a, e), s.clone());
                        s
                    }
                };
                term = term.mul(&pw)?;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }
}

/// `f(a_0 + d)` to order `p` via `sum f^(k)(a_0) d^k / k!`.
fn taylor(f: crate::expr::TransFn, s: &EpsSeries) -> Result<EpsSeries, SeriesError> {
    let p = s.order();
    let a0 = s.coeff(0).clone();
    let mut d = s.clone();
    d.coeffs[0] = NormalForm::zero();
    let t = atoms::parameter("_t");
    let mut g = normal::apply(f, NormalForm::atom(t))?;
    let mut out = EpsSeries::zero(p);
    let mut dk = EpsSeries::constant(NormalForm::one(), p);
    let mut fact = Q::one();
    let mut at = HashMap::new();
    at.insert(t, a0);
    for k in 0..=p {
        if k > 0 {
            g = g.partial_id(t);
            dk = dk.mul(&d)?;
            fact *= Q::from_integer(k.into());
        }
        if dk.is_zero() {
            break;
        }
        let gk = g.substitute_ids(&at)?.scale(&fact.recip());
        out = out.add(&dk.scale(&gk))?;
    }
    Ok(out)
}

fn dependent_of<'a>(sys: &'a PdeSystem, f: &FunctionSymbol) -> Option<&'a FunctionSymbol> {
    sys.dependents().iter().find(|d| *d == f)
}

/// Replace every dependent variable and each of its derivative symbols by
/// `sum_k eps^k u_(k)` and expand to order `p`.
pub fn expand_dependent(e: &NormalForm, sys: &PdeSystem, p: usize) -> Result<EpsSeries, SeriesError> {
    let mut map = HashMap::new();
    map.insert(atoms::parameter(EPS), EpsSeries::monomial(NormalForm::one(), 1, p));
    for a in e.deep_atoms() {
        let Some(d) = atoms::as_derivative(a) else {
            continue;
        };
        if d.function.order().is_some() {
            continue;
        }
        if dependent_of(sys, &d.function).is_none() {
            if sys.given().contains(&d.function) {
                continue;
            }
            return Err(SeriesError::UnknownDependent(d.function.name()));
        }
        let coeffs = (0..=p)
            .map(|k| NormalForm::deriv(&DerivativeSymbol::new(d.function.at_order(k as u32), d.index.clone())))
            .collect();
        map.insert(a, EpsSeries::new(coeffs));
    }
    series_eval(e, &map, p)
}

/// The recursion operator: a derivation with `R[u_(k)] = (k+1) u_(k+1)` on
/// expansion symbols and `R[F_(k)] = F_(k+1) + sum_i dF_(k)/du_(0)i u_(1)i`
/// on order-tagged coefficient functions of `(x, u_(0))`.
pub fn recursion_r(f: &NormalForm, max_order: usize) -> Result<NormalForm, SeriesError> {
    let overflow = RefCell::new(None);
    let rule = |a: AtomId| -> Option<NormalForm> {
        let d = atoms::as_derivative(a)?;
        let k = d.function.order()? as usize;
        if k + 1 > max_order {
            overflow.borrow_mut().get_or_insert(SeriesError::OrderOverflow {
                next: k + 1,
                max: max_order,
            });
            return None;
        }
        let next = DerivativeSymbol::new(d.function.at_order(k as u32 + 1), d.index.clone());
        let deps: Vec<(usize, &FunctionSymbol)> = d
            .function
            .args()
            .iter()
            .enumerate()
            .filter_map(|(s, arg)| match arg {
                FnArg::Dep(g) => Some((s, g)),
                FnArg::Var(_) => None,
            })
            .collect();
        if deps.is_empty() {
            return Some(NormalForm::deriv(&next).scale(&Q::from_integer((k + 1).into())));
        }
        let mut acc = NormalForm::deriv(&next);
        for (slot, g) in deps {
            let u1 = g.unexpanded().at_order(1).value();
            acc = acc.add(&NormalForm::deriv(&d.bumped(slot)).mul(&NormalForm::deriv(&u1)));
        }
        Some(acc)
    };
    let out = f.derive(&rule);
    match overflow.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Coefficient function `F_(k)(x, u_(0))` used to run the recursion
/// operator abstractly.
pub fn coefficient_function(base: &str, k: u32, independents: &[&str], dependents: &[FunctionSymbol]) -> FunctionSymbol {
    let mut args: Vec<FnArg> = independents.iter().map(|v| FnArg::Var((*v).into())).collect();
    args.extend(dependents.iter().map(|d| FnArg::Dep(d.unexpanded().at_order(0))));
    FunctionSymbol::with_args(base, Some(k), args)
}

/// Expanded coefficients `xi~_(0..=p)` of an infinitesimal given per order
/// as closed forms in `(x, u)`, computed with `xi~_(k+1) = R[xi~_(k)]/(k+1)`.
pub fn tilde_coefficients(
    per_order: &[NormalForm],
    independents: &[&str],
    dependents: &[FunctionSymbol],
    p: usize,
) -> Result<Vec<NormalForm>, SeriesError> {
    let funcs: Vec<(FunctionSymbol, NormalForm)> = (0..=p)
        .map(|k| {
            let f = coefficient_function("_F", k as u32, independents, dependents);
            let closed = per_order.get(k).cloned().unwrap_or_default();
            Ok((f, to_order_zero(&closed, dependents)?))
        })
        .collect::<Result<_, SeriesError>>()?;
    let mut cur = NormalForm::deriv(&funcs[0].0.value());
    let mut out = Vec::with_capacity(p + 1);
    for k in 0..=p {
        out.push(cur.instantiate(&funcs)?);
        if k < p {
            cur = recursion_r(&cur, p)?.scale(&Q::from_integer((k + 1).into()).recip());
        }
    }
    Ok(out)
}

/// Rename the unexpanded dependents of a form to their order-0 symbols.
pub fn to_order_zero(e: &NormalForm, dependents: &[FunctionSymbol]) -> Result<NormalForm, SeriesError> {
    let mut map = HashMap::new();
    for a in e.deep_atoms() {
        let Some(d) = atoms::as_derivative(a) else {
            continue;
        };
        if d.function.order().is_none() && dependents.contains(&d.function) {
            let z = DerivativeSymbol::new(d.function.at_order(0), d.index.clone());
            map.insert(a, NormalForm::deriv(&z));
        }
    }
    Ok(e.substitute_ids(&map)?)
}

pub fn series_add(a: &EpsSeries, b: &EpsSeries) -> Result<EpsSeries, SeriesError> {
    a.add(b)
}

pub fn series_mul(a: &EpsSeries, b: &EpsSeries) -> Result<EpsSeries, SeriesError> {
    a.mul(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;

    fn nf(s: &str) -> NormalForm {
        NormalForm::parse(s).unwrap()
    }

    fn series(s: &[&str]) -> EpsSeries {
        EpsSeries::new(s.iter().map(|c| nf(c)).collect())
    }

    #[test]
    fn truncated_products() {
        let a = series(&["1", "x"]);
        let b = series(&["1", "-x"]);
        assert_eq!(a.mul(&b).unwrap(), series(&["1", "0"]));
        assert!(a.mul(&EpsSeries::zero(1)).unwrap().is_zero());
        let u = series(&["u0", "u1"]);
        let v = series(&["v0", "v1"]);
        assert_eq!(u.mul(&v).unwrap(), series(&["u0*v0", "u0*v1 + u1*v0"]));
        assert!(matches!(a.mul(&EpsSeries::zero(2)), Err(SeriesError::OrderMismatch(1, 2))));
    }

    #[test]
    fn inversion_and_from_normal() {
        let s = EpsSeries::from_normal(&nf("1/(1 - eps*x)"), 2).unwrap();
        assert_eq!(s, series(&["1", "x", "x^2"]));
        let s = EpsSeries::from_normal(&nf("exp(x + eps*y)"), 1).unwrap();
        assert_eq!(s, series(&["exp(x)", "y*exp(x)"]));
        let s = EpsSeries::from_normal(&nf("log(1 + eps*x)"), 2).unwrap();
        assert_eq!(s, series(&["0", "x", "-1/2*x^2"]));
        assert!(matches!(
            EpsSeries::from_normal(&nf("1/eps"), 1),
            Err(SeriesError::NotInvertible)
        ));
    }

    #[test]
    fn dependent_expansion() {
        let sys = model::creeping_system(&model::ModelParams::symbolic());
        let s = expand_dependent(&nf("u"), &sys, 1).unwrap();
        assert_eq!(s, series(&["u0", "u1"]));
        let s = expand_dependent(&nf("u*u_x"), &sys, 1).unwrap();
        assert_eq!(s, series(&["u0*u0_x", "u0*u1_x + u1*u0_x"]));
        let e = nf("u*v_xx + eps*p_y^2");
        let s = expand_dependent(&e, &sys, 0).unwrap();
        assert_eq!(s.coeff(0), &nf("u0*v0_xx"));
        let q = NormalForm::deriv(&FunctionSymbol::new("q", &["x"]).value());
        assert!(matches!(
            expand_dependent(&q, &sys, 1),
            Err(SeriesError::UnknownDependent(_))
        ));
    }

    #[test]
    fn recursion_operator() {
        assert_eq!(recursion_r(&nf("u0"), 2).unwrap(), nf("u1"));
        assert_eq!(recursion_r(&nf("u1"), 2).unwrap(), nf("2*u2"));
        assert!(matches!(
            recursion_r(&nf("u1"), 1),
            Err(SeriesError::OrderOverflow { next: 2, max: 1 })
        ));
        assert_eq!(recursion_r(&nf("x*u0_x + Re"), 1).unwrap(), nf("x*u1_x"));
    }

    #[test]
    fn first_tilde_coefficient() {
        let deps = model::creeping_system(&model::ModelParams::symbolic()).dependents().to_vec();
        let got = tilde_coefficients(&[nf("x*u^2"), nf("v*y")], &["x", "y"], &deps, 1).unwrap();
        assert_eq!(got[0], nf("x*u0^2"));
        assert_eq!(got[1], nf("v0*y + 2*x*u0*u1"));
    }
}

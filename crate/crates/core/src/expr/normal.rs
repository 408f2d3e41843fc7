//! Canonical rational normal form.
//!
//! The numerator is a Laurent polynomial, so monomial denominators become
//! negative exponents. The denominator is a sorted product of powers of
//! primitive, monic, non-monomial polynomials. Transcendental atoms are
//! canonicalized on construction and products are rewritten so that at most
//! one `exp` atom appears per monomial and `sin` appears at most linearly.

use std::cmp::Ordering;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use super::atoms::{self, AtomId, AtomInfo, AtomKey, AtomKind};
use super::poly::{Monomial, Poly, Q};
use super::symbol::TransFn;
use super::Expr;
use crate::error::KernelError;

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct NormalForm {
    pub(crate) num: Poly,
    pub(crate) den: Vec<(Poly, u32)>,
}

type SortedMono = Vec<(Arc<AtomInfo>, i32)>;

fn sorted_mono(m: &Monomial) -> SortedMono {
    let mut v: SortedMono = m.0.iter().map(|&(a, e)| (atoms::info(a), e)).collect();
    v.sort_by(|a, b| a.0.sort.cmp(&b.0.sort));
    v
}

fn sorted_cmp(a: &SortedMono, b: &SortedMono) -> Ordering {
    let da: i32 = a.iter().map(|x| x.1).sum();
    let db: i32 = b.iter().map(|x| x.1).sum();
    if da != db {
        return da.cmp(&db);
    }
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(x), None) => return x.1.cmp(&0),
            (None, Some(y)) => return 0.cmp(&y.1),
            (Some(x), Some(y)) => match x.0.sort.cmp(&y.0.sort) {
                Ordering::Less => return x.1.cmp(&0),
                Ordering::Greater => return 0.cmp(&y.1),
                Ordering::Equal => {
                    if x.1 != y.1 {
                        return x.1.cmp(&y.1);
                    }
                    i += 1;
                    j += 1;
                }
            },
        }
    }
}

/// Terms of `p` in structural graded-lex order, leading term first.
pub(crate) fn ordered_terms(p: &Poly) -> Vec<(Monomial, Q)> {
    let mut keyed: Vec<(SortedMono, Monomial, Q)> = p
        .terms
        .iter()
        .map(|(m, c)| (sorted_mono(m), m.clone(), c.clone()))
        .collect();
    keyed.sort_by(|a, b| sorted_cmp(&b.0, &a.0));
    keyed.into_iter().map(|(_, m, c)| (m, c)).collect()
}

pub(crate) fn structural_cmp(a: &Monomial, b: &Monomial) -> Ordering {
    sorted_cmp(&sorted_mono(a), &sorted_mono(b))
}

fn leading_monomial(p: &Poly) -> Option<Monomial> {
    p.terms
        .keys()
        .map(|m| (sorted_mono(m), m))
        .max_by(|a, b| sorted_cmp(&a.0, &b.0))
        .map(|(_, m)| m.clone())
}

/// Split `p` as `c * m * g` with `g` primitive, monic and free of monomial
/// content; `g` is one when `p` has a single term.
pub(crate) fn make_factor(p: &Poly) -> (Q, Monomial, Poly) {
    let m = p.monomial_content();
    let g = p.div_monomial(&m);
    let mut c = g.content();
    let mut g = g.scale(&c.recip());
    if g.len() <= 1 {
        let lead = g.terms.values().next().cloned().unwrap_or_else(Q::one);
        return (c * lead, m, Poly::one());
    }
    let lead = leading_monomial(&g).expect("nonempty");
    let lc = g.terms[&lead].clone();
    if !lc.is_one() {
        g = g.scale(&lc.recip());
        c *= lc;
    }
    (c, m, g)
}

fn needs_rewrite(m: &Monomial) -> bool {
    let mut exps = 0;
    for &(a, e) in m.0.iter() {
        match atoms::kind(a) {
            AtomKind::Trans(TransFn::Exp) => {
                exps += 1;
                if e != 1 || exps > 1 {
                    return true;
                }
            }
            AtomKind::Trans(TransFn::Sin) if e >= 2 => return true,
            _ => {}
        }
    }
    false
}

fn rewrite_term(m: &Monomial, c: &Q) -> Poly {
    let mut rest = Monomial::one();
    let mut exp_arg = NormalForm::zero();
    let mut result = Poly::one();
    for &(a, e) in m.0.iter() {
        match atoms::kind(a) {
            AtomKind::Trans(TransFn::Exp) => {
                let (_, arg) = atoms::trans_parts(a).expect("exp atom");
                exp_arg = exp_arg.add(&arg.scale(&Q::from_integer(e.into())));
            }
            AtomKind::Trans(TransFn::Sin) if e >= 2 => {
                let (_, arg) = atoms::trans_parts(a).expect("sin atom");
                let cos = atoms::intern(AtomKey::Trans(TransFn::Cos, arg));
                let mut base = Poly::one();
                base.add_term(Monomial::var(cos, 2), -Q::one());
                result = result.mul(&base.pow((e / 2) as u32));
                if e % 2 == 1 {
                    rest = rest.mul(&Monomial::var(a, 1));
                }
            }
            _ => rest = rest.mul(&Monomial::var(a, e)),
        }
    }
    if !exp_arg.is_zero() {
        let id = atoms::intern(AtomKey::Trans(TransFn::Exp, exp_arg));
        rest = rest.mul(&Monomial::var(id, 1));
    }
    result.mul_term(&rest, c)
}

fn rewrite(num: Poly) -> Poly {
    if !num.terms.keys().any(needs_rewrite) {
        return num;
    }
    let mut out = Poly::zero();
    for (m, c) in num.terms {
        if needs_rewrite(&m) {
            out = out.add(&rewrite_term(&m, &c));
        } else {
            out.add_term(m, c);
        }
    }
    out
}

fn merge_dens(
    a: &[(Poly, u32)],
    b: &[(Poly, u32)],
    combine: impl Fn(u32, u32) -> u32,
) -> Vec<(Poly, u32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push((a[i].0.clone(), combine(a[i].1, 0)));
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0.clone(), combine(0, b[j].1)));
            j += 1;
        } else {
            out.push((a[i].0.clone(), combine(a[i].1, b[j].1)));
            i += 1;
            j += 1;
        }
    }
    out
}

fn cofactor(den: &[(Poly, u32)], target: &[(Poly, u32)]) -> Poly {
    let mut acc = Poly::one();
    for (f, e) in target {
        let have = den.iter().find(|(g, _)| g == f).map(|x| x.1).unwrap_or(0);
        if *e > have {
            acc = acc.mul(&f.pow(e - have));
        }
    }
    acc
}

impl NormalForm {
    pub(crate) fn new(num: Poly, den: Vec<(Poly, u32)>) -> NormalForm {
        let num = rewrite(num);
        let mut nf = NormalForm { num, den };
        nf.reduce();
        nf
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        for (f, e) in self.den.iter_mut() {
            while *e > 0 {
                match self.num.div_exact(f) {
                    Some(q) => {
                        self.num = rewrite(q);
                        *e -= 1;
                    }
                    None => break,
                }
            }
        }
        self.den.retain(|(_, e)| *e > 0);
    }

    pub fn zero() -> NormalForm {
        NormalForm::default()
    }

    pub fn one() -> NormalForm {
        NormalForm::constant(Q::one())
    }

    pub fn constant(q: Q) -> NormalForm {
        NormalForm {
            num: Poly::constant(q),
            den: Vec::new(),
        }
    }

    pub fn integer(n: i64) -> NormalForm {
        NormalForm::constant(Q::from_integer(n.into()))
    }

    pub(crate) fn atom(id: AtomId) -> NormalForm {
        NormalForm {
            num: Poly::term(Monomial::var(id, 1), Q::one()),
            den: Vec::new(),
        }
    }

    pub(crate) fn from_poly(p: Poly) -> NormalForm {
        NormalForm::new(p, Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_empty() && self.num.as_constant().is_some_and(|c| c.is_one())
    }

    pub fn as_constant(&self) -> Option<Q> {
        if self.den.is_empty() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn num_terms(&self) -> usize {
        self.num.len()
    }

    pub(crate) fn atoms(&self) -> std::collections::BTreeSet<AtomId> {
        let mut s = self.num.atoms();
        for (f, _) in &self.den {
            s.extend(f.atoms());
        }
        s
    }

    /// All atoms reachable from this form, including inside transcendental
    /// arguments.
    pub(crate) fn deep_atoms(&self) -> std::collections::BTreeSet<AtomId> {
        let mut out = std::collections::BTreeSet::new();
        let mut stack: Vec<AtomId> = self.atoms().into_iter().collect();
        while let Some(a) = stack.pop() {
            if out.insert(a) {
                if let Some((_, arg)) = atoms::trans_parts(a) {
                    stack.extend(arg.atoms());
                }
            }
        }
        out
    }

    pub fn add(&self, other: &NormalForm) -> NormalForm {
        if other.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return other.clone();
        }
        if self.den == other.den {
            let mut nf = NormalForm {
                num: self.num.add(&other.num),
                den: self.den.clone(),
            };
            nf.reduce();
            return nf;
        }
        let den = merge_dens(&self.den, &other.den, u32::max);
        let a = self.num.mul(&cofactor(&self.den, &den));
        let b = other.num.mul(&cofactor(&other.den, &den));
        let mut nf = NormalForm {
            num: rewrite(a.add(&b)),
            den,
        };
        nf.reduce();
        nf
    }

    pub fn sub(&self, other: &NormalForm) -> NormalForm {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> NormalForm {
        NormalForm {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn scale(&self, q: &Q) -> NormalForm {
        if q.is_zero() {
            return NormalForm::zero();
        }
        NormalForm {
            num: self.num.scale(q),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &NormalForm) -> NormalForm {
        if self.is_zero() || other.is_zero() {
            return NormalForm::zero();
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        let den = merge_dens(&self.den, &other.den, |a, b| a + b);
        NormalForm::new(self.num.mul(&other.num), den)
    }

    pub fn inv(&self) -> Result<NormalForm, KernelError> {
        if self.is_zero() {
            return Err(KernelError::DivisionByZero);
        }
        let (c, m, g) = make_factor(&self.num);
        let mut num = Poly::term(m.pow(-1), c.recip());
        for (f, e) in &self.den {
            num = num.mul(&f.pow(*e));
        }
        let den = if g.len() > 1 { vec![(g, 1)] } else { Vec::new() };
        Ok(NormalForm::new(num, den))
    }

    pub fn div(&self, other: &NormalForm) -> Result<NormalForm, KernelError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, k: i32) -> Result<NormalForm, KernelError> {
        if k < 0 {
            return self.inv()?.pow(-k);
        }
        if k == 0 {
            return Ok(NormalForm::one());
        }
        if self.den.is_empty() && self.num.len() == 1 {
            let (m, c) = self.num.terms.iter().next().expect("one term");
            let mut q = Q::one();
            for _ in 0..k {
                q *= c;
            }
            return Ok(NormalForm::new(Poly::term(m.pow(k), q), Vec::new()));
        }
        let mut result = NormalForm::one();
        let mut base = self.clone();
        let mut k = k as u32;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        Ok(result)
    }

    pub fn to_expr(&self) -> Expr {
        let num = poly_expr(&self.num);
        if self.den.is_empty() {
            return num;
        }
        let mut factors = vec![num];
        for (f, e) in &self.den {
            factors.push(Expr::pow(poly_expr(f), -(*e as i32)));
        }
        Expr::product(factors)
    }

    /// Leading coefficient sign of the numerator under the structural order.
    pub(crate) fn leading_negative(&self) -> bool {
        match leading_monomial(&self.num) {
            Some(m) => self.num.is_negative_lead(&m),
            None => false,
        }
    }
}

pub(crate) fn atom_expr(id: AtomId) -> Expr {
    use super::Atom;
    match &atoms::info(id).key {
        AtomKey::Independent(n) => Expr::Atom(Atom::Independent(n.clone())),
        AtomKey::Parameter(n) => Expr::Atom(Atom::Parameter(n.clone())),
        AtomKey::Derivative(d) => Expr::Atom(Atom::Derivative(d.clone())),
        AtomKey::Trans(f, arg) => Expr::Atom(Atom::Transcendental(*f, Arc::new(arg.to_expr()))),
    }
}

pub(crate) fn monomial_expr(m: &Monomial, c: &Q) -> Expr {
    let mut ids: Vec<(AtomId, i32)> = m.0.to_vec();
    ids.sort_by(|a, b| atoms::compare(a.0, b.0));
    let mut factors = Vec::with_capacity(ids.len() + 1);
    factors.push(Expr::Rational(c.clone()));
    for (id, e) in ids {
        factors.push(Expr::pow(atom_expr(id), e));
    }
    Expr::product(factors)
}

fn poly_expr(p: &Poly) -> Expr {
    Expr::sum(
        ordered_terms(p)
            .iter()
            .map(|(m, c)| monomial_expr(m, c))
            .collect(),
    )
}

/// Apply a registered function to a canonical argument.
pub(crate) fn apply(f: TransFn, arg: NormalForm) -> Result<NormalForm, KernelError> {
    let atom = |f: TransFn, a: NormalForm| NormalForm::atom(atoms::intern(AtomKey::Trans(f, a)));
    Ok(match f {
        TransFn::Exp => {
            if arg.is_zero() {
                NormalForm::one()
            } else {
                atom(f, arg)
            }
        }
        TransFn::Sin | TransFn::Arctan => {
            if arg.is_zero() {
                NormalForm::zero()
            } else if arg.leading_negative() {
                atom(f, arg.neg()).neg()
            } else {
                atom(f, arg)
            }
        }
        TransFn::Cos => {
            if arg.is_zero() {
                NormalForm::one()
            } else if arg.leading_negative() {
                atom(f, arg.neg())
            } else {
                atom(f, arg)
            }
        }
        TransFn::Log => log_expand(arg)?,
    })
}

fn log_of_poly(p: Poly) -> NormalForm {
    NormalForm::atom(atoms::intern(AtomKey::Trans(
        TransFn::Log,
        NormalForm {
            num: p,
            den: Vec::new(),
        },
    )))
}

fn log_expand(arg: NormalForm) -> Result<NormalForm, KernelError> {
    if arg.is_zero() {
        return Err(KernelError::LogOfZero);
    }
    if arg.is_one() {
        return Ok(NormalForm::zero());
    }
    let (c, m, g) = make_factor(&arg.num);
    if c.is_negative() {
        return Ok(NormalForm::atom(atoms::intern(AtomKey::Trans(TransFn::Log, arg))));
    }
    let mut out = NormalForm::zero();
    if !c.is_one() {
        out = out.add(&log_of_poly(Poly::constant(c)));
    }
    for &(a, e) in m.0.iter() {
        let k = Q::from_integer(e.into());
        let term = match atoms::trans_parts(a) {
            Some((TransFn::Exp, inner)) => inner,
            _ => log_of_poly(Poly::term(Monomial::var(a, 1), Q::one())),
        };
        out = out.add(&term.scale(&k));
    }
    if g.len() > 1 {
        out = out.add(&log_of_poly(g));
    }
    for (f, e) in &arg.den {
        out = out.sub(&log_of_poly(f.clone()).scale(&Q::from_integer((*e).into())));
    }
    Ok(out)
}

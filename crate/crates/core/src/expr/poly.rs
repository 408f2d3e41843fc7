use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use super::atoms::AtomId;

pub type Q = BigRational;

/// Laurent monomial: sorted `(atom, exponent)` pairs with nonzero exponents.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub(crate) struct Monomial(pub(crate) SmallVec<[(AtomId, i32); 4]>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn var(id: AtomId, e: i32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(smallvec::smallvec![(id, e)])
        }
    }


    pub fn exponent(&self, id: AtomId) -> i32 {
        self.0
            .iter()
            .find(|(a, _)| *a == id)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }


    pub fn atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.0.iter().map(|(a, _)| *a)
    }

    fn merge(&self, other: &Monomial, sign: i32) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push((b[j].0, sign * b[j].1));
                j += 1;
            } else {
                let e = a[i].1 + sign * b[j].1;
                if e != 0 {
                    out.push((a[i].0, e));
                }
                i += 1;
                j += 1;
            }
        }
        Monomial(out)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        self.merge(other, 1)
    }

    pub fn div(&self, other: &Monomial) -> Monomial {
        self.merge(other, -1)
    }

    pub fn pow(&self, k: i32) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|&(a, e)| (a, e * k)).collect())
    }


    /// Split into the part over atoms selected by `pred` and the rest.
    pub fn split(&self, pred: impl Fn(AtomId) -> bool) -> (Monomial, Monomial) {
        let (a, b): (SmallVec<_>, SmallVec<_>) = self.0.iter().copied().partition(|(id, _)| pred(*id));
        (Monomial(a), Monomial(b))
    }

    pub fn is_polynomial(&self) -> bool {
        self.0.iter().all(|(_, e)| *e > 0)
    }
}

/// Pure lexicographic order with lower atom ids dominating.
fn lex_cmp(a: &Monomial, b: &Monomial) -> Ordering {
    let (a, b) = (&a.0, &b.0);
    let (mut i, mut j) = (0, 0);
    loop {
        let (ea, eb) = match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(x), None) => (x.1, 0),
            (None, Some(y)) => (0, y.1),
            (Some(x), Some(y)) => match x.0.cmp(&y.0) {
                Ordering::Less => (x.1, 0),
                Ordering::Greater => (0, y.1),
                Ordering::Equal => (x.1, y.1),
            },
        };
        let ord = ea.cmp(&eb);
        if ord != Ordering::Equal {
            return ord;
        }
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x.0 == y.0 => {
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.0 < y.0 => i += 1,
            (Some(_), None) => i += 1,
            _ => j += 1,
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
struct LexKey(Monomial);

impl Ord for LexKey {
    fn cmp(&self, other: &Self) -> Ordering {
        lex_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for LexKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse Laurent polynomial with rational coefficients.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub(crate) struct Poly {
    pub(crate) terms: BTreeMap<Monomial, Q>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Q) -> Self {
        Poly::term(Monomial::one(), c)
    }

    pub fn one() -> Self {
        Poly::constant(Q::one())
    }

    pub fn term(m: Monomial, c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let (mut big, small) = if self.len() >= other.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }


    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, q: &Q) -> Poly {
        if q.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * q)).collect(),
        }
    }

    pub fn mul_term(&self, m: &Monomial, q: &Q) -> Poly {
        if q.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(k, c)| (k.mul(m), c * q)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if other.len() == 1 {
            let (m, c) = other.terms.iter().next().expect("one term");
            return self.mul_term(m, c);
        }
        if self.len() == 1 {
            let (m, c) = self.terms.iter().next().expect("one term");
            return other.mul_term(m, c);
        }
        let mut acc: BTreeMap<Monomial, Q> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                *acc.entry(m1.mul(m2)).or_insert_with(Q::zero) += c1 * c2;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Poly { terms: acc }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn atoms(&self) -> BTreeSet<AtomId> {
        self.terms.keys().flat_map(|m| m.atoms()).collect()
    }


    /// Partial derivative with respect to one atom, all others held fixed.
    pub fn partial(&self, id: AtomId) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(id);
            if e != 0 {
                out.add_term(m.div(&Monomial::var(id, 1)), c * Q::from_integer(e.into()));
            }
        }
        out
    }

    /// Componentwise minimum exponent over all terms (absent atoms count 0).
    pub fn monomial_content(&self) -> Monomial {
        let mut mins: BTreeMap<AtomId, i32> = BTreeMap::new();
        for a in self.atoms() {
            mins.insert(a, i32::MAX);
        }
        for m in self.terms.keys() {
            for (a, v) in mins.iter_mut() {
                *v = (*v).min(m.exponent(*a));
            }
        }
        Monomial(mins.into_iter().filter(|(_, e)| *e != 0).collect())
    }

    /// Positive rational content: gcd of numerators over lcm of denominators.
    pub fn content(&self) -> Q {
        let mut num = num_bigint::BigInt::zero();
        let mut den = num_bigint::BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            Q::one()
        } else {
            Q::new(num, den)
        }
    }

    pub fn div_monomial(&self, m: &Monomial) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(k, c)| (k.div(m), c.clone())).collect(),
        }
    }

    /// Exact quotient by `f`, which must be a true polynomial without
    /// monomial content. `None` when `f` does not divide `self`.
    pub fn div_exact(&self, f: &Poly) -> Option<Poly> {
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let shift = self.monomial_content();
        let fa = f.atoms();
        let sa = self.atoms();
        if !fa.is_subset(&sa) {
            return None;
        }
        let mut rem: BTreeMap<LexKey, Q> = self
            .terms
            .iter()
            .map(|(m, c)| (LexKey(m.div(&shift)), c.clone()))
            .collect();
        let (lf, lc) = f
            .terms
            .iter()
            .max_by(|a, b| lex_cmp(a.0, b.0))
            .map(|(m, c)| (m.clone(), c.clone()))?;
        let mut quotient = Poly::zero();
        while let Some((LexKey(m), c)) = rem.pop_last() {
            let t = m.div(&lf);
            if !t.0.iter().all(|(_, e)| *e > 0) {
                return None;
            }
            let q = &c / &lc;
            for (fm, fc) in &f.terms {
                if *fm == lf {
                    continue;
                }
                let key = LexKey(fm.mul(&t));
                let delta = -(fc * &q);
                match rem.get_mut(&key) {
                    Some(v) => {
                        *v += delta;
                        if v.is_zero() {
                            rem.remove(&key);
                        }
                    }
                    None => {
                        rem.insert(key, delta);
                    }
                }
            }
            quotient.add_term(t.mul(&shift), q);
        }
        Some(quotient)
    }


    pub fn is_negative_lead(&self, lead: &Monomial) -> bool {
        self.terms.get(lead).map(|c| c.is_negative()).unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    #[test]
    fn exact_division_of_difference_of_squares() {
        let x = Monomial::var(1, 1);
        let y = Monomial::var(2, 1);
        let mut num = Poly::term(x.pow(2), q(1));
        num.add_term(y.pow(2), q(-1));
        let mut f = Poly::term(x.clone(), q(1));
        f.add_term(y.clone(), q(-1));
        let quo = num.div_exact(&f).unwrap();
        let mut expect = Poly::term(x, q(1));
        expect.add_term(y, q(1));
        assert_eq!(quo, expect);
    }

    #[test]
    fn failed_division_reports_none() {
        let x = Monomial::var(1, 1);
        let y = Monomial::var(2, 1);
        let mut num = Poly::term(x.pow(2), q(1));
        num.add_term(y.pow(2), q(1));
        let mut f = Poly::term(x, q(1));
        f.add_term(y, q(-1));
        assert!(num.div_exact(&f).is_none());
    }

    #[test]
    fn laurent_division_keeps_negative_powers() {
        let x = Monomial::var(1, 1);
        let y = Monomial::var(2, 1);
        let mut f = Poly::term(x.clone(), q(1));
        f.add_term(Monomial::one(), q(1));
        let num = f.mul(&Poly::term(y.pow(-2), q(3)));
        assert_eq!(num.div_exact(&f).unwrap(), Poly::term(y.pow(-2), q(3)));
    }

    #[test]
    fn content_and_monomial_content() {
        let x = Monomial::var(1, 1);
        let mut p = Poly::term(x.pow(2), Q::new(2.into(), 3.into()));
        p.add_term(x.pow(-1), Q::new(4.into(), 9.into()));
        assert_eq!(p.content(), Q::new(2.into(), 9.into()));
        assert_eq!(p.monomial_content(), x.pow(-1));
    }
}

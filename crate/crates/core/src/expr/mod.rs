//! Symbolic expressions over rational constants and interned atoms.
//!
//! [`Expr`] is the user-facing tree; [`NormalForm`] is the canonical
//! rational form used for arithmetic, differentiation and zero testing.

pub(crate) mod atoms;
mod calculus;
pub(crate) mod normal;
mod parse;
pub(crate) mod poly;
mod print;
mod symbol;
mod table;

use std::sync::Arc;

use num_traits::{One, Zero};

pub use calculus::{collect, diff, substitute, substitute_fixpoint, AtomRef};
pub use normal::NormalForm;
pub use parse::{parse, parse_with};
pub use poly::Q;
pub use symbol::{DerivativeSymbol, FnArg, FunctionSymbol, MultiIndex, TransFn};
pub use table::SymbolTable;

pub(crate) use atoms::AtomId;
pub(crate) use poly::{Monomial, Poly};

use crate::error::KernelError;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Atom {
    Independent(Arc<str>),
    Parameter(Arc<str>),
    Derivative(DerivativeSymbol),
    Transcendental(TransFn, Arc<Expr>),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Rational(Q),
    Atom(Atom),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Rational(Q::from_integer(n.into()))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::Rational(Q::new(n.into(), d.into()))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Atom(Atom::Independent(name.into()))
    }

    pub fn param(name: &str) -> Expr {
        Expr::Atom(Atom::Parameter(name.into()))
    }

    pub fn deriv(d: DerivativeSymbol) -> Expr {
        Expr::Atom(Atom::Derivative(d))
    }

    pub fn apply(f: TransFn, arg: Expr) -> Expr {
        Expr::Atom(Atom::Transcendental(f, Arc::new(arg)))
    }

    pub fn zero() -> Expr {
        Expr::Rational(Q::zero())
    }

    pub fn is_rational_zero(&self) -> bool {
        matches!(self, Expr::Rational(q) if q.is_zero())
    }

    /// Flattened sum; rational terms are folded into the first one.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(terms.len());
        let mut constant: Option<(usize, Q)> = None;
        let mut push = |e: Expr, flat: &mut Vec<Expr>| match e {
            Expr::Rational(q) => match &mut constant {
                Some((_, c)) => *c += q,
                None => {
                    constant = Some((flat.len(), q));
                    flat.push(Expr::zero());
                }
            },
            other => flat.push(other),
        };
        for t in terms {
            match t {
                Expr::Sum(inner) => {
                    for e in inner {
                        push(e, &mut flat);
                    }
                }
                other => push(other, &mut flat),
            }
        }
        if let Some((pos, c)) = constant {
            if c.is_zero() {
                flat.remove(pos);
            } else {
                flat[pos] = Expr::Rational(c);
            }
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().expect("one term"),
            _ => Expr::Sum(flat),
        }
    }

    /// Flattened product with a single leading rational coefficient.
    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut coeff = Q::one();
        let mut flat = Vec::with_capacity(factors.len());
        let mut push = |e: Expr, flat: &mut Vec<Expr>| match e {
            Expr::Rational(q) => coeff *= q,
            other => flat.push(other),
        };
        for f in factors {
            match f {
                Expr::Product(inner) => {
                    for e in inner {
                        push(e, &mut flat);
                    }
                }
                other => push(other, &mut flat),
            }
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        if !coeff.is_one() {
            flat.insert(0, Expr::Rational(coeff));
        }
        match flat.len() {
            0 => Expr::Rational(Q::one()),
            1 => flat.pop().expect("one factor"),
            _ => Expr::Product(flat),
        }
    }

    pub fn pow(base: Expr, k: i32) -> Expr {
        match (base, k) {
            (_, 0) => Expr::Rational(Q::one()),
            (b, 1) => b,
            (Expr::Rational(q), k) if !q.is_zero() => {
                let mut r = Q::one();
                for _ in 0..k.unsigned_abs() {
                    r *= &q;
                }
                Expr::Rational(if k < 0 { r.recip() } else { r })
            }
            (Expr::Pow(b, j), k) => Expr::pow(*b, j * k),
            (b, k) => Expr::Pow(Box::new(b), k),
        }
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::product(vec![Expr::int(-1), e])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::sum(vec![a, Expr::neg(b)])
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::product(vec![a, Expr::pow(b, -1)])
    }

    pub fn normalize(&self) -> Result<NormalForm, KernelError> {
        match self {
            Expr::Rational(q) => Ok(NormalForm::constant(q.clone())),
            Expr::Atom(a) => atom_normal(a),
            Expr::Sum(ts) => {
                let mut acc = NormalForm::zero();
                for t in ts {
                    acc = acc.add(&t.normalize()?);
                }
                Ok(acc)
            }
            Expr::Product(fs) => {
                let mut acc = NormalForm::one();
                for f in fs {
                    acc = acc.mul(&f.normalize()?);
                    if acc.is_zero() {
                        break;
                    }
                }
                Ok(acc)
            }
            Expr::Pow(b, k) => b.normalize()?.pow(*k),
        }
    }

    pub fn is_zero(&self) -> Result<bool, KernelError> {
        Ok(self.normalize()?.is_zero())
    }

    /// Visit every atom, including those inside transcendental arguments.
    pub fn visit_atoms(&self, f: &mut impl FnMut(&Atom)) {
        match self {
            Expr::Rational(_) => {}
            Expr::Atom(a) => {
                f(a);
                if let Atom::Transcendental(_, arg) = a {
                    arg.visit_atoms(f);
                }
            }
            Expr::Sum(v) | Expr::Product(v) => v.iter().for_each(|e| e.visit_atoms(f)),
            Expr::Pow(b, _) => b.visit_atoms(f),
        }
    }
}

fn atom_normal(a: &Atom) -> Result<NormalForm, KernelError> {
    Ok(match a {
        Atom::Independent(n) => NormalForm::atom(atoms::independent(n)),
        Atom::Parameter(n) => NormalForm::atom(atoms::parameter(n)),
        Atom::Derivative(d) => NormalForm::atom(atoms::derivative(d.clone())),
        Atom::Transcendental(f, arg) => normal::apply(*f, arg.normalize()?)?,
    })
}

impl NormalForm {
    pub fn var(name: &str) -> NormalForm {
        NormalForm::atom(atoms::independent(name))
    }

    pub fn param(name: &str) -> NormalForm {
        NormalForm::atom(atoms::parameter(name))
    }

    pub fn deriv(d: &DerivativeSymbol) -> NormalForm {
        NormalForm::atom(atoms::derivative(d.clone()))
    }

    pub fn apply_fn(f: TransFn, arg: &NormalForm) -> Result<NormalForm, KernelError> {
        normal::apply(f, arg.clone())
    }

    pub fn parse(text: &str) -> Result<NormalForm, KernelError> {
        parse(text)?.normalize()
    }

    pub fn parse_with(text: &str, table: &SymbolTable) -> Result<NormalForm, KernelError> {
        parse_with(text, table)?.normalize()
    }
}

impl std::fmt::Display for NormalForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

impl From<i64> for NormalForm {
    fn from(n: i64) -> Self {
        NormalForm::integer(n)
    }
}

macro_rules! nf_ops {
    ($tr:ident, $m:ident, $call:ident) => {
        impl std::ops::$tr<&NormalForm> for &NormalForm {
            type Output = NormalForm;
            fn $m(self, rhs: &NormalForm) -> NormalForm {
                NormalForm::$call(self, rhs)
            }
        }
        impl std::ops::$tr<NormalForm> for NormalForm {
            type Output = NormalForm;
            fn $m(self, rhs: NormalForm) -> NormalForm {
                NormalForm::$call(&self, &rhs)
            }
        }
        impl std::ops::$tr<&NormalForm> for NormalForm {
            type Output = NormalForm;
            fn $m(self, rhs: &NormalForm) -> NormalForm {
                NormalForm::$call(&self, rhs)
            }
        }
    };
}

nf_ops!(Add, add, add);
nf_ops!(Sub, sub, sub);
nf_ops!(Mul, mul, mul);

impl std::ops::Neg for &NormalForm {
    type Output = NormalForm;
    fn neg(self) -> NormalForm {
        NormalForm::neg(self)
    }
}

impl std::ops::Neg for NormalForm {
    type Output = NormalForm;
    fn neg(self) -> NormalForm {
        NormalForm::neg(&self)
    }
}

#[cfg(test)]
mod tests;

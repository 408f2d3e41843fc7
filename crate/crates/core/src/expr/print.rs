use std::fmt::{self, Display, Formatter, Write};

use num_traits::{One, Signed};

use super::{Atom, Expr, Q};

impl Display for Atom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Independent(n) | Atom::Parameter(n) => f.write_str(n),
            Atom::Derivative(d) => write!(f, "{d}"),
            Atom::Transcendental(func, arg) => write!(f, "{func}({arg})"),
        }
    }
}

fn write_rational(q: &Q, out: &mut String) {
    if q.is_integer() {
        write!(out, "{}", q.numer()).ok();
    } else {
        write!(out, "{}/{}", q.numer(), q.denom()).ok();
    }
}

fn is_negative_term(e: &Expr) -> bool {
    match e {
        Expr::Rational(q) => q.is_negative(),
        Expr::Product(fs) => matches!(fs.first(), Some(Expr::Rational(q)) if q.is_negative()),
        _ => false,
    }
}

fn negated(e: &Expr) -> Expr {
    match e {
        Expr::Rational(q) => Expr::Rational(-q),
        Expr::Product(fs) => {
            let mut fs = fs.clone();
            if let Some(Expr::Rational(q)) = fs.first_mut() {
                *q = -q.clone();
                if q.is_one() {
                    fs.remove(0);
                    if fs.len() == 1 {
                        return product_single(fs.pop().expect("factor"));
                    }
                }
            }
            Expr::Product(fs)
        }
        other => other.clone(),
    }
}

// A lone negative power must still print as a quotient inside a sum.
fn product_single(e: Expr) -> Expr {
    match e {
        Expr::Pow(_, k) if k < 0 => Expr::Product(vec![Expr::Rational(Q::one()), e]),
        other => other,
    }
}

fn write_base(e: &Expr, out: &mut String) {
    match e {
        Expr::Atom(_) => write_expr(e, out),
        Expr::Rational(q) if q.is_integer() && !q.is_negative() => write_expr(e, out),
        _ => {
            out.push('(');
            write_expr(e, out);
            out.push(')');
        }
    }
}

fn write_factor(e: &Expr, out: &mut String) {
    match e {
        Expr::Sum(_) | Expr::Product(_) => {
            out.push('(');
            write_expr(e, out);
            out.push(')');
        }
        Expr::Rational(q) if q.is_negative() || !q.is_integer() => {
            out.push('(');
            write_expr(e, out);
            out.push(')');
        }
        _ => write_expr(e, out),
    }
}

fn write_product(fs: &[Expr], out: &mut String) {
    let mut rest = fs;
    let mut wrote = false;
    if let Some(Expr::Rational(q)) = fs.first() {
        rest = &fs[1..];
        let next_is_div = matches!(rest.first(), Some(Expr::Pow(_, k)) if *k < 0);
        if (-q).is_one() && !next_is_div && !rest.is_empty() {
            out.push('-');
        } else {
            write_rational(q, out);
            wrote = true;
        }
    }
    for f in rest {
        match f {
            Expr::Pow(b, k) if *k < 0 => {
                if !wrote {
                    out.push('1');
                }
                out.push('/');
                write_base(b, out);
                if *k != -1 {
                    write!(out, "^{}", -k).ok();
                }
            }
            other => {
                if wrote {
                    out.push('*');
                }
                write_factor(other, out);
            }
        }
        wrote = true;
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Rational(q) => write_rational(q, out),
        Expr::Atom(a) => {
            write!(out, "{a}").ok();
        }
        Expr::Sum(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    write_expr(t, out);
                } else if is_negative_term(t) {
                    out.push_str(" - ");
                    write_expr(&negated(t), out);
                } else {
                    out.push_str(" + ");
                    write_expr(t, out);
                }
            }
        }
        Expr::Product(fs) => write_product(fs, out),
        Expr::Pow(b, k) => {
            write_base(b, out);
            write!(out, "^{k}").ok();
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(self, &mut s);
        f.write_str(&s)
    }
}

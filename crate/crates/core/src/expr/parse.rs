//! Text grammar:
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" ["-"] integer)?
//! primary := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```
//!
//! Identifiers resolve through a [`SymbolTable`]: declared independent
//! variables, declared functions and their derivative symbols (`u0_xyy` or
//! `F_{x,u0}`), registered functions when followed by `(`, and parameters
//! otherwise.

use num_bigint::BigInt;
use num_traits::Zero;

use super::table::SymbolTable;
use super::{Expr, TransFn, Q};
use crate::error::KernelError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String),
    Op(char),
    End,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(text: &str) -> Result<Lexer, KernelError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int: String = chars[start..i].iter().collect();
            let mut value = if int.is_empty() {
                Q::zero()
            } else {
                Q::from_integer(int.parse::<BigInt>().expect("digits"))
            };
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let frac: String = chars[fs..i].iter().collect();
                if !frac.is_empty() {
                    let scale = BigInt::from(10).pow(frac.len() as u32);
                    value += Q::new(frac.parse::<BigInt>().expect("digits"), scale);
                }
            }
            toks.push((Tok::Num(value), pos));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            if chars[i - 1] == '_' && chars.get(i) == Some(&'{') {
                while i < chars.len() && chars[i] != '}' {
                    i += 1;
                }
                if i == chars.len() {
                    return Err(KernelError::Syntax {
                        position: i + 1,
                        expected: "`}`".into(),
                    });
                }
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else if "+-*/^(),".contains(c) {
            toks.push((Tok::Op(c), pos));
            i += 1;
        } else {
            return Err(KernelError::Syntax {
                position: pos,
                expected: "an operand or operator".into(),
            });
        }
    }
    toks.push((Tok::End, chars.len() + 1));
    Ok(Lexer { toks })
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    table: &'a SymbolTable,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> KernelError {
        KernelError::Syntax {
            position: self.pos(),
            expected: expected.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), KernelError> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&format!("`{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr, KernelError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    terms.push(Expr::neg(self.term()?));
                }
                _ => break,
            }
        }
        Ok(Expr::sum(terms))
    }

    fn term(&mut self) -> Result<Expr, KernelError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    acc = Expr::product(vec![acc, self.unary()?]);
                }
                Tok::Op('/') => {
                    self.bump();
                    acc = Expr::product(vec![acc, Expr::pow(self.unary()?, -1)]);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr, KernelError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn exponent(&mut self) -> Result<i32, KernelError> {
        let paren = *self.peek() == Tok::Op('(');
        if paren {
            self.bump();
        }
        let neg = *self.peek() == Tok::Op('-');
        if neg {
            self.bump();
        }
        let k = match self.peek().clone() {
            Tok::Num(q) if q.is_integer() => {
                self.bump();
                i32::try_from(q.to_integer()).map_err(|_| self.err("a small integer exponent"))?
            }
            _ => return Err(self.err("an integer exponent")),
        };
        if paren {
            self.expect(')')?;
        }
        Ok(if neg { -k } else { k })
    }

    fn power(&mut self) -> Result<Expr, KernelError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let k = self.exponent()?;
            return Ok(Expr::pow(base, k));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, KernelError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(q) => Ok(Expr::Rational(q)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Op('(') {
                    let Some(f) = TransFn::from_name(&name) else {
                        return Err(KernelError::UnknownFunction {
                            name,
                            position: pos,
                        });
                    };
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::apply(f, arg));
                }
                if TransFn::from_name(&name).is_some() {
                    return Err(self.err("`(`"));
                }
                Ok(self.table.resolve(&name))
            }
            _ => Err(KernelError::Syntax {
                position: pos,
                expected: "an operand".into(),
            }),
        }
    }
}

/// Parse with the default symbol table.
pub fn parse(text: &str) -> Result<Expr, KernelError> {
    parse_with(text, SymbolTable::standard())
}

pub fn parse_with(text: &str, table: &SymbolTable) -> Result<Expr, KernelError> {
    let lexer = lex(text)?;
    let mut p = Parser {
        toks: lexer.toks,
        at: 0,
        table,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.err("an operator or end of input"));
    }
    Ok(e)
}

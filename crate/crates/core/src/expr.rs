//! Arithmetic expressions over the symbols `T`, `g` (field generator),
//! `pi` and `w` (uniformizer), evaluated into `F_q[T]` or a local ring.

use crate::apoly::{APoly, PolyRing};
use crate::error::{Error, Result};
use crate::local::{LocalElem, Localization};
use crate::ring::Ring;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sym {
    T,
    G,
    Pi,
    W,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(i64),
    Sym(Sym, usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>, usize),
    Pow(Box<Expr>, i64),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(i64),
    Sym(Sym),
    Op(char),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end: usize,
}

fn tokenize(s: &str, line: usize) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let st = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[st..i].iter().collect();
            let n = text.parse().map_err(|_| Error::parse(line, col, "integer too large"))?;
            out.push((Tok::Num(n), col));
        } else if c.is_ascii_alphabetic() {
            let st = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let word: String = chars[st..i].iter().collect();
            let sym = match word.as_str() {
                "T" => Sym::T,
                "g" => Sym::G,
                "pi" => Sym::Pi,
                "w" => Sym::W,
                _ => return Err(Error::parse(line, col, format!("unknown symbol {word:?}"))),
            };
            out.push((Tok::Sym(sym), col));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else {
            return Err(Error::parse(line, col, format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn err(&self, msg: &str) -> Error {
        Error::parse(self.line, self.col(), msg)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.peek() == Some(&Tok::Op('/')) {
                let col = self.col();
                self.pos += 1;
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?), col);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            let neg = self.eat('-');
            match self.peek() {
                Some(&Tok::Num(n)) => {
                    self.pos += 1;
                    return Ok(Expr::Pow(Box::new(base), if neg { -n } else { n }));
                }
                _ => return Err(self.err("expected integer exponent")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::Num(n))
            }
            Some(Tok::Sym(s)) => {
                self.pos += 1;
                Ok(Expr::Sym(s, col))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(_) => Err(self.err("unexpected token")),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// Parse one expression; `line` is used for error positions.
pub fn parse(s: &str, line: usize) -> Result<Expr> {
    let toks = tokenize(s, line)?;
    let mut p = Parser { toks, pos: 0, line, end: s.chars().count() + 1 };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

/// Evaluate into `F_q[T]`. Division is allowed only by nonzero constants.
pub fn eval_apoly(e: &Expr, ring: &PolyRing, line: usize) -> Result<APoly> {
    let f = ring.field();
    Ok(match e {
        Expr::Num(n) => ring.from_int(*n),
        Expr::Sym(Sym::T, _) => ring.t(),
        Expr::Sym(Sym::G, _) => APoly::constant(f.gen()),
        Expr::Sym(s, col) => {
            return Err(Error::parse(line, *col, format!("{s:?} is not an element of F_q[T]")))
        }
        Expr::Neg(a) => ring.neg(&eval_apoly(a, ring, line)?),
        Expr::Add(a, b) => ring.add(&eval_apoly(a, ring, line)?, &eval_apoly(b, ring, line)?),
        Expr::Sub(a, b) => ring.sub(&eval_apoly(a, ring, line)?, &eval_apoly(b, ring, line)?),
        Expr::Mul(a, b) => ring.mul(&eval_apoly(a, ring, line)?, &eval_apoly(b, ring, line)?),
        Expr::Div(a, b, col) => {
            let num = eval_apoly(a, ring, line)?;
            let den = eval_apoly(b, ring, line)?;
            let inv = ring
                .inv(&den)
                .ok_or_else(|| Error::parse(line, *col, "division by a non-constant or zero"))?;
            ring.mul(&num, &inv)
        }
        Expr::Pow(a, n) => {
            let base = eval_apoly(a, ring, line)?;
            if *n < 0 {
                let inv = ring.inv(&base).ok_or_else(|| Error::parse(line, 1, "negative power of a non-unit"))?;
                ring.pow(&inv, n.unsigned_abs())
            } else {
                ring.pow(&base, *n as u64)
            }
        }
    })
}

/// Evaluate into the completion at a prime. `T` maps to its image, `pi` to
/// the uniformizer of `A_p`, `w` to the ramified uniformizer.
pub fn eval_local(e: &Expr, loc: &Localization, line: usize) -> Result<LocalElem> {
    let r = loc.ring();
    let rec = |x: &Expr| eval_local(x, loc, line);
    Ok(match e {
        Expr::Num(n) => r.from_int(*n),
        Expr::Sym(Sym::T, _) => loc.t_image().clone(),
        Expr::Sym(Sym::G, _) => r.constant(loc.embed_const(loc.base().field().gen())),
        Expr::Sym(Sym::Pi, _) => r.pi(),
        Expr::Sym(Sym::W, _) => r.w(),
        Expr::Neg(a) => r.neg(&rec(a)?),
        Expr::Add(a, b) => r.add(&rec(a)?, &rec(b)?),
        Expr::Sub(a, b) => r.sub(&rec(a)?, &rec(b)?),
        Expr::Mul(a, b) => r.mul(&rec(a)?, &rec(b)?),
        Expr::Div(a, b, col) => r.try_div(&rec(a)?, &rec(b)?).map_err(|err| match err {
            Error::DivisionByZero => Error::parse(line, *col, "division by zero"),
            other => other,
        })?,
        Expr::Pow(a, n) => {
            let base = rec(a)?;
            if *n < 0 {
                r.pow(&r.try_inv(&base)?, n.unsigned_abs())
            } else {
                r.pow(&base, *n as u64)
            }
        }
    })
}

pub fn parse_apoly(s: &str, ring: &PolyRing, line: usize) -> Result<APoly> {
    eval_apoly(&parse(s, line)?, ring, line)
}

pub fn parse_local(s: &str, loc: &Localization, line: usize) -> Result<LocalElem> {
    eval_local(&parse(s, line)?, loc, line)
}

/// Parse a monic linear prime `T + a` (or `T`, `T - a`) and return it.
pub fn parse_prime(s: &str, ring: &PolyRing) -> Result<APoly> {
    let f = parse_apoly(s, ring, 1)?;
    if f.degree().unwrap_or(0) == 0 || f.leading() != 1 {
        return Err(Error::parse(1, 1, format!("prime {s:?} must be a monic polynomial of positive degree")));
    }
    Ok(f)
}

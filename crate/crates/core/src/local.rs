//! Truncated Laurent series over `F_{q^d}` in a uniformizer `w` with
//! `w^e = pi`, carrying an explicit absolute precision.
//!
//! A [`LocalElem`] is either exact (a finite Laurent polynomial in `w`) or
//! known modulo `w^N`. Valuations are reported in units of `pi`, so an
//! element of `w`-valuation `k` has `v_pi = k/e`. Arithmetic never claims
//! more than it knows: a result whose known digits are all zero reports an
//! indeterminate valuation bounded below by its precision.

use std::sync::Arc;

use crate::apoly::{APoly, PolyRing};
use crate::error::{Error, Result};
use crate::field::{FieldCtx, Fe};
use crate::newton::Valuation;
use crate::ring::Ring;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalElem {
    /// exponent of `digits[0]`
    start: i64,
    digits: Vec<Fe>,
    /// absolute precision in `w`-units; `None` means exact
    prec: Option<i64>,
}

impl LocalElem {
    /// `w`-adic valuation if some digit is known to be nonzero.
    pub fn raw_val(&self) -> Option<i64> {
        if self.digits.is_empty() {
            None
        } else {
            Some(self.start)
        }
    }

    pub fn raw_prec(&self) -> Option<i64> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    /// Nonzero digits as `(exponent, digit)`.
    pub fn terms(&self) -> impl Iterator<Item = (i64, Fe)> + '_ {
        self.digits
            .iter()
            .enumerate()
            .filter(|(_, &d)| d != 0)
            .map(move |(i, &d)| (self.start + i as i64, d))
    }

    pub fn digit(&self, k: i64) -> Fe {
        if k < self.start {
            return 0;
        }
        self.digits.get((k - self.start) as usize).copied().unwrap_or(0)
    }

    /// Lower bound on the raw valuation: the valuation, the precision, or
    /// `None` for exact zero.
    fn raw_lb(&self) -> Option<i64> {
        match (self.raw_val(), self.prec) {
            (Some(v), _) => Some(v),
            (None, Some(p)) => Some(p),
            (None, None) => None,
        }
    }
}

/// `F_{q^d}((w))` with `w^e = pi`.
#[derive(Clone, Debug)]
pub struct LocalRing {
    residue: Arc<FieldCtx>,
    ram: u32,
    /// relative precision used when inverting exact non-monomials
    default_prec: i64,
}

impl LocalRing {
    pub fn new(residue: Arc<FieldCtx>, ram: u32, default_prec: i64) -> Self {
        assert!(ram >= 1);
        LocalRing { residue, ram, default_prec: default_prec.max(1) }
    }

    pub fn residue(&self) -> &Arc<FieldCtx> {
        &self.residue
    }

    pub fn ramification(&self) -> u32 {
        self.ram
    }

    pub fn default_prec(&self) -> i64 {
        self.default_prec
    }

    /// Convert a precision in `pi`-units to `w`-units.
    pub fn pi_units(&self, n: i64) -> i64 {
        n * self.ram as i64
    }

    pub fn make(&self, start: i64, digits: Vec<Fe>, prec: Option<i64>) -> LocalElem {
        let mut el = LocalElem { start, digits, prec };
        self.normalize(&mut el);
        el
    }

    fn normalize(&self, el: &mut LocalElem) {
        let lead = el.digits.iter().position(|&d| d != 0);
        match lead {
            None => {
                el.digits.clear();
                el.start = 0;
            }
            Some(i) => {
                if i > 0 {
                    el.digits.drain(..i);
                    el.start += i as i64;
                }
                if let Some(p) = el.prec {
                    let keep = (p - el.start).max(0) as usize;
                    el.digits.truncate(keep);
                }
                while el.digits.last() == Some(&0) {
                    el.digits.pop();
                }
                if el.digits.is_empty() {
                    el.start = 0;
                }
            }
        }
    }

    pub fn exact_zero(&self) -> LocalElem {
        self.make(0, vec![], None)
    }

    /// Zero known modulo `w^prec`.
    pub fn zero_mod(&self, prec: i64) -> LocalElem {
        self.make(0, vec![], Some(prec))
    }

    pub fn constant(&self, c: Fe) -> LocalElem {
        self.make(0, vec![c], None)
    }

    /// `c * w^k`, exact.
    pub fn monomial(&self, c: Fe, k: i64) -> LocalElem {
        self.make(k, vec![c], None)
    }

    /// The uniformizer `w`.
    pub fn w(&self) -> LocalElem {
        self.monomial(1, 1)
    }

    /// `pi = w^e`.
    pub fn pi(&self) -> LocalElem {
        self.monomial(1, self.ram as i64)
    }

    /// `pi^k` for any integer `k`.
    pub fn pi_pow(&self, k: i64) -> LocalElem {
        self.monomial(1, k * self.ram as i64)
    }

    /// Cap the absolute precision at `w^n`.
    pub fn with_prec(&self, a: &LocalElem, n: i64) -> LocalElem {
        let prec = Some(a.prec.map_or(n, |p| p.min(n)));
        self.make(a.start, a.digits.clone(), prec)
    }

    /// Same, with `n` in `pi`-units.
    pub fn with_prec_pi(&self, a: &LocalElem, n: i64) -> LocalElem {
        self.with_prec(a, self.pi_units(n))
    }

    /// Exact valuation in `pi`-units, `Infinite` for exact zero.
    pub fn val(&self, a: &LocalElem) -> Result<Valuation> {
        match (a.raw_val(), a.prec) {
            (Some(v), _) => Ok(Valuation::frac(v, self.ram as i64)),
            (None, None) => Ok(Valuation::Infinite),
            (None, Some(p)) => Err(Error::IndeterminateValuation {
                at_least: Valuation::frac(p, self.ram as i64),
            }),
        }
    }

    /// Valuation if known, otherwise the precision bound it is known to exceed.
    pub fn val_lb(&self, a: &LocalElem) -> Valuation {
        match a.raw_lb() {
            Some(v) => Valuation::frac(v, self.ram as i64),
            None => Valuation::Infinite,
        }
    }

    /// Absolute precision in `pi`-units (`Infinite` if exact).
    pub fn prec(&self, a: &LocalElem) -> Valuation {
        match a.prec {
            Some(p) => Valuation::frac(p, self.ram as i64),
            None => Valuation::Infinite,
        }
    }

    pub fn is_unit(&self, a: &LocalElem) -> bool {
        a.raw_val() == Some(0)
    }

    /// Leading digit, i.e. the angular component.
    pub fn leading_digit(&self, a: &LocalElem) -> Option<Fe> {
        a.digits.first().copied()
    }

    /// Multiply by `w^k`.
    pub fn shift(&self, a: &LocalElem, k: i64) -> LocalElem {
        LocalElem {
            start: if a.digits.is_empty() { 0 } else { a.start + k },
            digits: a.digits.clone(),
            prec: a.prec.map(|p| p + k),
        }
    }

    pub fn scale(&self, a: &LocalElem, c: Fe) -> LocalElem {
        if c == 0 {
            return match a.prec {
                None => self.exact_zero(),
                Some(_) => self.exact_zero(),
            };
        }
        self.make(a.start, a.digits.iter().map(|&d| self.residue.mul(d, c)).collect(), a.prec)
    }

    /// `a == b` to the precision both are known.
    pub fn eq_to_prec(&self, a: &LocalElem, b: &LocalElem) -> bool {
        self.sub(a, b).digits.is_empty()
    }

    pub fn try_inv(&self, a: &LocalElem) -> Result<LocalElem> {
        let v = match a.raw_val() {
            Some(v) => v,
            None => {
                return Err(match a.prec {
                    None => Error::DivisionByZero,
                    Some(p) => Error::IndeterminateValuation {
                        at_least: Valuation::frac(p, self.ram as i64),
                    },
                })
            }
        };
        let f = &self.residue;
        let u0inv = f.inv(a.digits[0]).unwrap();
        if a.prec.is_none() && a.digits.len() == 1 {
            return Ok(self.monomial(u0inv, -v));
        }
        let rel = match a.prec {
            Some(p) => p - v,
            None => self.default_prec,
        };
        let n = rel.max(0) as usize;
        let mut b = vec![0; n];
        if n > 0 {
            b[0] = u0inv;
        }
        for k in 1..n {
            let mut s = 0;
            for j in 1..=k.min(a.digits.len() - 1) {
                s = f.add(s, f.mul(a.digits[j], b[k - j]));
            }
            b[k] = f.neg(f.mul(s, u0inv));
        }
        Ok(self.make(-v, b, Some(-v + rel)))
    }

    pub fn try_div(&self, a: &LocalElem, b: &LocalElem) -> Result<LocalElem> {
        Ok(self.mul(a, &self.try_inv(b)?))
    }

    /// Expand a polynomial `sum c_i X^i` at `X = x`.
    pub fn eval_poly(&self, coeffs: &[LocalElem], x: &LocalElem) -> LocalElem {
        coeffs
            .iter()
            .rev()
            .fold(self.exact_zero(), |acc, c| self.add(&self.mul(&acc, x), c))
    }

    pub fn format(&self, a: &LocalElem) -> String {
        let var = if self.ram == 1 { "pi" } else { "w" };
        let mut terms: Vec<String> = a
            .terms()
            .map(|(k, d)| {
                let c = self.residue.format(d);
                let m = match k {
                    0 => String::new(),
                    1 => var.to_string(),
                    _ => format!("{var}^{k}"),
                };
                match (k, c.as_str()) {
                    (0, _) => c,
                    (_, "1") => m,
                    _ => format!("{c}*{m}"),
                }
            })
            .collect();
        if terms.is_empty() && a.prec.is_none() {
            terms.push("0".into());
        }
        if let Some(p) = a.prec {
            terms.push(format!("O({var}^{p})"));
        }
        terms.join(" + ")
    }
}

impl Ring for LocalRing {
    type Elem = LocalElem;

    fn zero(&self) -> LocalElem {
        self.exact_zero()
    }
    fn one(&self) -> LocalElem {
        self.constant(1)
    }
    fn add(&self, a: &LocalElem, b: &LocalElem) -> LocalElem {
        let prec = match (a.prec, b.prec) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, None) => x,
            (None, y) => y,
        };
        if a.digits.is_empty() {
            return self.make(b.start, b.digits.clone(), prec);
        }
        if b.digits.is_empty() {
            return self.make(a.start, a.digits.clone(), prec);
        }
        let start = a.start.min(b.start);
        let mut end = (a.start + a.digits.len() as i64).max(b.start + b.digits.len() as i64);
        if let Some(p) = prec {
            end = end.min(p);
        }
        if end <= start {
            return self.make(0, vec![], prec);
        }
        let f = &self.residue;
        let digits = (start..end).map(|k| f.add(a.digit(k), b.digit(k))).collect();
        self.make(start, digits, prec)
    }
    fn neg(&self, a: &LocalElem) -> LocalElem {
        LocalElem {
            start: a.start,
            digits: a.digits.iter().map(|&d| self.residue.neg(d)).collect(),
            prec: a.prec,
        }
    }
    fn mul(&self, a: &LocalElem, b: &LocalElem) -> LocalElem {
        let (la, lb) = (a.raw_lb(), b.raw_lb());
        let (la, lb) = match (la, lb) {
            (None, _) | (_, None) => return self.exact_zero(),
            (Some(x), Some(y)) => (x, y),
        };
        let prec = match (a.prec, b.prec) {
            (None, None) => None,
            (Some(pa), None) => Some(pa + lb),
            (None, Some(pb)) => Some(pb + la),
            (Some(pa), Some(pb)) => Some((pa + lb).min(pb + la)),
        };
        if a.digits.is_empty() || b.digits.is_empty() {
            return self.make(0, vec![], prec);
        }
        let start = a.start + b.start;
        let mut len = a.digits.len() + b.digits.len() - 1;
        if let Some(p) = prec {
            len = len.min((p - start).max(0) as usize);
        }
        let f = &self.residue;
        let mut out = vec![0; len];
        for (i, &x) in a.digits.iter().enumerate() {
            if x == 0 || i >= len {
                continue;
            }
            let lx = f.log(x).unwrap();
            for (j, &y) in b.digits.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                if y == 0 {
                    continue;
                }
                let prod = f.exp(lx + f.log(y).unwrap());
                out[i + j] = f.add(out[i + j], prod);
            }
        }
        self.make(start, out, prec)
    }
    fn is_zero(&self, a: &LocalElem) -> bool {
        a.digits.is_empty()
    }
    fn frobenius(&self, a: &LocalElem, n: u64) -> LocalElem {
        let n = n as i64;
        let f = &self.residue;
        let len = if a.digits.is_empty() { 0 } else { (a.digits.len() - 1) * n as usize + 1 };
        let mut out = vec![0; len];
        for (i, &d) in a.digits.iter().enumerate() {
            out[i * n as usize] = f.pow(d, n as u64);
        }
        self.make(a.start * n, out, a.prec.map(|p| p * n))
    }
    fn inv(&self, a: &LocalElem) -> Option<LocalElem> {
        self.try_inv(a).ok()
    }
    fn from_int(&self, n: i64) -> LocalElem {
        self.constant(self.residue.from_int(n))
    }
    fn characteristic(&self) -> u64 {
        self.residue.p()
    }
}

/// The completion map `A -> A_p = F_{q^d}[[pi]]` at a monic irreducible `f`.
#[derive(Clone, Debug)]
pub struct Localization {
    base: PolyRing,
    prime: APoly,
    ring: LocalRing,
    /// image of `F_q` inside the residue field
    embed: Vec<Fe>,
    /// image of `T`
    t_image: LocalElem,
}

impl Localization {
    /// Localize at `f` with working precision `prec` (in `pi`-units) and
    /// ramification `ram` for the uniformizer `w` (`w^ram = pi`).
    pub fn new(base: &PolyRing, f: &APoly, prec: i64, ram: u32) -> Result<Self> {
        if prec < 1 {
            return Err(Error::BadPrecision(prec));
        }
        if f.leading() != 1 || !base.is_irreducible(f) {
            return Err(Error::Reducible(base.format(f)));
        }
        let small = base.field().clone();
        let d = f.degree().unwrap() as u32;
        let residue = if d == 1 {
            small.clone()
        } else {
            FieldCtx::new(small.p(), small.degree() * d)?
        };
        let embed = if d == 1 {
            (0..small.size() as Fe).collect()
        } else {
            small.embedding_into(&residue)?
        };
        let ring = LocalRing::new(residue.clone(), ram, prec * ram as i64);
        let fe: Vec<Fe> = f.coeffs().iter().map(|&c| embed[c as usize]).collect();
        let t_image = if d == 1 {
            // T = -a + pi for f = T + a
            ring.add(&ring.constant(residue.neg(fe[0])), &ring.pi())
        } else {
            // Hensel: solve f(t) = pi with t = t0 mod pi
            let eval = |x: Fe| fe.iter().rev().fold(0, |acc, &c| residue.add(residue.mul(acc, x), c));
            let t0 = residue
                .elements()
                .find(|&x| eval(x) == 0)
                .ok_or_else(|| Error::Reducible(base.format(f)))?;
            let fcoef: Vec<LocalElem> = fe.iter().map(|&c| ring.constant(c)).collect();
            let dcoef: Vec<LocalElem> = (1..fcoef.len())
                .map(|i| ring.mul(&ring.from_int(i as i64), &fcoef[i]))
                .collect();
            let target = ring.pi_units(prec);
            let mut t = ring.with_prec(&ring.constant(t0), target);
            let mut t_prev = None;
            for _ in 0..64 {
                let val = ring.sub(&ring.eval_poly(&fcoef, &t), &ring.pi());
                let der = ring.eval_poly(&dcoef, &t);
                let step = ring.try_div(&val, &der)?;
                t = ring.with_prec(&ring.sub(&t, &step), target);
                if t_prev.as_ref() == Some(&t) {
                    break;
                }
                t_prev = Some(t.clone());
            }
            t
        };
        Ok(Localization { base: base.clone(), prime: f.clone(), ring, embed, t_image })
    }

    pub fn ring(&self) -> &LocalRing {
        &self.ring
    }

    pub fn prime(&self) -> &APoly {
        &self.prime
    }

    pub fn base(&self) -> &PolyRing {
        &self.base
    }

    pub fn residue_degree(&self) -> u32 {
        self.prime.degree().unwrap() as u32
    }

    pub fn embed_const(&self, c: Fe) -> Fe {
        self.embed[c as usize]
    }

    pub fn t_image(&self) -> &LocalElem {
        &self.t_image
    }

    pub fn map(&self, a: &APoly) -> LocalElem {
        let r = &self.ring;
        a.coeffs()
            .iter()
            .rev()
            .fold(r.exact_zero(), |acc, &c| r.add(&r.mul(&acc, &self.t_image), &r.constant(self.embed[c as usize])))
    }
}

/// Convenience wrapper: localize `A = F_q[T]` at `f`.
pub fn prime_localize(base: &PolyRing, f: &APoly, prec: i64) -> Result<Localization> {
    Localization::new(base, f, prec, 1)
}

//! The ring `A = F_q[T]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldCtx, Fe};
use crate::ring::Ring;

/// Dense polynomial in `T`, low to high, never with a trailing zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct APoly(Vec<Fe>);

impl APoly {
    pub fn zero() -> Self {
        APoly(Vec::new())
    }

    pub fn constant(c: Fe) -> Self {
        APoly::from_coeffs(vec![c])
    }

    pub fn from_coeffs(mut c: Vec<Fe>) -> Self {
        while c.last() == Some(&0) {
            c.pop();
        }
        APoly(c)
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> Fe {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn leading(&self) -> Fe {
        self.0.last().copied().unwrap_or(0)
    }
}

/// `F_q[T]` as a ring object.
#[derive(Clone, Debug)]
pub struct PolyRing {
    field: Arc<FieldCtx>,
}

impl PolyRing {
    pub fn new(field: Arc<FieldCtx>) -> Self {
        PolyRing { field }
    }

    pub fn field(&self) -> &Arc<FieldCtx> {
        &self.field
    }

    pub fn t(&self) -> APoly {
        APoly::from_coeffs(vec![0, 1])
    }

    /// `T + a`.
    pub fn linear(&self, a: Fe) -> APoly {
        APoly::from_coeffs(vec![a, 1])
    }

    pub fn scale(&self, a: &APoly, c: Fe) -> APoly {
        APoly::from_coeffs(a.0.iter().map(|&x| self.field.mul(x, c)).collect())
    }

    pub fn eval(&self, a: &APoly, x: Fe) -> Fe {
        a.0.iter().rev().fold(0, |acc, &c| self.field.add(self.field.mul(acc, x), c))
    }

    pub fn divrem(&self, a: &APoly, b: &APoly) -> Result<(APoly, APoly)> {
        let db = b.degree().ok_or(Error::DivisionByZero)?;
        let f = &self.field;
        let lead_inv = f.inv(b.leading()).ok_or(Error::DivisionByZero)?;
        let mut rem = a.0.clone();
        let mut quo = vec![0; a.0.len().saturating_sub(db)];
        while rem.len() > db {
            let top = rem.len() - 1;
            let c = f.mul(rem[top], lead_inv);
            let shift = top - db;
            quo[shift] = c;
            for (i, &bc) in b.0.iter().enumerate() {
                rem[shift + i] = f.sub(rem[shift + i], f.mul(c, bc));
            }
            while rem.last() == Some(&0) {
                rem.pop();
            }
        }
        Ok((APoly::from_coeffs(quo), APoly::from_coeffs(rem)))
    }

    pub fn rem(&self, a: &APoly, b: &APoly) -> Result<APoly> {
        Ok(self.divrem(a, b)?.1)
    }

    pub fn gcd(&self, a: &APoly, b: &APoly) -> APoly {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let r = self.rem(&x, &y).expect("nonzero divisor");
            x = y;
            y = r;
        }
        if x.is_zero() {
            return x;
        }
        let inv = self.field.inv(x.leading()).unwrap();
        self.scale(&x, inv)
    }

    fn mulmod(&self, a: &APoly, b: &APoly, m: &APoly) -> APoly {
        self.rem(&self.mul(a, b), m).expect("nonzero modulus")
    }

    /// Rabin-style irreducibility: no factor of degree <= n/2, i.e.
    /// `gcd(f, T^{q^i} - T) = 1` for `1 <= i <= n/2`.
    pub fn is_irreducible(&self, f: &APoly) -> bool {
        let n = match f.degree() {
            None | Some(0) => return false,
            Some(n) => n,
        };
        let q = self.field.size();
        let t = self.t();
        let mut power = self.rem(&t, f).unwrap();
        for _ in 1..=n / 2 {
            // power <- power^q mod f
            let mut acc = APoly::constant(1);
            let mut base = power.clone();
            let mut e = q;
            while e > 0 {
                if e & 1 == 1 {
                    acc = self.mulmod(&acc, &base, f);
                }
                base = self.mulmod(&base, &base, f);
                e >>= 1;
            }
            power = acc;
            let diff = self.sub(&power, &t);
            if self.gcd(f, &diff).degree() != Some(0) {
                return false;
            }
        }
        true
    }

    /// Multiplicity of the monic irreducible `f` in `a`.
    pub fn valuation_at(&self, a: &APoly, f: &APoly) -> Option<u64> {
        if a.is_zero() {
            return None;
        }
        let mut v = 0;
        let mut cur = a.clone();
        loop {
            let (quo, rem) = self.divrem(&cur, f).ok()?;
            if !rem.is_zero() {
                return Some(v);
            }
            v += 1;
            cur = quo;
        }
    }

    pub fn format(&self, a: &APoly) -> String {
        if a.is_zero() {
            return "0".into();
        }
        let mut terms = Vec::new();
        for (i, &c) in a.0.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let cs = self.field.format(c);
            let mono = match i {
                0 => String::new(),
                1 => "T".into(),
                _ => format!("T^{i}"),
            };
            terms.push(match (i, cs.as_str()) {
                (0, _) => cs,
                (_, "1") => mono,
                _ if cs.contains('^') || cs == "g" => format!("{cs}*{mono}"),
                _ => format!("{cs}*{mono}"),
            });
        }
        terms.join(" + ")
    }
}

impl Ring for PolyRing {
    type Elem = APoly;

    fn zero(&self) -> APoly {
        APoly::zero()
    }
    fn one(&self) -> APoly {
        APoly::constant(1)
    }
    fn add(&self, a: &APoly, b: &APoly) -> APoly {
        let n = a.0.len().max(b.0.len());
        APoly::from_coeffs((0..n).map(|i| self.field.add(a.coeff(i), b.coeff(i))).collect())
    }
    fn neg(&self, a: &APoly) -> APoly {
        APoly::from_coeffs(a.0.iter().map(|&c| self.field.neg(c)).collect())
    }
    fn mul(&self, a: &APoly, b: &APoly) -> APoly {
        if a.is_zero() || b.is_zero() {
            return APoly::zero();
        }
        let mut out = vec![0; a.0.len() + b.0.len() - 1];
        for (i, &x) in a.0.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.0.iter().enumerate() {
                out[i + j] = self.field.add(out[i + j], self.field.mul(x, y));
            }
        }
        APoly::from_coeffs(out)
    }
    fn is_zero(&self, a: &APoly) -> bool {
        a.is_zero()
    }
    fn frobenius(&self, a: &APoly, n: u64) -> APoly {
        if a.is_zero() {
            return APoly::zero();
        }
        let deg = a.0.len() - 1;
        let mut out = vec![0; deg * n as usize + 1];
        for (i, &c) in a.0.iter().enumerate() {
            out[i * n as usize] = self.field.pow(c, n);
        }
        APoly::from_coeffs(out)
    }
    fn inv(&self, a: &APoly) -> Option<APoly> {
        if a.degree() == Some(0) {
            self.field.inv(a.0[0]).map(APoly::constant)
        } else {
            None
        }
    }
    fn from_int(&self, n: i64) -> APoly {
        APoly::constant(self.field.from_int(n))
    }
    fn characteristic(&self) -> u64 {
        self.field.p()
    }
}

impl fmt::Display for APoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(p: u64, e: u32) -> PolyRing {
        PolyRing::new(FieldCtx::new(p, e).unwrap())
    }

    #[test]
    fn divrem_reconstructs() {
        let r = ring(3, 1);
        let a = APoly::from_coeffs(vec![1, 2, 0, 1, 2]);
        let b = APoly::from_coeffs(vec![2, 1, 1]);
        let (q, rem) = r.divrem(&a, &b).unwrap();
        assert_eq!(r.add(&r.mul(&q, &b), &rem), a);
        assert!(rem.degree().unwrap_or(0) < 2);
    }

    #[test]
    fn irreducibility() {
        let r = ring(2, 1);
        // T^2 + T + 1 irreducible over F_2, T^2 + 1 = (T+1)^2 not
        assert!(r.is_irreducible(&APoly::from_coeffs(vec![1, 1, 1])));
        assert!(!r.is_irreducible(&APoly::from_coeffs(vec![1, 0, 1])));
        assert!(r.is_irreducible(&r.t()));
        let r3 = ring(3, 1);
        assert!(r3.is_irreducible(&APoly::from_coeffs(vec![1, 0, 1])));
    }

    #[test]
    fn valuation_of_products() {
        let r = ring(2, 1);
        let t = r.t();
        let a = r.mul(&t, &r.linear(1));
        assert_eq!(r.valuation_at(&a, &t), Some(1));
        let r3 = ring(3, 1);
        let tp1 = r3.linear(1);
        let cube = r3.pow(&tp1, 3);
        assert_eq!(r3.valuation_at(&cube, &tp1), Some(3));
    }

    #[test]
    fn ring_axioms_small_degree() {
        let r = ring(2, 2);
        let q = r.field().size() as u32;
        // all polys of degree <= 1 over F_4
        let polys: Vec<APoly> = (0..q)
            .flat_map(|a| (0..q).map(move |b| APoly::from_coeffs(vec![a, b])))
            .collect();
        for a in &polys {
            for b in &polys {
                for c in polys.iter().step_by(3) {
                    assert_eq!(r.mul(a, &r.add(b, c)), r.add(&r.mul(a, b), &r.mul(a, c)));
                    assert_eq!(r.mul(&r.mul(a, b), c), r.mul(a, &r.mul(b, c)));
                }
            }
        }
    }

    #[test]
    fn frobenius_matches_power() {
        let r = ring(3, 2);
        let a = APoly::from_coeffs(vec![r.field().gen(), 1, 2]);
        assert_eq!(r.frobenius(&a, 3), r.pow(&a, 3));
        assert_eq!(r.frobenius(&a, 9), r.pow(&a, 9));
    }
}

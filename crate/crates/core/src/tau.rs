//! Twisted polynomials `R{tau}` with `tau * a = a^q * tau`.

use crate::error::{Error, Result};
use crate::ring::Ring;

/// `sum c_i tau^i`, low to high, no trailing zero coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct TauPoly<E> {
    twist: u64,
    coeffs: Vec<E>,
}

impl<E: Clone> TauPoly<E> {
    pub fn twist(&self) -> u64 {
        self.twist
    }

    pub fn coeffs(&self) -> &[E] {
        &self.coeffs
    }

    /// `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<&E> {
        self.coeffs.last()
    }
}

/// The ring `R{tau}` for a coefficient ring `R` and twist `q`.
#[derive(Clone, Debug)]
pub struct TauRing<R: Ring> {
    ring: R,
    q: u64,
}

impl<R: Ring> TauRing<R> {
    pub fn new(ring: R, q: u64) -> Self {
        TauRing { ring, q }
    }

    pub fn coeff_ring(&self) -> &R {
        &self.ring
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn make(&self, mut coeffs: Vec<R::Elem>) -> TauPoly<R::Elem> {
        while coeffs.last().is_some_and(|c| self.ring.is_zero(c)) {
            coeffs.pop();
        }
        TauPoly { twist: self.q, coeffs }
    }

    pub fn zero(&self) -> TauPoly<R::Elem> {
        self.make(vec![])
    }

    pub fn one(&self) -> TauPoly<R::Elem> {
        self.constant(self.ring.one())
    }

    pub fn constant(&self, c: R::Elem) -> TauPoly<R::Elem> {
        self.make(vec![c])
    }

    /// `c * tau^n`.
    pub fn monomial(&self, c: R::Elem, n: usize) -> TauPoly<R::Elem> {
        let mut v = vec![self.ring.zero(); n];
        v.push(c);
        self.make(v)
    }

    pub fn coeff(&self, f: &TauPoly<R::Elem>, i: usize) -> R::Elem {
        f.coeffs.get(i).cloned().unwrap_or_else(|| self.ring.zero())
    }

    /// `a^{q^n}`.
    pub fn frob(&self, a: &R::Elem, n: usize) -> R::Elem {
        (0..n).fold(a.clone(), |x, _| self.ring.frobenius(&x, self.q))
    }

    fn check(&self, f: &TauPoly<R::Elem>) -> Result<()> {
        if f.twist != self.q {
            return Err(Error::TwistMismatch { left: self.q, right: f.twist });
        }
        Ok(())
    }

    pub fn add(&self, f: &TauPoly<R::Elem>, g: &TauPoly<R::Elem>) -> TauPoly<R::Elem> {
        let n = f.coeffs.len().max(g.coeffs.len());
        self.make((0..n).map(|i| self.ring.add(&self.coeff(f, i), &self.coeff(g, i))).collect())
    }

    pub fn neg(&self, f: &TauPoly<R::Elem>) -> TauPoly<R::Elem> {
        self.make(f.coeffs.iter().map(|c| self.ring.neg(c)).collect())
    }

    pub fn sub(&self, f: &TauPoly<R::Elem>, g: &TauPoly<R::Elem>) -> TauPoly<R::Elem> {
        self.add(f, &self.neg(g))
    }

    /// Left scalar multiplication `c * f`.
    pub fn scale(&self, c: &R::Elem, f: &TauPoly<R::Elem>) -> TauPoly<R::Elem> {
        self.make(f.coeffs.iter().map(|x| self.ring.mul(c, x)).collect())
    }

    /// Product `f * g`, i.e. the composition `f(g(x))`.
    pub fn mul(&self, f: &TauPoly<R::Elem>, g: &TauPoly<R::Elem>) -> TauPoly<R::Elem> {
        if f.is_zero() || g.is_zero() {
            return self.zero();
        }
        let mut out = vec![self.ring.zero(); f.coeffs.len() + g.coeffs.len() - 1];
        // twisted[j] = g_j^{q^i} for the current i
        let mut twisted: Vec<R::Elem> = g.coeffs.clone();
        for (i, a) in f.coeffs.iter().enumerate() {
            if i > 0 {
                twisted = twisted.iter().map(|b| self.ring.frobenius(b, self.q)).collect();
            }
            if self.ring.is_zero(a) {
                continue;
            }
            for (j, b) in twisted.iter().enumerate() {
                out[i + j] = self.ring.add(&out[i + j], &self.ring.mul(a, b));
            }
        }
        self.make(out)
    }

    /// Product with twist checking.
    pub fn tau_mul(&self, f: &TauPoly<R::Elem>, g: &TauPoly<R::Elem>) -> Result<TauPoly<R::Elem>> {
        self.check(f)?;
        self.check(g)?;
        Ok(self.mul(f, g))
    }

    /// Evaluate the additive polynomial `sum c_i x^{q^i}`.
    pub fn eval(&self, f: &TauPoly<R::Elem>, x: &R::Elem) -> R::Elem {
        let mut acc = self.ring.zero();
        let mut pw = x.clone();
        for (i, c) in f.coeffs.iter().enumerate() {
            if i > 0 {
                pw = self.ring.frobenius(&pw, self.q);
            }
            acc = self.ring.add(&acc, &self.ring.mul(c, &pw));
        }
        acc
    }

    /// `f = quot * g + rem` with `deg rem < deg g`.
    pub fn skew_right_divide(
        &self,
        f: &TauPoly<R::Elem>,
        g: &TauPoly<R::Elem>,
    ) -> Result<(TauPoly<R::Elem>, TauPoly<R::Elem>)> {
        self.check(f)?;
        self.check(g)?;
        let m = g.degree().ok_or(Error::DivisionByZero)?;
        let lead = g.leading().unwrap();
        let mut rem = f.coeffs.clone();
        let mut quot = vec![self.ring.zero(); rem.len().saturating_sub(m)];
        // cache of (lead^{q^k})^{-1}
        let mut inv_cache: Vec<Option<R::Elem>> = vec![None; quot.len()];
        while rem.len() > m {
            let top = rem.len() - 1;
            let k = top - m;
            let c = rem[top].clone();
            if !self.ring.is_zero(&c) {
                if inv_cache[k].is_none() {
                    let li = self.ring.inv(&self.frob(lead, k)).ok_or(Error::NonInvertibleLeading)?;
                    inv_cache[k] = Some(li);
                }
                let s = self.ring.mul(&c, inv_cache[k].as_ref().unwrap());
                // subtract s tau^k * g
                for (j, b) in g.coeffs.iter().enumerate() {
                    let t = self.ring.mul(&s, &self.frob(b, k));
                    rem[k + j] = self.ring.sub(&rem[k + j], &t);
                }
                quot[k] = s;
            }
            rem.pop();
        }
        Ok((self.make(quot), self.make(rem)))
    }

    /// Right remainder of `f` by `g`.
    pub fn right_rem(&self, f: &TauPoly<R::Elem>, g: &TauPoly<R::Elem>) -> Result<TauPoly<R::Elem>> {
        Ok(self.skew_right_divide(f, g)?.1)
    }

    /// Normalize to leading coefficient 1 by left scaling.
    pub fn monic(&self, f: &TauPoly<R::Elem>) -> Result<TauPoly<R::Elem>> {
        let lead = f.leading().ok_or(Error::ZeroInput)?;
        let inv = self.ring.inv(lead).ok_or(Error::NonInvertibleLeading)?;
        Ok(self.scale(&inv, f))
    }

    /// Monic greatest common right divisor (coefficients in a field).
    pub fn gcrd(&self, f: &TauPoly<R::Elem>, g: &TauPoly<R::Elem>) -> Result<TauPoly<R::Elem>> {
        let (mut a, mut b) = (f.clone(), g.clone());
        while !b.is_zero() {
            let r = self.right_rem(&a, &b)?;
            a = b;
            b = r;
        }
        if a.is_zero() {
            return Ok(a);
        }
        self.monic(&a)
    }

    /// Right remainder of `tau^m` by `g`, computed in `m` steps.
    pub fn tau_power_rem(&self, m: u64, g: &TauPoly<R::Elem>) -> Result<TauPoly<R::Elem>> {
        let tau = self.monomial(self.ring.one(), 1);
        let mut cur = self.right_rem(&self.one(), g)?;
        for _ in 0..m {
            cur = self.right_rem(&self.mul(&tau, &cur), g)?;
        }
        Ok(cur)
    }

    /// Map coefficients into another ring with the same twist.
    pub fn map<S: Ring>(&self, f: &TauPoly<R::Elem>, target: &TauRing<S>, h: impl Fn(&R::Elem) -> S::Elem) -> TauPoly<S::Elem> {
        target.make(f.coeffs.iter().map(h).collect())
    }
}

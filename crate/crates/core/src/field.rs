//! Finite fields `F_{p^e}` with exp/log tables.
//!
//! Elements are `u32` values whose base-`p` digits are the coefficients of
//! the residue class modulo a primitive polynomial (digit `i` is the
//! coefficient of `x^i`). The modulus is chosen primitive, so `x` generates
//! the multiplicative group and multiplication is a table lookup. For
//! `e = 1` the generator is the least primitive root mod `p`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ring::Ring;

/// Default bound on `p^e` for table-driven fields.
pub const DEFAULT_FIELD_BOUND: u64 = 1 << 20;

pub type Fe = u32;

pub struct FieldCtx {
    p: u32,
    e: u32,
    q: u32,
    /// Monic modulus, coefficients low to high, length `e + 1`.
    modulus: Vec<u32>,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} (modulus {:?})", self.p, self.e, self.modulus)
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e && self.modulus == other.modulus
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// Dense polynomial helpers over F_p used only while searching for a modulus.
fn polymulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let e = m.len() - 1;
    let mut prod = vec![0u64; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    // m is monic
    for deg in (e..prod.len()).rev() {
        let c = prod[deg];
        if c == 0 {
            continue;
        }
        for k in 0..=e {
            let sub = c * m[k] as u64 % p as u64;
            let idx = deg - e + k;
            prod[idx] = (prod[idx] + p as u64 - sub) % p as u64;
        }
    }
    prod.truncate(e);
    prod.into_iter().map(|x| x as u32).collect()
}

fn polypowmod_x(n: u64, m: &[u32], p: u32) -> Vec<u32> {
    let e = m.len() - 1;
    let mut result = vec![0u32; e];
    result[0] = 1;
    let mut base = vec![0u32; e];
    if e == 1 {
        base[0] = (p - m[0]) % p;
    } else {
        base[1] = 1;
    }
    let mut n = n;
    while n > 0 {
        if n & 1 == 1 {
            result = polymulmod(&result, &base, m, p);
        }
        base = polymulmod(&base, &base, m, p);
        n >>= 1;
    }
    result
}

fn is_one_vec(v: &[u32]) -> bool {
    v[0] == 1 && v[1..].iter().all(|&c| c == 0)
}

impl FieldCtx {
    pub fn new(p: u64, e: u32) -> Result<Arc<Self>> {
        Self::with_bound(p, e, DEFAULT_FIELD_BOUND)
    }

    pub fn with_bound(p: u64, e: u32, bound: u64) -> Result<Arc<Self>> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if e == 0 {
            return Err(Error::OutOfRange("extension degree 0".into()));
        }
        let size = (p as u128).checked_pow(e).unwrap_or(u128::MAX);
        if size > bound as u128 {
            return Err(Error::FieldTooLarge { size: size.min(u64::MAX as u128) as u64, bound });
        }
        let q = size as u64;
        let p32 = p as u32;
        let order = q - 1;
        let factors = prime_factors(order.max(1));
        // Search monic polynomials x^e + c_{e-1} x^{e-1} + ... + c_0 for one
        // where x has multiplicative order exactly q - 1.
        let mut modulus = None;
        let count = q; // number of low-coefficient tuples
        for code in 0..count {
            let mut m = Vec::with_capacity(e as usize + 1);
            let mut c = code;
            for _ in 0..e {
                m.push((c % p) as u32);
                c /= p;
            }
            m.push(1);
            if m[0] == 0 {
                continue;
            }
            if q == 2 {
                // F_2: modulus x + 1, x = 1 generates the trivial group.
                if m[0] == 1 {
                    modulus = Some(m);
                    break;
                }
                continue;
            }
            if !is_one_vec(&polypowmod_x(order, &m, p32)) {
                continue;
            }
            if factors.iter().all(|&l| !is_one_vec(&polypowmod_x(order / l, &m, p32))) {
                modulus = Some(m);
                break;
            }
        }
        let modulus = modulus.ok_or_else(|| Error::Reducible("no primitive modulus found".into()))?;
        let mut exp = Vec::with_capacity(order as usize);
        let mut log = vec![0u32; q as usize];
        let mut cur = vec![0u32; e as usize];
        cur[0] = 1;
        let gen: Vec<u32> = if e == 1 {
            vec![(p32 - modulus[0]) % p32]
        } else {
            let mut g = vec![0u32; e as usize];
            g[1] = 1;
            g
        };
        for i in 0..order {
            let code = encode(&cur, p32);
            exp.push(code);
            log[code as usize] = i as u32;
            cur = polymulmod(&cur, &gen, &modulus, p32);
        }
        Ok(Arc::new(FieldCtx { p: p32, e, q: q as u32, modulus, exp, log }))
    }

    pub fn p(&self) -> u64 {
        self.p as u64
    }
    pub fn degree(&self) -> u32 {
        self.e
    }
    pub fn size(&self) -> u64 {
        self.q as u64
    }
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if self.p == 2 {
            return a ^ b;
        }
        if self.e == 1 {
            let s = a + b;
            return if s >= self.p { s - self.p } else { s };
        }
        let (mut a, mut b) = (a, b);
        let mut out = 0;
        let mut place = 1;
        while a > 0 || b > 0 {
            let d = (a % self.p + b % self.p) % self.p;
            out += d * place;
            place *= self.p;
            a /= self.p;
            b /= self.p;
        }
        out
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        if self.p == 2 {
            return a;
        }
        if self.e == 1 {
            return if a == 0 { 0 } else { self.p - a };
        }
        let mut a = a;
        let mut out = 0;
        let mut place = 1;
        while a > 0 {
            let d = a % self.p;
            out += ((self.p - d) % self.p) * place;
            place *= self.p;
            a /= self.p;
        }
        out
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.q - 1;
        let s = self.log[a as usize] as u64 + self.log[b as usize] as u64;
        self.exp[(s % n as u64) as usize]
    }

    pub fn inv(&self, a: Fe) -> Option<Fe> {
        if a == 0 {
            return None;
        }
        let n = self.q - 1;
        Some(self.exp[((n - self.log[a as usize]) % n) as usize])
    }

    pub fn div(&self, a: Fe, b: Fe) -> Option<Fe> {
        self.inv(b).map(|ib| self.mul(a, ib))
    }

    pub fn pow(&self, a: Fe, n: u64) -> Fe {
        if n == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let ord = (self.q - 1) as u64;
        let l = self.log[a as usize] as u64;
        self.exp[((l as u128 * (n % ord) as u128) % ord as u128) as usize]
    }

    /// Generator of the multiplicative group.
    pub fn gen(&self) -> Fe {
        if self.q == 2 {
            1
        } else {
            self.exp[1]
        }
    }

    /// `g^i` for the fixed generator.
    pub fn exp(&self, i: u64) -> Fe {
        self.exp[(i % (self.q as u64 - 1)) as usize]
    }

    /// Discrete log to the fixed generator; `None` for zero.
    pub fn log(&self, a: Fe) -> Option<u64> {
        if a == 0 {
            None
        } else {
            Some(self.log[a as usize] as u64)
        }
    }

    pub fn from_int(&self, n: i64) -> Fe {
        n.rem_euclid(self.p as i64) as Fe
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        0..self.q
    }

    /// Embedding table of `self` into `big`: `table[x]` is the image of `x`.
    pub fn embedding_into(&self, big: &FieldCtx) -> Result<Vec<Fe>> {
        if self.p != big.p || !big.e.is_multiple_of(self.e) {
            return Err(Error::Precondition(format!(
                "F_{}^{} does not embed in F_{}^{}",
                self.p, self.e, big.p, big.e
            )));
        }
        // image of the generator: an element of big of order q_small - 1 that
        // is a root of our modulus
        let root = if self.e == 1 {
            None
        } else {
            let r = big.elements().find(|&x| {
                let mut acc = 0;
                let mut pw = 1;
                for &c in &self.modulus {
                    acc = big.add(acc, big.mul(c, pw));
                    pw = big.mul(pw, x);
                }
                acc == 0 && x != 0
            });
            Some(r.ok_or_else(|| Error::Precondition("no root of modulus in extension".into()))?)
        };
        let mut table = vec![0; self.q as usize];
        for x in 1..self.q {
            table[x as usize] = match root {
                // prime field: digits are integers
                None => x,
                Some(r) => big.pow(r, self.log[x as usize] as u64),
            };
        }
        Ok(table)
    }

    /// Render as an integer (prime field) or as a power of the generator `g`.
    pub fn format(&self, a: Fe) -> String {
        if self.e == 1 || a == 0 {
            return a.to_string();
        }
        let l = self.log[a as usize];
        match l {
            0 => "1".into(),
            1 => "g".into(),
            _ => format!("g^{l}"),
        }
    }
}

fn encode(v: &[u32], p: u32) -> u32 {
    v.iter().rev().fold(0, |acc, &d| acc * p + d)
}

/// Ring wrapper so generic code can run over a finite field.
#[derive(Clone, Debug)]
pub struct FiniteField(pub Arc<FieldCtx>);

impl FiniteField {
    pub fn new(p: u64, e: u32) -> Result<Self> {
        Ok(FiniteField(FieldCtx::new(p, e)?))
    }
    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.0
    }
}

impl Ring for FiniteField {
    type Elem = Fe;

    fn zero(&self) -> Fe {
        0
    }
    fn one(&self) -> Fe {
        1
    }
    fn add(&self, a: &Fe, b: &Fe) -> Fe {
        self.0.add(*a, *b)
    }
    fn neg(&self, a: &Fe) -> Fe {
        self.0.neg(*a)
    }
    fn mul(&self, a: &Fe, b: &Fe) -> Fe {
        self.0.mul(*a, *b)
    }
    fn is_zero(&self, a: &Fe) -> bool {
        *a == 0
    }
    fn frobenius(&self, a: &Fe, n: u64) -> Fe {
        self.0.pow(*a, n)
    }
    fn inv(&self, a: &Fe) -> Option<Fe> {
        self.0.inv(*a)
    }
    fn from_int(&self, n: i64) -> Fe {
        self.0.from_int(n)
    }
    fn characteristic(&self) -> u64 {
        self.0.p()
    }
    fn pow(&self, a: &Fe, n: u64) -> Fe {
        self.0.pow(*a, n)
    }
}

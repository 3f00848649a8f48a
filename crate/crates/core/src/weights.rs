//! Weight-space arithmetic: group-like elements `[1 + z]`, their Mahler
//! expansions `(1 + z)^s = sum_j binom(s, j) z^j`, evaluation at integer and
//! `p`-adic weights, and the sup-norm test for `Lambda^+`.
//!
//! The coefficient ring has characteristic `p`, so `binom(s, j)` only
//! matters modulo `p` and is computed digit by digit (Lucas).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr;
use crate::local::{LocalElem, LocalRing, Localization};
use crate::newton::{ser_rational, Rational, Valuation};
use crate::ring::Ring;

/// `binom(n, k) mod p`.
pub fn binom_mod_p(mut n: u64, mut k: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    while k > 0 || n > 0 {
        let (a, b) = (n % p, k % p);
        if b > a {
            return 0;
        }
        acc = acc * small_binom(a, b, p) % p;
        n /= p;
        k /= p;
    }
    acc
}

fn small_binom(n: u64, k: u64, p: u64) -> u64 {
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num = num * ((n - i) % p) % p;
        den = den * ((i + 1) % p) % p;
    }
    num * mod_inv(den, p) % p
}

fn mod_inv(a: u64, p: u64) -> u64 {
    let mut r = 1u64;
    let mut b = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// A weight `(chi, s)`: a character index modulo `Q - 1` and a `p`-adic
/// integer `s` known through `digits.len()` base-`p` digits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightChar {
    pub chi: u64,
    pub digits: Vec<u64>,
    pub p: u64,
}

impl WeightChar {
    /// The integer weight `k`, with `m` digits of `s = k`.
    pub fn from_int(k: u64, big_q: u64, p: u64, m: usize) -> Self {
        let mut digits = Vec::with_capacity(m);
        let mut n = k;
        for _ in 0..m {
            digits.push(n % p);
            n /= p;
        }
        WeightChar { chi: k % (big_q - 1), digits, p }
    }

    /// `binom(s, j) mod p`, or `None` when `j >= p^m` needs unknown digits.
    pub fn binom(&self, j: u64) -> Option<u64> {
        let mut acc = 1u64;
        let mut k = j;
        for &d in &self.digits {
            let b = k % self.p;
            if b > d {
                return Some(0);
            }
            acc = acc * small_binom(d, b, self.p) % self.p;
            k /= self.p;
        }
        (k == 0).then_some(acc)
    }
}

/// `v_p(k - k')`, infinite when equal.
pub fn vp_diff(k: u64, k2: u64, p: u64) -> Valuation {
    let mut d = k.abs_diff(k2);
    if d == 0 {
        return Valuation::Infinite;
    }
    let mut v = 0;
    while d.is_multiple_of(p) {
        d /= p;
        v += 1;
    }
    Valuation::int(v)
}

/// Whether the two weights lie on the same component, and how close the
/// `p`-adic parts are (`None` across components).
pub fn weight_distance(a: &WeightChar, b: &WeightChar) -> (bool, Option<Valuation>) {
    if a.chi != b.chi {
        return (false, None);
    }
    let first = a.digits.iter().zip(&b.digits).position(|(x, y)| x != y);
    let v = match first {
        Some(i) => Valuation::int(i as i64),
        None => Valuation::Infinite,
    };
    (true, Some(v))
}

/// Linear lower bound `v(a_j) >= slope * j + offset` on every Mahler
/// coefficient, used for the dropped tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Decay {
    #[serde(serialize_with = "ser_rational")]
    pub slope: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub offset: Rational,
}

/// `f(s) = sum_{j <= J} a_j binom(s, j)` plus a tail bounded by `decay`
/// (`None`: the dropped coefficients are zero).
#[derive(Clone, Debug, PartialEq)]
pub struct MahlerFunction {
    pub coeffs: Vec<LocalElem>,
    pub decay: Option<Decay>,
}

impl MahlerFunction {
    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Lower bound on `v(a_j)` for `j > J`.
    pub fn tail_val(&self) -> Valuation {
        match self.decay {
            None => Valuation::Infinite,
            Some(d) => Valuation::Finite(d.slope * Rational::from_integer(self.coeffs.len() as i64) + d.offset),
        }
    }
}

/// Arithmetic on Mahler expansions truncated at `J`.
#[derive(Clone, Debug)]
pub struct MahlerSpace {
    ring: LocalRing,
    j: usize,
}

impl MahlerSpace {
    pub fn new(ring: LocalRing, j: usize) -> Self {
        MahlerSpace { ring, j }
    }

    pub fn ring(&self) -> &LocalRing {
        &self.ring
    }

    pub fn truncation(&self) -> usize {
        self.j
    }

    fn binom(&self, n: u64, k: u64) -> LocalElem {
        let p = self.ring.characteristic();
        self.ring.from_int(binom_mod_p(n, k, p) as i64)
    }

    pub fn constant(&self, c: &LocalElem) -> MahlerFunction {
        let mut coeffs = vec![self.ring.exact_zero(); self.j + 1];
        coeffs[0] = c.clone();
        MahlerFunction { coeffs, decay: None }
    }

    /// The expansion of `(1 + z)^s`: `a_j = z^j`.
    pub fn group_like(&self, z: &LocalElem) -> Result<MahlerFunction> {
        let v = self.ring.val_lb(z);
        if v < Valuation::int(1) {
            return Err(Error::Precondition(format!("1 + z with v(z) = {v} is not in 1 + pi A_p")));
        }
        let mut coeffs = vec![self.ring.one()];
        for i in 1..=self.j {
            coeffs.push(self.ring.mul(&coeffs[i - 1], z));
        }
        let decay = match v {
            Valuation::Infinite => None,
            Valuation::Finite(s) => Some(Decay { slope: s, offset: Rational::from_integer(0) }),
        };
        Ok(MahlerFunction { coeffs, decay })
    }

    pub fn add(&self, f: &MahlerFunction, g: &MahlerFunction) -> MahlerFunction {
        let coeffs = f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| self.ring.add(a, b)).collect();
        let decay = match (f.decay, g.decay) {
            (None, d) | (d, None) => d,
            (Some(a), Some(b)) => Some(Decay { slope: a.slope.min(b.slope), offset: a.offset.min(b.offset) }),
        };
        MahlerFunction { coeffs, decay }
    }

    pub fn scale(&self, c: &LocalElem, f: &MahlerFunction) -> Result<MahlerFunction> {
        let coeffs = f.coeffs.iter().map(|a| self.ring.mul(c, a)).collect();
        let decay = match f.decay {
            None => None,
            Some(d) => match self.ring.val_lb(c) {
                Valuation::Infinite => None,
                Valuation::Finite(v) => Some(Decay { slope: d.slope, offset: d.offset + v }),
            },
        };
        Ok(MahlerFunction { coeffs, decay })
    }

    pub fn sub(&self, f: &MahlerFunction, g: &MahlerFunction) -> Result<MahlerFunction> {
        let neg = self.scale(&self.ring.from_int(-1), g)?;
        Ok(self.add(f, &neg))
    }

    /// Values `f(0), ..., f(J)`; exact because `binom(k, j) = 0` for `j > k`.
    pub fn values(&self, f: &MahlerFunction) -> Vec<LocalElem> {
        (0..=self.j as u64)
            .map(|k| {
                let terms: Vec<LocalElem> = (0..=k).map(|j| self.ring.mul(&f.coeffs[j as usize], &self.binom(k, j))).collect();
                self.ring.sum(&terms)
            })
            .collect()
    }

    /// Inverse of [`values`](Self::values): `a_j = sum_i (-1)^{j-i} binom(j, i) f(i)`.
    pub fn from_values(&self, values: &[LocalElem], decay: Option<Decay>) -> MahlerFunction {
        let coeffs = (0..values.len() as u64)
            .map(|j| {
                let terms: Vec<LocalElem> = (0..=j)
                    .map(|i| {
                        let sign = if (j - i) % 2 == 0 { 1 } else { -1 };
                        let c = self.ring.mul(&self.ring.from_int(sign), &self.binom(j, i));
                        self.ring.mul(&c, &values[i as usize])
                    })
                    .collect();
                self.ring.sum(&terms)
            })
            .collect();
        MahlerFunction { coeffs, decay }
    }

    /// Product through pointwise values at `0..J`.
    pub fn mul(&self, f: &MahlerFunction, g: &MahlerFunction) -> MahlerFunction {
        let vf = self.values(f);
        let vg = self.values(g);
        let prod: Vec<LocalElem> = vf.iter().zip(&vg).map(|(a, b)| self.ring.mul(a, b)).collect();
        let bound = |h: &MahlerFunction| -> Option<Decay> {
            match h.decay {
                Some(d) => Some(d),
                // finitely supported: slope 0 with the Gauss valuation as offset
                None => self
                    .gauss_lower_bound(h)
                    .map(|off| Decay { slope: Rational::from_integer(0), offset: off }),
            }
        };
        let decay = match (f.decay, g.decay) {
            (None, None) => None,
            _ => match (bound(f), bound(g)) {
                (Some(a), Some(b)) => Some(Decay { slope: a.slope.min(b.slope), offset: a.offset + b.offset }),
                _ => None,
            },
        };
        self.from_values(&prod, decay)
    }

    fn gauss_lower_bound(&self, f: &MahlerFunction) -> Option<Rational> {
        f.coeffs.iter().filter_map(|a| self.ring.val_lb(a).finite()).min()
    }

    /// `f(k)` for an integer weight; beyond `J` the tail bound caps the precision.
    pub fn eval_weight(&self, f: &MahlerFunction, k: u64) -> Result<LocalElem> {
        let top = (k as usize).min(self.j) as u64;
        let terms: Vec<LocalElem> = (0..=top).map(|j| self.ring.mul(&f.coeffs[j as usize], &self.binom(k, j))).collect();
        let s = self.ring.sum(&terms);
        self.cap_by_tail(f, s, k as usize > self.j)
    }

    fn cap_by_tail(&self, f: &MahlerFunction, s: LocalElem, truncated: bool) -> Result<LocalElem> {
        if !truncated {
            return Ok(s);
        }
        match f.tail_val() {
            Valuation::Infinite => Ok(s),
            Valuation::Finite(t) => {
                let e = self.ring.ramification() as i64;
                let w_units = (t * Rational::from_integer(e)).ceil().to_integer();
                if w_units <= 0 {
                    return Err(Error::Precision(format!("truncation at J = {} leaves a tail of valuation {t}", self.j)));
                }
                Ok(self.ring.with_prec(&s, w_units))
            }
        }
    }

    /// `f(s)` at a `p`-adic weight.
    pub fn eval_padic(&self, f: &MahlerFunction, s: &WeightChar) -> Result<LocalElem> {
        let mut terms = Vec::new();
        for j in 0..=self.j as u64 {
            let b = s.binom(j).ok_or_else(|| {
                Error::Precision(format!("binom(s, {j}) needs more than {} digits of s", s.digits.len()))
            })?;
            terms.push(self.ring.mul(&f.coeffs[j as usize], &self.ring.from_int(b as i64)));
        }
        let sum = self.ring.sum(&terms);
        self.cap_by_tail(f, sum, true)
    }

    /// `min_j v(a_j)`, the sup norm of `f` on `Z_p`.
    pub fn gauss_valuation(&self, f: &MahlerFunction) -> Result<Valuation> {
        let mut known = Valuation::Infinite;
        let mut floor = f.tail_val();
        for a in &f.coeffs {
            match self.ring.val(a) {
                Ok(v) => known = known.min(v),
                Err(Error::IndeterminateValuation { at_least }) => floor = floor.min(at_least),
                Err(e) => return Err(e),
            }
        }
        if known.is_infinite() && !floor.is_infinite() {
            return Err(Error::IndeterminateValuation { at_least: floor });
        }
        if floor <= known && !floor.is_infinite() {
            return Err(Error::Precision(format!(
                "minimum {known} over known coefficients is not below the unknown part (>= {floor})"
            )));
        }
        Ok(known)
    }

    /// Membership in `Lambda^+`: `v(f(s)) >= 0` for all `s`.
    pub fn lambda_plus_member(&self, f: &MahlerFunction) -> Result<bool> {
        let zero = Valuation::int(0);
        let mut floor = f.tail_val();
        for a in &f.coeffs {
            match self.ring.val(a) {
                Ok(v) if v < zero => return Ok(false),
                Ok(_) => {}
                Err(Error::IndeterminateValuation { at_least }) => floor = floor.min(at_least),
                Err(e) => return Err(e),
            }
        }
        if floor < zero {
            return Err(Error::Precision(format!("unknown coefficients only bounded below by {floor}")));
        }
        Ok(true)
    }
}

/// A finite combination `sum c * [prod (1 + z_i)^{n_i}]` on the component `chi`.
#[derive(Clone, Debug, PartialEq)]
pub struct IwasawaElem {
    pub chi: u64,
    pub terms: Vec<(LocalElem, Vec<u64>)>,
}

/// Image of `x` under the Mahler embedding, generators `1 + z_i`.
pub fn mahler_embed(space: &MahlerSpace, x: &IwasawaElem, gens: &[LocalElem]) -> Result<MahlerFunction> {
    let r = space.ring();
    for z in gens {
        let v = r.val_lb(z);
        if v < Valuation::int(1) {
            return Err(Error::Precondition(format!("generator 1 + z with v(z) = {v} is not in 1 + pi A_p")));
        }
    }
    let mut acc = space.constant(&r.exact_zero());
    for (c, exps) in &x.terms {
        if exps.len() != gens.len() {
            return Err(Error::Precondition(format!("{} exponents for {} generators", exps.len(), gens.len())));
        }
        let mut u = r.one();
        for (z, &n) in gens.iter().zip(exps) {
            u = r.mul(&u, &r.pow(&r.add(&r.one(), z), n));
        }
        let g = space.group_like(&r.sub(&u, &r.one()))?;
        acc = space.add(&acc, &space.scale(c, &g)?);
    }
    Ok(acc)
}

/// JSON form of an Iwasawa element: generators `z_i` and terms given as
/// expressions in `T`, `pi`, `w`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IwasawaSpec {
    pub q: u64,
    #[serde(default = "default_prime")]
    pub prime: String,
    pub gens: Vec<String>,
    pub terms: Vec<TermSpec>,
    #[serde(default)]
    pub chi: u64,
    #[serde(default)]
    pub truncation: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermSpec {
    pub coeff: String,
    pub exp: Vec<u64>,
}

fn default_prime() -> String {
    "T".into()
}

impl IwasawaSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))
    }

    /// Localize and parse; returns the space, element and generators.
    pub fn load(&self, prec: i64) -> Result<(Localization, IwasawaElem, Vec<LocalElem>)> {
        let (p, e) = crate::drinfeld::prime_power(self.q)?;
        let base = crate::apoly::PolyRing::new(crate::field::FieldCtx::new(p, e)?);
        let prime = expr::parse_prime(&self.prime, &base)?;
        let loc = Localization::new(&base, &prime, prec, 1)?;
        let gens = self
            .gens
            .iter()
            .enumerate()
            .map(|(i, s)| expr::parse_local(s, &loc, i + 1))
            .collect::<Result<Vec<_>>>()?;
        let terms = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| Ok((expr::parse_local(&t.coeff, &loc, i + 1)?, t.exp.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok((loc, IwasawaElem { chi: self.chi, terms }, gens))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldCtx;

    fn space(p: u64, prec: i64, j: usize) -> MahlerSpace {
        MahlerSpace::new(LocalRing::new(FieldCtx::new(p, 1).unwrap(), 1, prec), j)
    }

    #[test]
    fn lucas() {
        // 6 = 20_3, 3 = 10_3: binom(2, 1) binom(0, 0) = 2
        assert_eq!(binom_mod_p(6, 3, 3), 2);
        assert_eq!(binom_mod_p(5, 2, 3), 10 % 3);
        assert_eq!(binom_mod_p(7, 3, 2), 35 % 2);
        for n in 0..30u64 {
            for k in 0..=n {
                let exact = (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128);
                assert_eq!(binom_mod_p(n, k, 5) as u128, exact % 5);
            }
        }
    }

    #[test]
    fn group_like_coefficients_are_powers() {
        let s = space(3, 20, 6);
        let r = s.ring();
        let f = s.group_like(&r.pi()).unwrap();
        for (j, a) in f.coeffs.iter().enumerate() {
            assert_eq!(*a, r.pi_pow(j as i64));
        }
        let one = s.group_like(&r.exact_zero()).unwrap();
        assert_eq!(one, s.constant(&r.one()));
    }

    #[test]
    fn evaluation() {
        let s = space(3, 20, 8);
        let r = s.ring();
        let f = s.group_like(&r.pi()).unwrap();
        // (1+pi)^2 = 1 + 2 pi + pi^2
        let two = s.eval_weight(&f, 2).unwrap();
        assert_eq!(two, r.make(0, vec![1, 2, 1], None));
        assert_eq!(s.eval_weight(&f, 0).unwrap(), f.coeffs[0]);
        // (1+pi)^3 = 1 + pi^3 in characteristic 3
        assert_eq!(s.eval_weight(&f, 3).unwrap(), r.add(&r.one(), &r.pi_pow(3)));
        for k in 0..=20u64 {
            let expect = r.pow(&r.add(&r.one(), &r.pi()), k);
            let got = s.eval_weight(&f, k).unwrap();
            assert!(r.eq_to_prec(&got, &expect), "k = {k}");
        }
    }

    #[test]
    fn products_of_group_likes() {
        let s = space(2, 24, 10);
        let r = s.ring();
        let u = s.group_like(&r.pi()).unwrap();
        let sq = s.mul(&u, &u);
        let direct = s.group_like(&r.sub(&r.pow(&r.add(&r.one(), &r.pi()), 2), &r.one())).unwrap();
        for (a, b) in sq.coeffs.iter().zip(&direct.coeffs) {
            assert!(r.eq_to_prec(a, b));
        }
    }

    #[test]
    fn gauss_and_lambda_plus() {
        let s = space(3, 20, 8);
        let r = s.ring();
        let f = s.group_like(&r.pi()).unwrap();
        let f1 = s.sub(&f, &s.constant(&r.one())).unwrap();
        assert_eq!(s.gauss_valuation(&f1).unwrap(), Valuation::int(1));
        assert_eq!(s.gauss_valuation(&s.constant(&r.pi_pow(3))).unwrap(), Valuation::int(3));
        assert_eq!(s.gauss_valuation(&s.constant(&r.exact_zero())).unwrap(), Valuation::Infinite);
        let g = s.scale(&r.pi_pow(-1), &f1).unwrap();
        assert!(s.lambda_plus_member(&g).unwrap());
        let h = s.scale(&r.pi_pow(-2), &f1).unwrap();
        assert!(!s.lambda_plus_member(&h).unwrap());
        assert!(s.lambda_plus_member(&s.constant(&r.one())).unwrap());
    }

    #[test]
    fn finite_differences_invert() {
        let s = space(5, 20, 7);
        let r = s.ring();
        let f = s.mul(&s.group_like(&r.pi()).unwrap(), &s.group_like(&r.pi_pow(2)).unwrap());
        let back = s.from_values(&s.values(&f), f.decay);
        assert_eq!(back, f);
        // vanishing at 0..J forces vanishing coefficients
        let zeros = vec![r.exact_zero(); 8];
        assert!(s.from_values(&zeros, None).coeffs.iter().all(|a| r.is_zero(a)));
    }

    #[test]
    fn weights_and_distance() {
        let a = WeightChar::from_int(4, 3, 3, 5);
        let b = WeightChar::from_int(10, 3, 3, 5);
        assert_eq!(weight_distance(&a, &b), (true, Some(Valuation::int(1))));
        assert_eq!(weight_distance(&a, &a), (true, Some(Valuation::Infinite)));
        let c = WeightChar::from_int(5, 3, 3, 5);
        assert!(!weight_distance(&a, &c).0);
        assert_eq!(vp_diff(4, 10, 3), Valuation::int(1));
        assert_eq!(vp_diff(5, 5, 3), Valuation::Infinite);
    }

    #[test]
    fn padic_evaluation_matches_integer() {
        let s = space(3, 20, 8);
        let r = s.ring();
        let f = s.group_like(&r.pi()).unwrap();
        let w = WeightChar::from_int(7, 3, 3, 3);
        let x = s.eval_padic(&f, &w).unwrap();
        assert!(r.eq_to_prec(&x, &s.eval_weight(&f, 7).unwrap()));
        let short = WeightChar::from_int(7, 3, 3, 1);
        assert!(s.eval_padic(&f, &short).is_err());
    }

    #[test]
    fn embedding_rejects_units() {
        let s = space(3, 20, 4);
        let r = s.ring();
        let x = IwasawaElem { chi: 0, terms: vec![(r.one(), vec![1])] };
        assert!(mahler_embed(&s, &x, &[r.one()]).is_err());
        let f = mahler_embed(&s, &x, &[r.pi()]).unwrap();
        assert_eq!(f, s.group_like(&r.pi()).unwrap());
    }

    #[test]
    fn spec_loads() {
        let js = r#"{"q": 3, "gens": ["pi", "pi^2"], "terms": [{"coeff": "1", "exp": [1, 1]}, {"coeff": "-1", "exp": [0, 0]}]}"#;
        let spec = IwasawaSpec::from_json(js).unwrap();
        let (loc, x, gens) = spec.load(12).unwrap();
        let s = MahlerSpace::new(loc.ring().clone(), 6);
        let f = mahler_embed(&s, &x, &gens).unwrap();
        assert_eq!(s.gauss_valuation(&f).unwrap(), Valuation::int(1));
    }
}

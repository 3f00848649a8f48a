//! Height, Hasse invariant and the stratification by height.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::apoly::{APoly, PolyRing};
use crate::drinfeld::{rational_kernel_degree, splitting_exponent, DrinfeldModule};
use crate::error::{Error, Result};
use crate::field::{FieldCtx, Fe, FiniteField};
use crate::newton::{NewtonPolygon, Rational, Valuation};
use crate::tau::TauPoly;

/// `phi_pi` reduced modulo the prime, over the residue field.
pub fn phi_prime(phi: &DrinfeldModule<FiniteField>, prime: &APoly) -> Result<TauPoly<Fe>> {
    phi.phi_eval(prime)
}

fn check_degree(prime: &APoly) -> Result<usize> {
    match prime.degree() {
        Some(d) if d >= 1 => Ok(d),
        _ => Err(Error::Precondition("prime must have positive degree".into())),
    }
}

/// Lowest index with a nonzero coefficient, divided by `deg(prime)`.
pub fn height(phi: &DrinfeldModule<FiniteField>, prime: &APoly) -> Result<usize> {
    let d = check_degree(prime)?;
    let ell = phi_prime(phi, prime)?;
    let k = ell
        .coeffs()
        .iter()
        .position(|&c| c != 0)
        .ok_or_else(|| Error::Precision("phi_pi vanishes modulo the prime".into()))?;
    if k == 0 {
        return Err(Error::Precondition("phi is not in characteristic of the prime".into()));
    }
    if k % d != 0 {
        return Err(Error::Precondition(format!("tau-valuation {k} of phi_pi is not a multiple of {d}")));
    }
    Ok(k / d)
}

/// Coefficient of `tau^d` in `phi_pi` modulo the prime.
pub fn hasse_invariant(phi: &DrinfeldModule<FiniteField>, prime: &APoly) -> Result<Fe> {
    let d = check_degree(prime)?;
    let ell = phi_prime(phi, prime)?;
    if ell.is_zero() {
        return Err(Error::Precision("phi_pi vanishes modulo the prime".into()));
    }
    Ok(ell.coeffs().get(d).copied().unwrap_or(0))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StratumLabel {
    pub h: usize,
    pub r: usize,
    /// `w(j)` for `j = 1..r`
    pub w: Vec<usize>,
    pub l: usize,
}

/// The permutation fixing `1..h-1`, sending `h` to `r` and shifting
/// `h+1..r` down by one; `l` is its displacement sum.
pub fn stratum_label(h: usize, r: usize) -> Result<StratumLabel> {
    if h < 1 || h > r {
        return Err(Error::OutOfRange(format!("height {h} for rank {r}")));
    }
    let w: Vec<usize> = (1..=r)
        .map(|j| match j.cmp(&h) {
            std::cmp::Ordering::Less => j,
            std::cmp::Ordering::Equal => r,
            std::cmp::Ordering::Greater => j - 1,
        })
        .collect();
    let l = (1..=r).filter(|&j| j != h).map(|j| j - w[j - 1]).sum();
    Ok(StratumLabel { h, r, w, l })
}

/// Slopes from the reduction of `phi_pi`: points `(r - i, y_i)` with
/// `y_0 = 1` and `y_i = 0` exactly when the `tau^{id}` coefficient is a unit.
pub fn reduced_slopes(ell: &TauPoly<Fe>, d: usize, r: usize) -> Result<Vec<(Rational, i64)>> {
    let pts: Vec<(i64, Valuation)> = (0..=r)
        .map(|i| {
            let y = if i == 0 || ell.coeffs().get(i * d).copied().unwrap_or(0) == 0 { 1 } else { 0 };
            ((r - i) as i64, Valuation::int(y))
        })
        .collect();
    Ok(NewtonPolygon::new(&pts)?.slopes())
}

/// The three ordinarity data of one module.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criteria {
    pub height: usize,
    /// `log_q` of the number of geometric `p`-torsion points
    pub point_exponent: usize,
    pub slopes: Vec<(String, i64)>,
    pub hasse_nonzero: bool,
}

impl Criteria {
    /// Whether height, point count and slopes describe the same stratum.
    pub fn consistent(&self, q_d: usize, r: usize) -> bool {
        let h = self.height;
        let mut expect = Vec::new();
        if h < r {
            expect.push(("0".to_string(), (r - h) as i64));
        }
        expect.push((crate::newton::fmt_rational(Rational::new(1, h as i64)), h as i64));
        self.point_exponent == q_d * (r - h) && self.slopes == expect && self.hasse_nonzero == (h == 1)
    }
}

pub fn criteria(phi: &DrinfeldModule<FiniteField>, prime: &APoly) -> Result<Criteria> {
    let d = check_degree(prime)?;
    let r = phi.rank();
    let h = height(phi, prime)?;
    let ell = phi_prime(phi, prime)?;
    let field = phi.ring().ctx();
    let field_deg = field.degree() / phi.base().field().degree();
    let m = splitting_exponent(field.p(), phi.q(), (d as u32) * field_deg, r);
    let pe = rational_kernel_degree(phi.tau(), &ell, m)?;
    let slopes = reduced_slopes(&ell, d, r)?
        .into_iter()
        .map(|(s, n)| (crate::newton::fmt_rational(s), n))
        .collect();
    Ok(Criteria { height: h, point_exponent: pe, slopes, hasse_nonzero: hasse_invariant(phi, prime)? != 0 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusRow {
    pub h: usize,
    pub count: u64,
    /// `log_{q^e}(count)`
    pub exponent_estimate: f64,
    pub l_w: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Census {
    pub q: u64,
    pub r: usize,
    pub ext: u32,
    pub rows: Vec<CensusRow>,
    /// modules whose three criteria disagree (only when checked)
    pub inconsistent: usize,
}

/// Count modules `phi_T = t_0 + g_1 tau + ... + Delta tau^r` over `F_{q^e}`
/// by height, for a degree-1 prime `T - t_0`.
pub fn strata_census(base: &PolyRing, r: usize, prime: &APoly, ext: u32, bound: u64, check: bool) -> Result<Census> {
    if prime.degree() != Some(1) || prime.leading() != 1 {
        return Err(Error::Precondition("census needs a monic degree-1 prime".into()));
    }
    if r < 1 {
        return Err(Error::OutOfRange("rank 0".into()));
    }
    let small = base.field();
    let big: Arc<FieldCtx> = FieldCtx::new(small.p(), small.degree() * ext)?;
    let size = big.size();
    let total = (size as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    if total > bound as u128 {
        return Err(Error::BoundExceeded(format!("{total} coefficient tuples over bound {bound}")));
    }
    let emb = small.embedding_into(&big)?;
    let t0 = emb[small.neg(prime.coeff(0)) as usize];
    let per_height: Vec<(usize, bool)> = (0..total as u64)
        .into_par_iter()
        .filter_map(|code| {
            let mut c = code;
            let mut coeffs = vec![t0];
            for _ in 0..r {
                coeffs.push((c % size) as Fe);
                c /= size;
            }
            if coeffs[r] == 0 {
                return None;
            }
            let phi = DrinfeldModule::over_field(base, big.clone(), coeffs).ok()?;
            let h = height(&phi, prime).ok()?;
            let ok = !check || criteria(&phi, prime).map(|c| c.consistent(1, r)).unwrap_or(false);
            Some((h, ok))
        })
        .collect();
    let mut counts = vec![0u64; r + 1];
    let mut inconsistent = 0;
    for (h, ok) in per_height {
        counts[h] += 1;
        if !ok {
            inconsistent += 1;
        }
    }
    let rows = (1..=r)
        .map(|h| CensusRow {
            h,
            count: counts[h],
            exponent_estimate: if counts[h] > 0 { (counts[h] as f64).ln() / (size as f64).ln() } else { f64::NEG_INFINITY },
            l_w: stratum_label(h, r).unwrap().l,
        })
        .collect();
    Ok(Census { q: small.size(), r, ext, rows, inconsistent })
}

/// Degree of the polynomial through `(x_i, y_i)`, if the data determine it
/// (strictly more points than the degree).
pub fn interpolation_degree(points: &[(i64, i64)]) -> Option<usize> {
    let n = points.len();
    let mut dd: Vec<Rational> = points.iter().map(|&(_, y)| Rational::from_integer(y)).collect();
    let mut top = vec![dd[0]];
    for k in 1..n {
        for i in (k..n).rev() {
            let dx = Rational::from_integer(points[i].0 - points[i - k].0);
            dd[i] = (dd[i] - dd[i - 1]) / dx;
        }
        top.push(dd[k]);
    }
    let deg = top.iter().rposition(|c| *c != Rational::from_integer(0)).unwrap_or(0);
    (deg + 1 < n).then_some(deg)
}

/// Growth degree in `q^e` of each stratum across `exts`.
pub fn census_exponents(base: &PolyRing, r: usize, prime: &APoly, exts: &[u32], bound: u64) -> Result<Vec<(usize, Option<usize>)>> {
    let q = base.field().size() as i64;
    let censuses: Vec<Census> = exts
        .iter()
        .map(|&e| strata_census(base, r, prime, e, bound, false))
        .collect::<Result<_>>()?;
    Ok((1..=r)
        .map(|h| {
            let pts: Vec<(i64, i64)> = exts
                .iter()
                .zip(&censuses)
                .map(|(&e, c)| (q.pow(e), c.rows[h - 1].count as i64))
                .collect();
            (h, interpolation_degree(&pts))
        })
        .collect())
}

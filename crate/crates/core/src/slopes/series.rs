//! Characteristic series `det(1 - X M)`, slope tables, Weierstrass
//! splitting at a slope cut, distinguished-coefficient regions and
//! coefficient congruences between weights.

use num_traits::Zero;
use serde::Serialize;

use super::matrix::{charpoly, solve, Matrix};
use crate::error::{Error, Result};
use crate::local::{LocalElem, LocalRing};
use crate::newton::{NewtonPolygon, Rational, Valuation};
use crate::ring::Ring;

/// `sum_{n <= dim} a_n X^n` with `a_0 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CharSeries {
    pub dim: usize,
    pub coeffs: Vec<LocalElem>,
}

impl CharSeries {
    pub fn new(r: &LocalRing, dim: usize, coeffs: Vec<LocalElem>) -> Result<Self> {
        match coeffs.first() {
            Some(a0) if r.is_one(a0) => {}
            _ => return Err(Error::Precondition("constant term must be 1".into())),
        }
        if coeffs.len() > dim + 1 {
            return Err(Error::Precondition("more coefficients than the dimension allows".into()));
        }
        Ok(CharSeries { dim, coeffs })
    }

    pub fn coeff(&self, r: &LocalRing, n: usize) -> LocalElem {
        self.coeffs.get(n).cloned().unwrap_or_else(|| r.exact_zero())
    }
}

/// `det(1 - X M)`.
pub fn char_series(r: &LocalRing, m: &Matrix) -> CharSeries {
    let mut coeffs = charpoly(r, m);
    // det(X - M) = sum b_j X^{D-j} (highest first), so a_n = b_n
    while coeffs.len() > 1 && r.is_zero(coeffs.last().unwrap()) && coeffs.last().unwrap().is_exact() {
        coeffs.pop();
    }
    CharSeries { dim: m.rows(), coeffs }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeRow {
    pub slope: Valuation,
    pub multiplicity: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeTable {
    pub k: u32,
    pub dim: usize,
    pub rows: Vec<SlopeRow>,
}

impl SlopeTable {
    pub fn finite_slopes(&self) -> Vec<Rational> {
        let mut out = Vec::new();
        for row in &self.rows {
            if let Some(s) = row.slope.finite() {
                out.extend(std::iter::repeat_n(s, row.multiplicity as usize));
            }
        }
        out
    }

    pub fn infinite_multiplicity(&self) -> i64 {
        self.rows.iter().filter(|r| r.slope.is_infinite()).map(|r| r.multiplicity).sum()
    }
}

/// Newton polygon of a series together with its degree. Coefficients known
/// only to lie above some bound are accepted when the bound is on or above
/// the hull of the determined ones.
pub fn polygon(r: &LocalRing, cs: &CharSeries) -> Result<(Option<NewtonPolygon>, usize)> {
    let mut pts = Vec::new();
    let mut loose = Vec::new();
    for (n, a) in cs.coeffs.iter().enumerate() {
        match r.val(a) {
            Ok(Valuation::Infinite) => {}
            Ok(v) => pts.push((n as i64, v)),
            Err(Error::IndeterminateValuation { at_least }) => loose.push((n as i64, at_least)),
            Err(e) => return Err(e),
        }
    }
    let deg = pts.last().map_or(0, |p| p.0) as usize;
    if let Some(&(x, at_least)) = loose.iter().find(|l| l.0 > deg as i64) {
        return Err(Error::Precision(format!(
            "coefficient {x} known only to valuation >= {at_least}; degree undetermined"
        )));
    }
    if pts.len() < 2 {
        return Ok((None, deg));
    }
    let np = NewtonPolygon::new(&pts)?;
    for (x, at_least) in loose {
        let hull = Valuation::from(np.value_at(x).unwrap());
        if at_least < hull {
            return Err(Error::Precision(format!(
                "coefficient {x} known only to valuation >= {at_least}, below the hull"
            )));
        }
    }
    Ok((Some(np), deg))
}

/// Newton slopes of `cs` with `inf` for the dimension drop.
pub fn slope_table(r: &LocalRing, cs: &CharSeries, k: u32) -> Result<SlopeTable> {
    let (np, deg) = polygon(r, cs)?;
    let mut rows: Vec<SlopeRow> = np
        .map(|np| {
            np.slopes()
                .into_iter()
                .map(|(s, m)| SlopeRow { slope: Valuation::from(s), multiplicity: m })
                .collect()
        })
        .unwrap_or_default();
    if cs.dim > deg {
        rows.push(SlopeRow { slope: Valuation::Infinite, multiplicity: (cs.dim - deg) as i64 });
    }
    Ok(SlopeTable { k, dim: cs.dim, rows })
}

/// Number of slopes below `cut`, or `None` when `cut` is itself a slope.
pub fn count_below(r: &LocalRing, cs: &CharSeries, cut: Rational) -> Result<Option<i64>> {
    let (np, _) = polygon(r, cs)?;
    Ok(match np {
        None => Some(0),
        Some(np) => match np.count_below(cut) {
            (_, true) => None,
            (n, false) => Some(n),
        },
    })
}

fn poly_mul(r: &LocalRing, a: &[LocalElem], b: &[LocalElem]) -> Vec<LocalElem> {
    let mut out = vec![r.exact_zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = r.add(&out[i + j], &r.mul(x, y));
        }
    }
    out
}

/// Split `cs = Q P` with `Q(0) = 1`, `Q` carrying the slopes below `cut` and
/// `P` the rest. Coefficients are returned low degree first and known to
/// `pi^prec` (or the precision of `cs`, if lower).
pub fn weierstrass_factor(
    r: &LocalRing,
    cs: &CharSeries,
    cut: Rational,
    prec: i64,
) -> Result<(Vec<LocalElem>, Vec<LocalElem>)> {
    let (np, deg) = polygon(r, cs)?;
    let f: Vec<LocalElem> = cs.coeffs[..=deg].to_vec();
    let n = match &np {
        None => 0,
        Some(np) => match np.count_below(cut) {
            (_, true) => return Err(Error::Precondition(format!("a slope equals the cut {cut}"))),
            (n, false) => n as usize,
        },
    };
    if n == 0 {
        return Ok((vec![r.one()], f));
    }
    if n == deg {
        return Ok((f, vec![r.one()]));
    }
    let np = np.unwrap();
    // extra working precision covers the loss from dividing by small pivots
    let spread = np.vertices().iter().map(|v| v.1).fold(Rational::zero(), |a, b| a.max(b));
    let extra = spread.ceil().to_integer() + 2;
    let work = prec + extra;
    let goal = f
        .iter()
        .filter_map(|a| r.prec(a).finite())
        .fold(Rational::from_integer(prec), |a, b| a.min(b));
    let trunc = |v: Vec<LocalElem>| -> Vec<LocalElem> { v.iter().map(|x| r.with_prec_pi(x, work)).collect() };
    let m = deg - n;
    let an_inv = r.try_inv(&r.with_prec_pi(&f[n], work + extra))?;
    let mut qv = trunc(f[..=n].to_vec());
    let mut pv = vec![r.one()];
    for j in n + 1..=deg {
        pv.push(r.mul(&f[j], &an_inv));
    }
    pv = trunc(pv);
    for _ in 0..60 {
        let prod = poly_mul(r, &qv, &pv);
        let resid: Vec<LocalElem> = (0..=deg).map(|i| r.sub(&f[i], &prod[i])).collect();
        let worst = resid.iter().map(|x| r.val_lb(x)).min().unwrap();
        if worst >= Valuation::from(goal) {
            let out = |v: &[LocalElem]| v.iter().map(|x| r.with_prec(x, r.pi_units(prec))).collect::<Vec<_>>();
            return Ok((out(&qv), out(&pv)));
        }
        // columns: dq_1..dq_n (multiplying P), dp_0..dp_m (multiplying Q)
        let sys = Matrix::from_fn(deg + 1, deg + 1, |row, col| {
            if col < n {
                let shift = col + 1;
                if row >= shift && row - shift < pv.len() {
                    pv[row - shift].clone()
                } else {
                    r.exact_zero()
                }
            } else {
                let shift = col - n;
                if row >= shift && row - shift < qv.len() {
                    qv[row - shift].clone()
                } else {
                    r.exact_zero()
                }
            }
        });
        let delta = solve(r, &sys, &resid)?;
        for j in 0..n {
            qv[j + 1] = r.add(&qv[j + 1], &delta[j]);
        }
        for j in 0..=m {
            pv[j] = r.add(&pv[j], &delta[n + j]);
        }
        qv = trunc(qv);
        pv = trunc(pv);
    }
    Err(Error::NoConvergence("Weierstrass iteration".into()))
}

/// Per-weight count of slopes below the cut (`None` on a tie).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VnEntry {
    pub k: u32,
    pub count: Option<i64>,
}

/// Maximal run of sampled weights sharing one count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VnRegion {
    pub kmin: u32,
    pub kmax: u32,
    pub count: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VnReport {
    pub entries: Vec<VnEntry>,
    pub regions: Vec<VnRegion>,
}

/// Group sampled weights by the index `n` making the series distinguished
/// at the cut. Ties stay in their own regions.
pub fn vn_regions(r: &LocalRing, samples: &[(u32, CharSeries)], cut: Rational) -> Result<VnReport> {
    let mut entries = Vec::with_capacity(samples.len());
    for (k, cs) in samples {
        entries.push(VnEntry { k: *k, count: count_below(r, cs, cut)? });
    }
    entries.sort_by_key(|e| e.k);
    let mut regions: Vec<VnRegion> = Vec::new();
    for e in &entries {
        match regions.last_mut() {
            Some(reg) if reg.count == e.count && e.count.is_some() => reg.kmax = e.k,
            _ => regions.push(VnRegion { kmin: e.k, kmax: e.k, count: e.count }),
        }
    }
    Ok(VnReport { entries, regions })
}

/// `v(a_n - b_n)` for every coefficient index.
pub fn congruence_profile(r: &LocalRing, a: &CharSeries, b: &CharSeries) -> Result<Vec<Valuation>> {
    let len = a.coeffs.len().max(b.coeffs.len());
    (0..len)
        .map(|n| {
            let d = r.sub(&a.coeff(r, n), &b.coeff(r, n));
            r.val(&d).map_err(|e| match e {
                Error::IndeterminateValuation { at_least } => {
                    Error::Precision(format!("coefficient {n}: difference only known to exceed {at_least}"))
                }
                other => other,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldCtx;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring() -> LocalRing {
        LocalRing::new(FieldCtx::new(3, 1).unwrap(), 1, 40)
    }

    fn series(r: &LocalRing, coeffs: Vec<LocalElem>) -> CharSeries {
        let d = coeffs.len() - 1;
        CharSeries::new(r, d, coeffs).unwrap()
    }

    fn linear(r: &LocalRing, u: &LocalElem, s: i64) -> Vec<LocalElem> {
        vec![r.one(), r.neg(&r.mul(u, &r.pi_pow(s)))]
    }

    #[test]
    fn trivial_tables() {
        let r = ring();
        let t = slope_table(&r, &CharSeries::new(&r, 3, vec![r.one()]).unwrap(), 4).unwrap();
        assert_eq!(t.rows, vec![SlopeRow { slope: Valuation::Infinite, multiplicity: 3 }]);
        let cs = series(&r, vec![r.one(), r.exact_zero(), r.neg(&r.pi())]);
        let t = slope_table(&r, &cs, 0).unwrap();
        assert_eq!(t.rows, vec![SlopeRow { slope: Valuation::frac(1, 2), multiplicity: 2 }]);
        let cs = series(&r, vec![r.one(), r.constant(2)]);
        assert_eq!(slope_table(&r, &cs, 0).unwrap().rows[0].slope, Valuation::int(0));
    }

    #[test]
    fn loose_top_coefficient_rejected() {
        let r = ring();
        let cs = CharSeries::new(&r, 2, vec![r.one(), r.pi(), r.zero_mod(5)]).unwrap();
        assert!(matches!(slope_table(&r, &cs, 0), Err(Error::Precision(_))));
        let cs = CharSeries::new(&r, 3, vec![r.one(), r.zero_mod(5), r.pi()]).unwrap();
        assert!(slope_table(&r, &cs, 0).is_ok());
    }

    #[test]
    fn split_two_factors() {
        let r = ring();
        let u = r.add(&r.one(), &r.pi());
        let f = poly_mul(&r, &linear(&r, &u, 0), &linear(&r, &r.one(), 1));
        let (q, p) = weierstrass_factor(&r, &series(&r, f.clone()), Rational::new(1, 2), 20).unwrap();
        assert_eq!(q.len(), 2);
        assert!(r.eq_to_prec(&q[1], &r.neg(&u)));
        assert!(r.eq_to_prec(&p[1], &r.neg(&r.pi())));
        let (q, p) = weierstrass_factor(&r, &series(&r, f.clone()), Rational::new(-1, 2), 20).unwrap();
        assert_eq!(q, vec![r.one()]);
        assert_eq!(p, f);
        assert!(weierstrass_factor(&r, &series(&r, f), Rational::from_integer(1), 20).is_err());
    }

    #[test]
    fn split_random_products() {
        let r = ring();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f3 = r.residue().clone();
        for _ in 0..20 {
            let mut slopes: Vec<i64> = (0..6).collect();
            for i in (1..slopes.len()).rev() {
                slopes.swap(i, rng.gen_range(0..=i));
            }
            slopes.truncate(4);
            let units: Vec<LocalElem> = slopes
                .iter()
                .map(|_| {
                    let digits = (0..6).map(|i| if i == 0 { rng.gen_range(1..3) } else { rng.gen_range(0..3) });
                    r.make(0, digits.map(|d| f3.from_int(d)).collect(), None)
                })
                .collect();
            let cut_at = rng.gen_range(0..5);
            let cut = Rational::from_integer(cut_at) + Rational::new(1, 2);
            let mut f = vec![r.one()];
            let mut expect_q = vec![r.one()];
            for (u, &s) in units.iter().zip(&slopes) {
                f = poly_mul(&r, &f, &linear(&r, u, s));
                if s <= cut_at {
                    expect_q = poly_mul(&r, &expect_q, &linear(&r, u, s));
                }
            }
            let cs = series(&r, f.clone());
            let (q, p) = weierstrass_factor(&r, &cs, cut, 20).unwrap();
            assert_eq!(q.len(), expect_q.len());
            for (a, b) in q.iter().zip(&expect_q) {
                assert!(r.val_lb(&r.sub(a, b)) >= Valuation::int(18));
            }
            let prod = poly_mul(&r, &q, &p);
            for (a, b) in prod.iter().zip(&f) {
                assert!(r.val_lb(&r.sub(a, b)) >= Valuation::int(18));
            }
        }
    }

    #[test]
    fn regions() {
        let r = ring();
        let cs01 = series(&r, poly_mul(&r, &linear(&r, &r.one(), 0), &linear(&r, &r.one(), 1)));
        let rep = vn_regions(&r, &[(4, cs01.clone())], Rational::new(1, 2)).unwrap();
        assert_eq!(rep.entries[0].count, Some(1));
        let rep = vn_regions(&r, &[(4, cs01.clone()), (6, cs01.clone()), (8, cs01.clone())], Rational::new(1, 2))
            .unwrap();
        assert_eq!(rep.regions, vec![VnRegion { kmin: 4, kmax: 8, count: Some(1) }]);
        let rep = vn_regions(&r, &[(4, cs01)], Rational::from_integer(1)).unwrap();
        assert_eq!(rep.entries[0].count, None);
    }

    #[test]
    fn profile_identity() {
        let r = ring();
        let cs = series(&r, linear(&r, &r.one(), 2));
        let p = congruence_profile(&r, &cs, &cs).unwrap();
        assert!(p.iter().all(|v| v.is_infinite()));
    }
}

//! Hecke operators at `pi = T` on the weight-`k` coefficient space, their
//! characteristic series and slopes.
//!
//! The space is `P_{k-2}`, homogeneous polynomials of degree `k-2` in `X, Y`
//! with basis `X^{k-2-n} Y^n`. `U` acts by `f -> (1/pi) sum_b f(X, bX + pi Y)`
//! over `b in F_q`.

pub mod ingest;
pub mod matrix;
pub mod series;

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::local::{LocalElem, LocalRing};
use crate::newton::{Rational, Valuation};
use crate::ring::Ring;
use crate::weights::binom_mod_p;

pub use matrix::Matrix;
pub use series::{char_series, slope_table, CharSeries, SlopeRow, SlopeTable};

/// Which Hecke operator to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    U,
    T,
}

/// Weight-`k` operator matrix with its metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct HeckeMatrix {
    pub q: u64,
    pub k: u32,
    pub m: Matrix,
}

impl HeckeMatrix {
    pub fn dim(&self) -> usize {
        self.m.rows()
    }
}

/// Coefficient model of weight `k`, optionally cut down by a projector.
#[derive(Clone, Debug)]
pub struct CuspModel {
    pub k: u32,
    pub projector: Option<Matrix>,
}

impl CuspModel {
    pub fn full(k: u32) -> Self {
        CuspModel { k, projector: None }
    }

    pub fn dim(&self) -> usize {
        self.k as usize - 1
    }

    /// `e M e` when a projector is attached, `M` otherwise.
    pub fn restrict(&self, r: &LocalRing, m: &Matrix) -> Result<Matrix> {
        match &self.projector {
            None => Ok(m.clone()),
            Some(e) => {
                if e.rows() != m.rows() || !e.is_square() {
                    return Err(Error::Precondition("projector dimension mismatch".into()));
                }
                Ok(e.mul(r, m).mul(r, e))
            }
        }
    }
}

/// Local ring `F_q[[pi]]` used for the operator matrices.
pub fn operator_ring(q: u64, prec: i64) -> Result<LocalRing> {
    let (p, e) = crate::drinfeld::prime_power(q)?;
    let field: Arc<FieldCtx> = FieldCtx::new(p, e)?;
    Ok(LocalRing::new(field, 1, prec))
}

/// `sum_{b in F_q} b^m`: `-1` if `m > 0` and `(q-1) | m`, else `0`.
pub fn power_sum(q: u64, m: u64) -> i64 {
    if m > 0 && m.is_multiple_of(q - 1) {
        -1
    } else {
        0
    }
}

fn check_weight(k: u32) -> Result<()> {
    if k < 2 {
        return Err(Error::OutOfRange(format!("weight {k} below 2")));
    }
    Ok(())
}

/// Matrix of `U` on `P_{k-2}`: column `n` is the image of `X^{k-2-n} Y^n`,
/// with entry `binom(n,i) pi^{i-1} S(n-i)` in row `i`.
pub fn u_matrix(r: &LocalRing, k: u32) -> Result<HeckeMatrix> {
    check_weight(k)?;
    let f = r.residue();
    let (p, q) = (f.p(), f.size());
    let d = k as usize - 1;
    let m = Matrix::from_fn(d, d, |i, n| {
        if i > n {
            return r.exact_zero();
        }
        let c = binom_mod_p(n as u64, i as u64, p) as i64 * power_sum(q, (n - i) as u64);
        r.monomial(f.from_int(c), i as i64 - 1)
    });
    Ok(HeckeMatrix { q, k, m })
}

/// The extra level-one coset: `f -> pi^{twist-1} f(pi X, Y)`, diagonal with
/// entry `pi^{twist - 1 + k - 2 - n}` on `X^{k-2-n} Y^n`.
pub fn extra_coset(r: &LocalRing, k: u32, twist: i64) -> Matrix {
    let d = k as usize - 1;
    Matrix::from_fn(d, d, |i, n| {
        if i == n {
            r.pi_pow(twist - 1 + k as i64 - 2 - n as i64)
        } else {
            r.exact_zero()
        }
    })
}

/// Level-one `T = U + extra coset` with twist `2`, the least twist for which
/// `T = U mod pi` holds on every weight.
pub fn t_matrix(r: &LocalRing, k: u32) -> Result<HeckeMatrix> {
    let u = u_matrix(r, k)?;
    Ok(HeckeMatrix { m: u.m.add(r, &extra_coset(r, k, 2)), ..u })
}

pub fn operator_matrix(r: &LocalRing, op: Operator, k: u32) -> Result<HeckeMatrix> {
    match op {
        Operator::U => u_matrix(r, k),
        Operator::T => t_matrix(r, k),
    }
}

/// Least entrywise valuation of `A - B`.
pub fn congruence_valuation(r: &LocalRing, a: &Matrix, b: &Matrix) -> Valuation {
    a.sub(r, b).min_valuation(r)
}

/// Number of unit eigenvalues, i.e. the multiplicity of slope `0`.
pub fn ordinary_rank(table: &SlopeTable) -> i64 {
    table
        .rows
        .iter()
        .filter(|row| row.slope == Valuation::int(0))
        .map(|row| row.multiplicity)
        .sum()
}

/// Spectral projector onto the slope-zero part.
#[derive(Clone, Debug)]
pub struct Projector {
    pub rank: i64,
    pub e: Matrix,
}

/// Slope-zero spectral projector `e = s(M) B(M)` where the characteristic
/// polynomial splits as `A B` with `A` collecting the unit roots and
/// `s B = 1 mod A`.
pub fn ordinary_projector(r: &LocalRing, m: &Matrix, prec: i64) -> Result<Projector> {
    let n = m.rows();
    let cs = char_series(r, m);
    let table = slope_table(r, &cs, 0)?;
    let rank = ordinary_rank(&table);
    if rank == 0 {
        return Ok(Projector { rank, e: Matrix::zeros(r, n, n) });
    }
    if rank as usize == n {
        return Ok(Projector { rank, e: Matrix::identity(r, n) });
    }
    let least_positive = table
        .rows
        .iter()
        .filter_map(|row| row.slope.finite())
        .filter(|s| *s > Rational::zero())
        .min()
        .unwrap_or_else(|| Rational::from_integer(1));
    let (qf, pf) = series::weierstrass_factor(r, &cs, least_positive / Rational::from_integer(2), prec)?;
    let rank_u = rank as usize;
    // A(X) = X^rank Q(1/X) is monic; B(X) = X^{n-rank} P(1/X), padded for zero eigenvalues
    let a_low: Vec<LocalElem> = (0..=rank_u).map(|j| qf[rank_u - j].clone()).collect();
    let bdeg = n - rank_u;
    let b_low: Vec<LocalElem> = (0..=bdeg)
        .map(|j| pf.get(bdeg - j).cloned().unwrap_or_else(|| r.exact_zero()))
        .collect();
    // multiplication by B on F[X]/(A), basis 1..X^{rank-1}
    let reduce = |mut c: Vec<LocalElem>| -> Vec<LocalElem> {
        while c.len() > rank_u {
            let top = c.pop().unwrap();
            let base = c.len() - rank_u;
            for (j, aj) in a_low.iter().take(rank_u).enumerate() {
                c[base + j] = r.sub(&c[base + j], &r.mul(&top, aj));
            }
        }
        c.resize(rank_u, r.exact_zero());
        c
    };
    let b_red = reduce(b_low.clone());
    let mut cols: Vec<Vec<LocalElem>> = Vec::with_capacity(rank_u);
    let mut cur = b_red;
    for _ in 0..rank_u {
        cols.push(cur.clone());
        let mut shifted = vec![r.exact_zero()];
        shifted.extend(cur);
        cur = reduce(shifted);
    }
    let mb = Matrix::from_fn(rank_u, rank_u, |i, j| cols[j][i].clone());
    let mut unit = vec![r.exact_zero(); rank_u];
    unit[0] = r.one();
    let s = matrix::solve(r, &mb, &unit)?;
    let e = matrix::eval_poly(r, &s, m, Some(prec)).mul(r, &matrix::eval_poly(r, &b_low, m, Some(prec)));
    Ok(Projector { rank, e: e.truncate(r, prec) })
}

/// `lim M^{n!}` computed modulo `pi^prec`; requires integral entries.
pub fn projector_by_powers(r: &LocalRing, m: &Matrix, prec: i64) -> Result<Matrix> {
    if !m.is_integral(r) {
        return Err(Error::Precondition("power iteration needs an integral matrix".into()));
    }
    let mut e = m.truncate(r, prec);
    for i in 2..=64u64 {
        let next = e.pow(r, i, Some(prec));
        let stable = next.eq_to_prec(r, &e) && next.mul(r, &next).truncate(r, prec).eq_to_prec(r, &next);
        e = next;
        if stable {
            return Ok(e);
        }
    }
    Err(Error::NoConvergence("M^{n!} did not stabilize".into()))
}

/// A slope row annotated with the small-slope classicality criterion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalRow {
    pub slope: Valuation,
    pub multiplicity: i64,
    pub classical: bool,
}

/// Flag finite slopes `< k - 1` (rank 2) as classical.
pub fn classicity_filter(table: &SlopeTable, k: u32) -> Vec<ClassicalRow> {
    let bound = Valuation::int(k as i64 - 1);
    table
        .rows
        .iter()
        .map(|row| ClassicalRow {
            slope: row.slope,
            multiplicity: row.multiplicity,
            classical: !row.slope.is_infinite() && row.slope < bound,
        })
        .collect()
}

/// Slope table of an operator at weight `k`.
pub fn weight_slopes(r: &LocalRing, op: Operator, k: u32) -> Result<SlopeTable> {
    let h = operator_matrix(r, op, k)?;
    slope_table(r, &char_series(r, &h.m), k)
}

fn check_same_class(q: u64, k: u32, kp: u32) -> Result<()> {
    if (k as i64 - kp as i64).rem_euclid(q as i64 - 1) != 0 {
        return Err(Error::Precondition(format!("weights {k} and {kp} differ modulo q-1 = {}", q - 1)));
    }
    Ok(())
}

/// `v(a_n(k) - a_n(k'))` for `n < terms`, for the characteristic series at
/// two weights of the same character class.
pub fn gm_scan(r: &LocalRing, op: Operator, k: u32, kp: u32, terms: usize) -> Result<Vec<Valuation>> {
    check_same_class(r.residue().size(), k, kp)?;
    let a = char_series(r, &operator_matrix(r, op, k)?.m);
    let b = char_series(r, &operator_matrix(r, op, kp)?.m);
    let mut profile = series::congruence_profile(r, &a, &b)?;
    profile.resize(terms, Valuation::Infinite);
    Ok(profile)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GmRung {
    pub m: u32,
    pub kprime: u32,
    pub profile: Vec<Valuation>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GmLadder {
    pub k: u32,
    pub rungs: Vec<GmRung>,
    /// every coefficient's valuation is nondecreasing along the ladder
    pub monotone: bool,
}

/// Profiles along `k' = k + (q-1) p^m`, `m = 0..=m_max`, over the
/// coefficients `a_0..a_{k-1}` that exist at weight `k`.
pub fn gm_ladder(r: &LocalRing, op: Operator, k: u32, m_max: u32) -> Result<GmLadder> {
    use rayon::prelude::*;
    let f = r.residue();
    let (p, q) = (f.p() as u32, f.size() as u32);
    let rungs: Result<Vec<GmRung>> = (0..=m_max)
        .into_par_iter()
        .map(|m| {
            let kprime = k + (q - 1) * p.pow(m);
            Ok(GmRung { m, kprime, profile: gm_scan(r, op, k, kprime, k as usize)? })
        })
        .collect();
    let rungs = rungs?;
    let monotone = (0..k as usize).all(|n| rungs.windows(2).all(|w| w[0].profile[n] <= w[1].profile[n]));
    Ok(GmLadder { k, rungs, monotone })
}

/// Distinguished-index regions over `kmin..=kmax`.
pub fn vn_scan(r: &LocalRing, op: Operator, kmin: u32, kmax: u32, cut: Rational) -> Result<series::VnReport> {
    use rayon::prelude::*;
    check_weight(kmin)?;
    let samples: Result<Vec<(u32, CharSeries)>> = (kmin..=kmax)
        .into_par_iter()
        .map(|k| Ok((k, char_series(r, &operator_matrix(r, op, k)?.m))))
        .collect();
    series::vn_regions(r, &samples?, cut)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankStep {
    pub k: u32,
    pub m: u32,
    pub kprime: u32,
    pub rank: i64,
    pub rank_prime: i64,
}

/// Ordinary ranks along `k -> k + (q-1) p^m` for `k` in `kmin..=kmax`.
pub fn rank_ladders(r: &LocalRing, op: Operator, kmin: u32, kmax: u32, m_max: u32) -> Result<Vec<RankStep>> {
    use rayon::prelude::*;
    let f = r.residue();
    let (p, q) = (f.p() as u32, f.size() as u32);
    let pairs: Vec<(u32, u32, u32)> = (kmin..=kmax)
        .flat_map(|k| (0..=m_max).map(move |m| (k, m, k + (q - 1) * p.pow(m))))
        .collect();
    let mut weights: Vec<u32> = pairs.iter().flat_map(|&(k, _, kp)| [k, kp]).collect();
    weights.sort_unstable();
    weights.dedup();
    let ranks: Result<HashMap<u32, i64>> = weights
        .into_par_iter()
        .map(|w| Ok((w, ordinary_rank(&weight_slopes(r, op, w)?))))
        .collect();
    let ranks = ranks?;
    Ok(pairs
        .into_iter()
        .map(|(k, m, kprime)| RankStep { k, m, kprime, rank: ranks[&k], rank_prime: ranks[&kprime] })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(q: u64) -> LocalRing {
        operator_ring(q, 30).unwrap()
    }

    #[test]
    fn power_sums() {
        // brute force over F_3 and F_4
        for (p, e) in [(3u64, 1u32), (2, 2)] {
            let f = FieldCtx::new(p, e).unwrap();
            let q = f.size();
            for m in 0..10u64 {
                let s = f.elements().fold(0, |acc, b| f.add(acc, f.pow(b, m)));
                assert_eq!(s, f.from_int(power_sum(q, m)), "q={q} m={m}");
            }
        }
    }

    #[test]
    fn weight_two_is_zero() {
        let r = ring(3);
        let u = u_matrix(&r, 2).unwrap();
        assert_eq!(u.dim(), 1);
        assert!(r.is_zero(u.m.get(0, 0)));
    }

    #[test]
    fn q3_columns() {
        let r = ring(3);
        let u = u_matrix(&r, 6).unwrap();
        // Y^3 column vanishes; Y^4 keeps only i = 0 (S(4) = -1, binom(4,2) = 0 mod 3)
        for i in 0..5 {
            assert!(r.is_zero(u.m.get(i, 3)), "entry ({i},3)");
        }
        assert_eq!(r.val(u.m.get(0, 4)).unwrap(), Valuation::int(-1));
        for i in 1..5 {
            assert!(r.is_zero(u.m.get(i, 4)), "entry ({i},4)");
        }
        // Y^2: i = 0 gives binom(2,0) pi^{-1} S(2) = -1/pi
        assert_eq!(r.val(u.m.get(0, 2)).unwrap(), Valuation::int(-1));
    }

    #[test]
    fn u_matches_coset_sum() {
        // expand (1/pi) sum_b (bX + pi Y)^n directly
        let r = ring(3);
        let f = r.residue().clone();
        let k = 9;
        let u = u_matrix(&r, k).unwrap();
        for n in 0..(k as usize - 1) {
            let mut col = vec![r.exact_zero(); k as usize - 1];
            for b in f.elements() {
                // (bX + pi Y)^n = sum_i C(n,i) b^{n-i} pi^i X^{n-i} Y^i
                let mut c = 1i64;
                for i in 0..=n {
                    let coeff = f.mul(f.from_int(c), f.pow(b, (n - i) as u64));
                    col[i] = r.add(&col[i], &r.monomial(coeff, i as i64 - 1));
                    c = c * (n - i) as i64 / (i as i64 + 1);
                }
            }
            for i in 0..col.len() {
                assert!(r.eq_to_prec(&col[i], u.m.get(i, n)), "({i},{n})");
            }
        }
    }

    #[test]
    fn hecke_congruence() {
        for q in [2, 3] {
            let r = ring(q);
            for k in 2..=12 {
                let u = u_matrix(&r, k).unwrap();
                let t = t_matrix(&r, k).unwrap();
                assert!(congruence_valuation(&r, &t.m, &u.m) >= Valuation::int(1));
            }
        }
        // twist 1 breaks it on the top basis vector
        let r = ring(3);
        let u = u_matrix(&r, 5).unwrap();
        let t1 = u.m.add(&r, &extra_coset(&r, 5, 1));
        assert_eq!(congruence_valuation(&r, &t1, &u.m), Valuation::int(0));
    }

    #[test]
    fn classicity() {
        let table = SlopeTable {
            k: 5,
            dim: 3,
            rows: vec![
                SlopeRow { slope: Valuation::int(0), multiplicity: 1 },
                SlopeRow { slope: Valuation::int(3), multiplicity: 1 },
                SlopeRow { slope: Valuation::int(4), multiplicity: 1 },
                SlopeRow { slope: Valuation::Infinite, multiplicity: 1 },
            ],
        };
        let flags: Vec<bool> = classicity_filter(&table, 5).iter().map(|r| r.classical).collect();
        assert_eq!(flags, vec![true, true, false, false]);
    }

    #[test]
    fn t_slopes_are_diagonal_valuations() {
        // T is upper triangular, so its eigenvalues are its diagonal entries
        let r = ring(3);
        let t = t_matrix(&r, 8).unwrap();
        for i in 0..t.dim() {
            for j in 0..i {
                assert!(r.is_zero(t.m.get(i, j)));
            }
        }
        let mut expect: Vec<Rational> =
            (0..t.dim()).map(|i| r.val(t.m.get(i, i)).unwrap().finite().unwrap()).collect();
        expect.sort();
        let table = weight_slopes(&r, Operator::T, 8).unwrap();
        assert_eq!(table.finite_slopes(), expect);
        let u = weight_slopes(&r, Operator::U, 8).unwrap();
        assert_eq!(u.rows, vec![SlopeRow { slope: Valuation::Infinite, multiplicity: 7 }]);
    }

    #[test]
    fn gm_preconditions_and_identity() {
        let r = ring(3);
        assert!(gm_scan(&r, Operator::T, 6, 6, 6).unwrap().iter().all(|v| v.is_infinite()));
        assert!(matches!(gm_scan(&r, Operator::T, 6, 7, 6), Err(Error::Precondition(_))));
        let ladder = gm_ladder(&r, Operator::T, 6, 2).unwrap();
        assert_eq!(ladder.rungs.iter().map(|g| g.kprime).collect::<Vec<_>>(), vec![8, 12, 24]);
        assert!(ladder.rungs.iter().all(|g| g.profile.len() == 6));
        assert!(ladder.monotone);
        // a_6 vanishes at weight 6 only
        let wide = gm_scan(&r, Operator::T, 6, 12, 8).unwrap();
        assert_eq!(wide.len(), 8);
        assert!(!wide[6].is_infinite());
    }

    #[test]
    fn projectors() {
        let r = ring(3);
        let u = r.add(&r.constant(2), &r.pi());
        let v = r.mul(&r.pi(), &r.add(&r.one(), &r.pi()));
        let m = Matrix::from_rows(vec![vec![u.clone(), r.one()], vec![r.exact_zero(), v.clone()]]).unwrap();
        let p = ordinary_projector(&r, &m, 12).unwrap();
        assert_eq!(p.rank, 1);
        let by_pow = projector_by_powers(&r, &m, 12).unwrap();
        assert!(p.e.eq_to_prec(&r, &by_pow));
        // idempotent and commuting with M
        assert!(p.e.mul(&r, &p.e).truncate(&r, 12).eq_to_prec(&r, &p.e));
        assert!(p.e.mul(&r, &m).truncate(&r, 12).eq_to_prec(&r, &m.mul(&r, &p.e).truncate(&r, 12)));
        // diagonal case
        let d = Matrix::from_rows(vec![vec![u, r.exact_zero()], vec![r.exact_zero(), v]]).unwrap();
        let pd = ordinary_projector(&r, &d, 12).unwrap();
        assert!(r.is_one(pd.e.get(0, 0)) && r.is_zero(pd.e.get(1, 1)) && r.is_zero(pd.e.get(0, 1)));
        // nilpotent
        let nil = u_matrix(&r, 8).unwrap();
        let pn = ordinary_projector(&r, &nil.m, 12).unwrap();
        assert_eq!(pn.rank, 0);
        assert!(pn.e.min_valuation(&r).is_infinite());
    }
}

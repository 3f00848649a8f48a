//! Quick invariant checks run by `drinfeld selftest`, each against an
//! independent computation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::apoly::PolyRing;
use crate::canonical::{can_sub_exists_1, LocalDrinfeld};
use crate::drinfeld::DrinfeldModule;
use crate::error::{Error, Result};
use crate::field::{FieldCtx, FiniteField};
use crate::kassaei::{kassaei_sum, CorrGraph, Label};
use crate::local::{LocalRing, Localization};
use crate::newton::{NewtonPolygon, Rational, Valuation};
use crate::ring::Ring;
use crate::slopes::{self, series};
use crate::tau::TauRing;
use crate::weights::MahlerSpace;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

type CheckFn = fn(&mut ChaCha8Rng) -> Result<String>;

/// Run every check with a generator seeded from `seed`.
pub fn run(seed: u64) -> Vec<Check> {
    let checks: [(&str, CheckFn); 9] = [
        ("newton-hull", newton_hull),
        ("tau-division", tau_division),
        ("census-q2-r2-e3", census),
        ("canonical-break", canonical_break),
        ("hecke-congruence", hecke_congruence),
        ("weierstrass", weierstrass),
        ("mahler-roundtrip", mahler_roundtrip),
        ("lambda-plus", lambda_plus),
        ("kassaei-ratio", kassaei_ratio),
    ];
    checks
        .iter()
        .enumerate()
        .map(|(i, (name, f))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
            let (passed, detail) = match f(&mut rng) {
                Ok(d) => (true, d),
                Err(e) => (false, e.to_string()),
            };
            Check { name: name.to_string(), passed, detail }
        })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Precondition(msg()))
    }
}

fn newton_hull(rng: &mut ChaCha8Rng) -> Result<String> {
    for _ in 0..200 {
        let n = rng.gen_range(2..8);
        let pts: Vec<(i64, Rational)> =
            (0..n).map(|i| (i as i64, Rational::new(rng.gen_range(-6..7), rng.gen_range(1..4)))).collect();
        let np = NewtonPolygon::new(&pts.iter().map(|&(x, y)| (x, Valuation::Finite(y))).collect::<Vec<_>>())?;
        for x in 0..n as i64 {
            // lower envelope of all chords through x
            let mut best = pts[x as usize].1;
            for a in &pts {
                for b in &pts {
                    if a.0 < x && x < b.0 {
                        let t = Rational::new(x - a.0, b.0 - a.0);
                        best = best.min(a.1 + (b.1 - a.1) * t);
                    }
                }
            }
            ensure(np.value_at(x) == Some(best), || format!("hull at {x} for {pts:?}"))?;
        }
    }
    Ok("200 random point sets".into())
}

fn tau_division(rng: &mut ChaCha8Rng) -> Result<String> {
    let f = FiniteField::new(3, 2)?;
    let tr = TauRing::new(f.clone(), 3);
    let size = f.ctx().size() as u32;
    for _ in 0..100 {
        let rand_poly = |rng: &mut ChaCha8Rng, deg: usize| {
            let mut c: Vec<u32> = (0..=deg).map(|_| rng.gen_range(0..size)).collect();
            c[deg] = rng.gen_range(1..size);
            tr.make(c)
        };
        let (da, db) = (rng.gen_range(0..4), rng.gen_range(0..4));
        let (a, b) = (rand_poly(rng, da), rand_poly(rng, db));
        let (quo, rem) = tr.skew_right_divide(&tr.mul(&a, &b), &b)?;
        ensure(quo == a && rem.is_zero(), || "quotient of a*b by b".into())?;
    }
    Ok("100 products over F_9".into())
}

fn census(_: &mut ChaCha8Rng) -> Result<String> {
    let base = PolyRing::new(FieldCtx::new(2, 1)?);
    let c = crate::strata::strata_census(&base, 2, &base.t(), 3, 1 << 20, true)?;
    let counts: Vec<u64> = c.rows.iter().map(|r| r.count).collect();
    ensure(counts == vec![49, 7] && c.inconsistent == 0, || format!("counts {counts:?}"))?;
    Ok("(49, 7), criteria agree".into())
}

/// First Newton segment of `(Q^i, v(c_i))` ends exactly at `Q`.
fn break_at_q(vals: &[Valuation], q: i64) -> bool {
    let mut pts = Vec::new();
    let mut qi = 1;
    for v in vals {
        pts.push((qi, *v));
        qi *= q;
    }
    NewtonPolygon::new(&pts).is_ok_and(|np| np.is_vertex(q) && np.segments()[0].length == q - 1)
}

fn canonical_break(rng: &mut ChaCha8Rng) -> Result<String> {
    let a = PolyRing::new(FieldCtx::new(3, 1)?);
    let loc = Localization::new(&a, &a.t(), 24, 4)?;
    let r = loc.ring();
    let mut agree = 0;
    for _ in 0..40 {
        // v(c_1) in [0, 3/4) in steps of 1/4, c_2 a unit
        let e1 = rng.gen_range(0..3);
        let c1 = r.mul(&r.pow(&r.w(), e1), &r.add(&r.constant(rng.gen_range(1..3)), &r.w()));
        let c2 = r.constant(rng.gen_range(1..3));
        let consts = a.field().elements().map(|c| r.constant(c)).collect();
        let m = DrinfeldModule::new(a.clone(), r.clone(), consts, vec![r.pi(), c1.clone(), c2.clone()])?;
        let phi = LocalDrinfeld::new(m, &a.t())?;
        let vals = [Valuation::int(1), r.val(&c1)?, r.val(&c2)?];
        ensure(can_sub_exists_1(&phi)? == break_at_q(&vals, 3), || format!("v(c1) = {}", vals[1]))?;
        agree += 1;
    }
    Ok(format!("{agree} modules"))
}

fn hecke_congruence(_: &mut ChaCha8Rng) -> Result<String> {
    for q in [2, 3] {
        let r = slopes::operator_ring(q, 40)?;
        for k in 2..=30 {
            let u = slopes::u_matrix(&r, k)?;
            let t = slopes::t_matrix(&r, k)?;
            let v = slopes::congruence_valuation(&r, &t.m, &u.m);
            ensure(v >= Valuation::int(1), || format!("q={q} k={k}: v(T-U) = {v}"))?;
        }
    }
    Ok("q in {2,3}, 2 <= k <= 30".into())
}

fn poly_mul(r: &LocalRing, a: &[crate::local::LocalElem], b: &[crate::local::LocalElem]) -> Vec<crate::local::LocalElem> {
    let mut out = vec![r.exact_zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = r.add(&out[i + j], &r.mul(x, y));
        }
    }
    out
}

fn weierstrass(rng: &mut ChaCha8Rng) -> Result<String> {
    let r = LocalRing::new(FieldCtx::new(3, 1)?, 1, 40);
    for _ in 0..10 {
        let slopes: Vec<i64> = (0..4).map(|_| rng.gen_range(0..5)).collect();
        let cut_at = rng.gen_range(0..5);
        let mut f = vec![r.one()];
        for &s in &slopes {
            let u = r.add(&r.constant(rng.gen_range(1..3)), &r.pi());
            f = poly_mul(&r, &f, &[r.one(), r.neg(&r.mul(&u, &r.pi_pow(s)))]);
        }
        let cs = series::CharSeries::new(&r, f.len() - 1, f.clone())?;
        let (qf, pf) = series::weierstrass_factor(&r, &cs, Rational::new(2 * cut_at + 1, 2), 20)?;
        let below = slopes.iter().filter(|&&s| s <= cut_at).count();
        ensure(qf.len() == below + 1, || format!("deg Q {} for slopes {slopes:?}", qf.len() - 1))?;
        for (x, y) in poly_mul(&r, &qf, &pf).iter().zip(&f) {
            ensure(r.val_lb(&r.sub(x, y)) >= Valuation::int(18), || "Q P != F".into())?;
        }
    }
    Ok("10 products of four linear factors".into())
}

fn mahler_roundtrip(_: &mut ChaCha8Rng) -> Result<String> {
    let space = MahlerSpace::new(LocalRing::new(FieldCtx::new(3, 1)?, 1, 30), 30);
    let r = space.ring();
    let f = space.group_like(&r.pi())?;
    for k in 0..=20u64 {
        let direct = r.pow(&r.add(&r.one(), &r.pi()), k);
        ensure(r.eq_to_prec(&space.eval_weight(&f, k)?, &direct), || format!("k = {k}"))?;
    }
    Ok("[1+pi] at k <= 20".into())
}

fn lambda_plus(_: &mut ChaCha8Rng) -> Result<String> {
    let space = MahlerSpace::new(LocalRing::new(FieldCtx::new(3, 1)?, 1, 30), 30);
    let r = space.ring();
    let g = space.sub(&space.group_like(&r.pi())?, &space.constant(&r.one()))?;
    let one = space.scale(&r.pi_pow(-1), &g)?;
    let two = space.scale(&r.pi_pow(-2), &g)?;
    ensure(space.lambda_plus_member(&one)? && !space.lambda_plus_member(&two)?, || "membership".into())?;
    Ok("/pi accepted, /pi^2 rejected".into())
}

fn kassaei_ratio(rng: &mut ChaCha8Rng) -> Result<String> {
    let g = CorrGraph::new(
        vec![("y".into(), Rational::from_integer(0)), ("g".into(), Rational::from_integer(1))],
        vec![("y".into(), "y".into(), Some(Label::Bad)), ("y".into(), "g".into(), Some(Label::Good))],
        Rational::from_integer(0),
    )?;
    for _ in 0..20 {
        let k = rng.gen_range(2..12);
        let v_a = Rational::new(rng.gen_range(0..4 * k), 4);
        let s = kassaei_sum(&g, "y", &Default::default(), k, 2, v_a, 8)?;
        let margin = Rational::from_integer(k - 1) - v_a;
        ensure(s.ratio == Some(Valuation::Finite(margin)), || format!("k={k} v_a={v_a}"))?;
        ensure(s.decays() == (margin > Rational::from_integer(0)), || format!("k={k} v_a={v_a}"))?;
    }
    Ok("20 bad chains".into())
}

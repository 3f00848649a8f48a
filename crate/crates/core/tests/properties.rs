use drinfeld_padic::field::{FieldCtx, FiniteField};
use drinfeld_padic::local::{LocalElem, LocalRing};
use drinfeld_padic::newton::{NewtonPolygon, Rational, Valuation};
use drinfeld_padic::ring::Ring;
use drinfeld_padic::slopes::{char_series, series, slope_table, Matrix};
use drinfeld_padic::tau::TauRing;
use drinfeld_padic::weights::MahlerSpace;
use proptest::prelude::*;

fn f3() -> LocalRing {
    LocalRing::new(FieldCtx::new(3, 1).unwrap(), 1, 30)
}

fn elem(r: &LocalRing, start: i64, digits: &[u32], prec: Option<i64>) -> LocalElem {
    r.make(start, digits.to_vec(), prec)
}

fn digits(len: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..3, 1..=len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hull_matches_chord_envelope(ys in prop::collection::vec((-8i64..9, 1i64..4), 2..=8)) {
        let pts: Vec<(i64, Rational)> = ys.iter().enumerate().map(|(i, &(a, b))| (i as i64, Rational::new(a, b))).collect();
        let np = NewtonPolygon::new(&pts.iter().map(|&(x, y)| (x, Valuation::Finite(y))).collect::<Vec<_>>()).unwrap();
        for x in 0..pts.len() as i64 {
            let mut best = pts[x as usize].1;
            for a in &pts {
                for b in &pts {
                    if a.0 < x && x < b.0 {
                        best = best.min(a.1 + (b.1 - a.1) * Rational::new(x - a.0, b.0 - a.0));
                    }
                }
            }
            prop_assert_eq!(np.value_at(x), Some(best));
        }
        // slopes strictly increase and lengths add up
        let segs = np.segments();
        prop_assert!(segs.windows(2).all(|w| w[0].slope < w[1].slope));
        prop_assert_eq!(segs.iter().map(|s| s.length).sum::<i64>(), pts.len() as i64 - 1);
    }

    #[test]
    fn truncated_arithmetic_is_honest(
        (sa, da) in (-2i64..3, digits(8)),
        (sb, db) in (-2i64..3, digits(8)),
        pa in 0i64..8,
        pb in 0i64..8,
    ) {
        let r = f3();
        let (xa, xb) = (elem(&r, sa, &da, None), elem(&r, sb, &db, None));
        let (ta, tb) = (r.with_prec(&xa, sa + pa), r.with_prec(&xb, sb + pb));
        for (approx, exact) in [
            (r.add(&ta, &tb), r.add(&xa, &xb)),
            (r.sub(&ta, &tb), r.sub(&xa, &xb)),
            (r.mul(&ta, &tb), r.mul(&xa, &xb)),
        ] {
            prop_assert!(r.eq_to_prec(&approx, &exact));
            if let Ok(v) = r.val(&approx) {
                prop_assert_eq!(r.val(&exact).unwrap(), v);
            } else {
                prop_assert!(r.val_lb(&exact) >= r.prec(&approx));
            }
        }
        if let Ok(inv) = r.try_inv(&ta) {
            prop_assert!(r.is_one(&r.mul(&inv, &xa)));
        }
    }

    #[test]
    fn right_division_recovers_factor(
        a in prop::collection::vec(0u32..9, 1..5),
        b in prop::collection::vec(0u32..9, 1..5),
        lead in 1u32..9,
    ) {
        let f = FiniteField::new(3, 2).unwrap();
        let tr = TauRing::new(f, 3);
        let mut b = b;
        b.push(lead);
        let (pa, pb) = (tr.make(a), tr.make(b));
        let (quo, rem) = tr.skew_right_divide(&tr.mul(&pa, &pb), &pb).unwrap();
        prop_assert_eq!(quo, pa);
        prop_assert!(rem.is_zero());
    }
}

fn mono(r: &LocalRing, c: u32, k: i64) -> LocalElem {
    r.monomial(c, k)
}

fn unipotent(r: &LocalRing, n: usize, entries: &[(u32, i64)]) -> (Matrix, Matrix) {
    let mut nil = Matrix::zeros(r, n, n);
    let mut it = entries.iter().cycle();
    for i in 0..n {
        for j in i + 1..n {
            let &(c, k) = it.next().unwrap();
            nil.set(i, j, mono(r, c, k));
        }
    }
    // (I + N)^{-1} = I - N + N^2 - ...
    let id = Matrix::identity(r, n);
    let p = id.add(r, &nil);
    let mut inv = id.clone();
    let mut pow = id;
    for s in 1..n {
        pow = pow.mul(r, &nil);
        let term = if s % 2 == 1 { pow.map(|x| r.neg(x)) } else { pow.clone() };
        inv = inv.add(r, &term);
    }
    (p, inv)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn slopes_are_basis_independent(
        ent in prop::collection::vec((0u32..3, -1i64..4), 16),
        conj in prop::collection::vec((0u32..3, 0i64..3), 6),
    ) {
        let r = f3();
        let m = Matrix::from_fn(4, 4, |i, j| {
            let (c, k) = ent[4 * i + j];
            mono(&r, c, k)
        });
        let (p, pinv) = unipotent(&r, 4, &conj);
        prop_assert!(p.mul(&r, &pinv).eq_to_prec(&r, &Matrix::identity(&r, 4)));
        let conj_m = p.mul(&r, &m).mul(&r, &pinv);
        let a = slope_table(&r, &char_series(&r, &m), 0).unwrap();
        let b = slope_table(&r, &char_series(&r, &conj_m), 0).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn char_series_matches_permutation_expansion(
        ent in prop::collection::vec(prop::collection::vec(0u32..3, 10), 9),
    ) {
        // entries in F_3[T]/(T^10)
        let r = f3();
        let m = Matrix::from_fn(3, 3, |i, j| r.make(0, ent[3 * i + j].clone(), Some(10)));
        let cs = char_series(&r, &m);
        // det(1 - X M) = sum over permutations of sign * prod (delta - X m)
        let perms = [([0, 1, 2], 1), ([0, 2, 1], -1), ([1, 0, 2], -1), ([1, 2, 0], 1), ([2, 0, 1], 1), ([2, 1, 0], -1)];
        let mut expect = vec![r.exact_zero(); 4];
        for (perm, sign) in perms {
            let mut poly = vec![r.one()];
            for (i, &j) in perm.iter().enumerate() {
                let c0 = if i == j { r.one() } else { r.exact_zero() };
                let c1 = r.neg(m.get(i, j));
                let mut next = vec![r.exact_zero(); poly.len() + 1];
                for (d, x) in poly.iter().enumerate() {
                    next[d] = r.add(&next[d], &r.mul(x, &c0));
                    next[d + 1] = r.add(&next[d + 1], &r.mul(x, &c1));
                }
                poly = next;
            }
            for (d, x) in poly.into_iter().enumerate() {
                expect[d] = if sign > 0 { r.add(&expect[d], &x) } else { r.sub(&expect[d], &x) };
            }
        }
        for d in 0..4 {
            prop_assert!(r.eq_to_prec(&cs.coeff(&r, d), &expect[d]), "coefficient {}", d);
        }
    }

    #[test]
    fn weierstrass_counts_slopes(
        slopes in prop::collection::vec(0i64..5, 1..5),
        units in prop::collection::vec(1u32..3, 5),
        cut in 0i64..5,
    ) {
        let r = LocalRing::new(FieldCtx::new(3, 1).unwrap(), 1, 40);
        let mut f = vec![r.one()];
        for (&s, &u) in slopes.iter().zip(&units) {
            let a = r.neg(&r.mul(&r.add(&r.constant(u), &r.pi()), &r.pi_pow(s)));
            let mut next = vec![r.exact_zero(); f.len() + 1];
            for (d, x) in f.iter().enumerate() {
                next[d] = r.add(&next[d], x);
                next[d + 1] = r.add(&next[d + 1], &r.mul(x, &a));
            }
            f = next;
        }
        let cs = series::CharSeries::new(&r, f.len() - 1, f.clone()).unwrap();
        let prec = 20;
        let (q, p) = series::weierstrass_factor(&r, &cs, Rational::new(2 * cut + 1, 2), prec).unwrap();
        prop_assert_eq!(q.len() - 1, slopes.iter().filter(|&&s| s <= cut).count());
        prop_assert!(r.is_one(&q[0]));
        let mut prod = vec![r.exact_zero(); q.len() + p.len() - 1];
        for (i, x) in q.iter().enumerate() {
            for (j, y) in p.iter().enumerate() {
                prod[i + j] = r.add(&prod[i + j], &r.mul(x, y));
            }
        }
        for (x, y) in prod.iter().zip(&f) {
            prop_assert!(r.val_lb(&r.sub(x, y)) >= Valuation::int(prec - 2));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn mahler_embedding_is_multiplicative(
        d1 in prop::collection::vec(0u32..3, 1..6),
        d2 in prop::collection::vec(0u32..3, 1..6),
        s1 in 1i64..3,
        s2 in 1i64..3,
    ) {
        let space = MahlerSpace::new(LocalRing::new(FieldCtx::new(3, 1).unwrap(), 1, 30), 24);
        let r = space.ring();
        let z1 = r.make(s1, d1, None);
        let z2 = r.make(s2, d2, None);
        let g1 = space.group_like(&z1).unwrap();
        let g2 = space.group_like(&z2).unwrap();
        let prod = space.mul(&g1, &g2);
        let z12 = r.sub(&r.mul(&r.add(&r.one(), &z1), &r.add(&r.one(), &z2)), &r.one());
        let direct = space.group_like(&z12).unwrap();
        for (a, b) in prod.coeffs.iter().zip(&direct.coeffs) {
            prop_assert!(r.eq_to_prec(a, b));
        }
        for k in 0..=20u64 {
            let lhs = space.eval_weight(&prod, k).unwrap();
            let rhs = r.mul(&space.eval_weight(&g1, k).unwrap(), &space.eval_weight(&g2, k).unwrap());
            prop_assert!(r.eq_to_prec(&lhs, &rhs), "k = {}", k);
        }
    }
}

//! Canonical subgroups over `A_p`, the degree of finite flat pieces, the
//! `U_pi` correspondence on rank-2 pairs and its degree dynamics.
//!
//! Write `Q = q^d` and `sigma = tau^d`. Everything here assumes `phi_pi` is a
//! polynomial in `sigma` (automatic for `d = 1`), so that
//! `phi_pi = c_0 + c_1 sigma + ... + c_r sigma^r` with `c_0 = pi`. The right
//! remainder of `phi_pi` by `a + sigma` is
//! `F(a) = sum_i c_i (-a)^{(Q^i - 1)/(Q - 1)}`, and lines of `phi[p]` are
//! exactly the `a + sigma` with `F(a) = 0`.

use serde::Serialize;

use crate::apoly::APoly;
use crate::drinfeld::DrinfeldModule;
use crate::error::{Error, Result};
use crate::local::{LocalElem, LocalRing};
use crate::newton::{NewtonPolygon, Rational, Valuation};
use crate::ring::Ring;
use crate::tau::TauPoly;

/// The constant `1/(Q + 1)` bounding the degrees that occur near the
/// boundary of the ordinary locus.
pub fn epsilon(q_d: u64) -> Rational {
    Rational::new(1, q_d as i64 + 1)
}

fn fin(v: Valuation, what: &str) -> Result<Rational> {
    v.finite().ok_or_else(|| Error::Precondition(format!("{what} vanishes")))
}

/// A module over `A_p` together with its `phi_pi`.
#[derive(Clone, Debug)]
pub struct LocalDrinfeld {
    module: DrinfeldModule<LocalRing>,
    prime: APoly,
    d: usize,
    phi_pi: TauPoly<LocalElem>,
}

impl LocalDrinfeld {
    pub fn new(module: DrinfeldModule<LocalRing>, prime: &APoly) -> Result<Self> {
        let d = prime.degree().filter(|&d| d >= 1).ok_or_else(|| Error::Precondition("prime of degree 0".into()))?;
        let phi_pi = module.phi_eval(prime)?;
        let r = module.ring();
        let lin = module.tau().coeff(&phi_pi, 0);
        if !r.eq_to_prec(&lin, &r.pi()) {
            return Err(Error::Precondition(format!(
                "linear coefficient of phi_pi is {} rather than pi",
                r.format(&lin)
            )));
        }
        Ok(LocalDrinfeld { module, prime: prime.clone(), d, phi_pi })
    }

    pub fn module(&self) -> &DrinfeldModule<LocalRing> {
        &self.module
    }

    pub fn ring(&self) -> &LocalRing {
        self.module.ring()
    }

    pub fn prime(&self) -> &APoly {
        &self.prime
    }

    pub fn rank(&self) -> usize {
        self.module.rank()
    }

    pub fn residue_degree(&self) -> usize {
        self.d
    }

    /// `Q = q^d`.
    pub fn big_q(&self) -> u64 {
        self.module.q().pow(self.d as u32)
    }

    pub fn phi_pi(&self) -> &TauPoly<LocalElem> {
        &self.phi_pi
    }

    /// Coefficients of `phi_pi` in `sigma = tau^d`.
    pub fn sigma_coeffs(&self) -> Result<Vec<LocalElem>> {
        let tr = self.module.tau();
        let r = self.ring();
        let top = self.phi_pi.degree().unwrap();
        for i in 0..=top {
            if i % self.d != 0 && !r.is_zero(&tr.coeff(&self.phi_pi, i)) {
                return Err(Error::Unsupported(format!(
                    "phi_pi has a tau^{i} term; canonical subgroups need phi_pi to be a polynomial in tau^{}",
                    self.d
                )));
            }
        }
        Ok((0..=top / self.d).map(|j| tr.coeff(&self.phi_pi, j * self.d)).collect())
    }

    /// `v(a_d)`, the valuation of the Hasse invariant.
    pub fn hasse_valuation(&self) -> Result<Valuation> {
        let c = self.sigma_coeffs()?;
        self.ring().val(&c[1])
    }

    /// `a + sigma` as a twisted polynomial.
    pub fn line_poly(&self, a: &LocalElem) -> TauPoly<LocalElem> {
        let tr = self.module.tau();
        let r = self.ring();
        let mut v = vec![r.exact_zero(); self.d + 1];
        v[0] = a.clone();
        v[self.d] = r.one();
        tr.make(v)
    }

    /// `F(a)`, the right remainder of `phi_pi` by `a + sigma`.
    pub fn line_residual(&self, a: &LocalElem) -> Result<LocalElem> {
        let c = self.sigma_coeffs()?;
        Ok(residual(self.ring(), &c, a, self.big_q()))
    }

    /// Quotient by the kernel of `ell`.
    pub fn quotient(&self, ell: &TauPoly<LocalElem>) -> Result<LocalDrinfeld> {
        LocalDrinfeld::new(self.module.quotient_by_kernel(ell)?, &self.prime)
    }
}

fn residual(r: &LocalRing, c: &[LocalElem], a: &LocalElem, big_q: u64) -> LocalElem {
    let na = r.neg(a);
    let mut acc = c[0].clone();
    let mut e = 1u64;
    for ci in &c[1..] {
        acc = r.add(&acc, &r.mul(ci, &r.pow(&na, e)));
        e = e * big_q + 1;
    }
    acc
}

/// Closed-form existence test on `v(c_0) = 1, v(c_1), ..., v(c_r)`: the point
/// `(Q, v(c_1))` lies strictly below every line from `(1, 1)` to
/// `(Q^i, v(c_i))`, `i >= 2`. Infinite values never obstruct.
pub fn slope_condition(vals: &[Valuation], big_q: u64) -> Option<bool> {
    let one = Rational::from_integer(1);
    let v1 = vals.get(1)?.finite()?;
    let lhs = (v1 - one) / Rational::from_integer(big_q as i64 - 1);
    let mut qi = big_q as i64;
    for v in &vals[2..] {
        qi *= big_q as i64;
        if let Valuation::Finite(vi) = v {
            if lhs >= (*vi - one) / Rational::from_integer(qi - 1) {
                return Some(false);
            }
        }
    }
    Some(true)
}

/// Existence of the canonical subgroup of echelon 1.
pub fn can_sub_exists_1(phi: &LocalDrinfeld) -> Result<bool> {
    let c = phi.sigma_coeffs()?;
    let r = phi.ring();
    let big_q = phi.big_q();
    // lower bounds are safe for i >= 2: raising them only helps
    let lbs: Vec<Valuation> = c.iter().map(|x| r.val_lb(x)).collect();
    let v1 = r.val(&c[1]);
    match v1 {
        Ok(_) => {}
        Err(Error::IndeterminateValuation { at_least }) => {
            // v(c_1) >= at_least; if even the bound fails, so does the truth
            let mut probe = lbs.clone();
            probe[1] = at_least;
            return match slope_condition(&probe, big_q) {
                Some(false) => Ok(false),
                _ => Err(Error::IndeterminateValuation { at_least }),
            };
        }
        Err(e) => return Err(e),
    }
    if slope_condition(&lbs, big_q) == Some(true) {
        return Ok(true);
    }
    // failure with a lower bound is only conclusive for exact values
    for x in &c[2..] {
        if let Err(e @ Error::IndeterminateValuation { .. }) = r.val(x) {
            return Err(e);
        }
    }
    Ok(false)
}

/// A finite flat piece `ker(ell)` with `ell` monic.
#[derive(Clone, Debug)]
pub struct StrictPiece {
    pub ell: TauPoly<LocalElem>,
    /// the order is `q^{d * order_exp}`
    pub order_exp: usize,
}

impl StrictPiece {
    /// Normalize `ell` to leading coefficient 1; the leading coefficient must be a unit.
    pub fn new(ring: &LocalRing, ell: TauPoly<LocalElem>, d: usize) -> Result<Self> {
        let lead = ell.leading().ok_or(Error::ZeroInput)?;
        if !ring.is_unit(lead) {
            return Err(Error::Precondition("leading coefficient is not a unit".into()));
        }
        let deg = ell.degree().unwrap();
        if !deg.is_multiple_of(d) {
            return Err(Error::Precondition(format!("tau-degree {deg} is not a multiple of {d}")));
        }
        let inv = ring.try_inv(lead)?;
        let tr = crate::tau::TauRing::new(ring.clone(), ell.twist());
        Ok(StrictPiece { ell: tr.scale(&inv, &ell), order_exp: deg / d })
    }

    pub fn linear_coeff(&self) -> &LocalElem {
        &self.ell.coeffs()[0]
    }
}

/// `v_pi` of the linear coefficient of the monic defining polynomial.
pub fn deg_pi(ring: &LocalRing, piece: &StrictPiece) -> Result<Valuation> {
    let v = ring.val(piece.linear_coeff())?;
    if let Valuation::Finite(x) = v {
        if x < Rational::from_integer(0) || x > Rational::from_integer(piece.order_exp as i64) {
            return Err(Error::Precondition(format!("degree {} outside [0, {}]", v, piece.order_exp)));
        }
    }
    Ok(v)
}

/// Solve `F(a) = 0` for the root of largest valuation by the fixed point
/// `c_1 a = pi + sum_{i>=2} c_i (-a)^{e_i}`, starting from `a = pi / c_1`.
pub fn can_sub_kernel(phi: &LocalDrinfeld) -> Result<StrictPiece> {
    if !can_sub_exists_1(phi)? {
        return Err(Error::Precondition("no canonical subgroup: slope condition fails".into()));
    }
    let r = phi.ring();
    let c = phi.sigma_coeffs()?;
    let big_q = phi.big_q();
    let target = r.default_prec();
    let goal = target - 2 * r.ramification() as i64;
    let inv_c1 = r.try_inv(&c[1])?;
    let mut a = r.with_prec(&r.mul(&c[0], &inv_c1), target);
    let max_iter = 4 * target as usize + 16;
    let mut achieved = Valuation::int(0);
    for _ in 0..max_iter {
        let res = residual(r, &c, &a, big_q);
        achieved = r.val_lb(&res);
        if achieved >= Valuation::frac(goal, r.ramification() as i64) {
            // |a - root| <= |F(a)| / |c_1|
            let v1 = c[1].raw_val().unwrap();
            let a = r.with_prec(&a, goal - v1);
            let ell = phi.line_poly(&a);
            // certificate: ell right-divides phi_pi to working precision
            let rem = phi.module().tau().right_rem(phi.phi_pi(), &ell)?;
            let rem0 = phi.module().tau().coeff(&rem, 0);
            if rem.degree().unwrap_or(0) > 0 || r.val_lb(&rem0) < Valuation::frac(goal, r.ramification() as i64) {
                return Err(Error::NoConvergence(format!("remainder {} after convergence", r.format(&rem.coeffs()[0]))));
            }
            return StrictPiece::new(r, ell, phi.residue_degree());
        }
        // a <- (c_0 + sum_{i>=2} c_i (-a)^{e_i}) / c_1
        let na = r.neg(&a);
        let mut acc = c[0].clone();
        let mut e = big_q + 1;
        for ci in &c[2..] {
            acc = r.add(&acc, &r.mul(ci, &r.pow(&na, e)));
            e = e * big_q + 1;
        }
        let next = r.with_prec(&r.mul(&acc, &inv_c1), target);
        if next == a {
            // stationary but residual not small: precision of inputs is the limit
            break;
        }
        a = next;
    }
    Err(Error::NoConvergence(format!(
        "residual known only to valuation {achieved}; need {}; raise --prec above {}",
        Valuation::frac(goal, r.ramification() as i64),
        target / r.ramification() as i64 + 4
    )))
}

/// Refine an approximate root `a0` of `F` by Newton's method and return the
/// line `ker(a + sigma)`. Requires `v(F(a0)) > 2 v(F'(a0))`.
pub fn line_through(phi: &LocalDrinfeld, a0: &LocalElem) -> Result<StrictPiece> {
    let r = phi.ring();
    let c = phi.sigma_coeffs()?;
    let big_q = phi.big_q();
    let e = r.ramification() as i64;
    let goal = r.default_prec() - 2 * e;
    // e_i = 1 mod p, so d/da (-a)^{e_i} = -(-a)^{e_i - 1}
    let deriv = |a: &LocalElem| {
        let na = r.neg(a);
        let mut acc = r.exact_zero();
        let mut ei = 1u64;
        for ci in &c[1..] {
            acc = r.sub(&acc, &r.mul(ci, &r.pow(&na, ei - 1)));
            ei = ei * big_q + 1;
        }
        acc
    };
    let mut a = r.with_prec(a0, r.default_prec());
    let d0 = r.val(&deriv(&a))?;
    let f0 = r.val_lb(&residual(r, &c, &a, big_q));
    if f0 <= d0.plus(d0) {
        return Err(Error::Precondition(format!("approximate root too coarse: v(F) = {f0}, v(F') = {d0}")));
    }
    for _ in 0..64 {
        let f = residual(r, &c, &a, big_q);
        if r.val_lb(&f) >= Valuation::frac(goal, e) {
            let dv = deriv(&a).raw_val().ok_or(Error::DivisionByZero)?;
            let a = r.with_prec(&a, goal - dv);
            let ell = phi.line_poly(&a);
            let rem = phi.module().tau().right_rem(phi.phi_pi(), &ell)?;
            let rem0 = phi.module().tau().coeff(&rem, 0);
            if rem.degree().unwrap_or(0) > 0 || r.val_lb(&rem0) < Valuation::frac(goal, e) {
                return Err(Error::NoConvergence("line does not divide phi_pi after refinement".into()));
            }
            return StrictPiece::new(r, ell, phi.residue_degree());
        }
        a = r.with_prec(&r.sub(&a, &r.try_div(&f, &deriv(&a))?), r.default_prec());
    }
    Err(Error::NoConvergence("Newton refinement of the line".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EchelonReport {
    pub n: usize,
    pub exists: bool,
    pub v_hasse: Valuation,
    /// `v < 1/(2 Q^{n-1})`
    pub sufficient_bound: Valuation,
    pub sufficient_holds: bool,
    /// `v(Ha)` of each successive quotient tested
    pub chain: Vec<Valuation>,
}

/// Largest valuation of a nonzero root of `sum c_i Z^{Q^i}`, from the first
/// Newton segment.
fn max_root_valuation(ring: &LocalRing, c: &[LocalElem], big_q: u64) -> Result<Rational> {
    let mut pts = Vec::new();
    let mut qi = 1i64;
    for x in c {
        pts.push((qi - 1, ring.val_lb(x)));
        qi *= big_q as i64;
    }
    let np = NewtonPolygon::new(&pts)?;
    Ok(-np.segments()[0].slope)
}

/// Echelon-`n` existence: iterate quotients by the canonical subgroup and
/// require at each step that the new canonical subgroup is not the image
/// of the old `p`-torsion.
pub fn can_sub_exists(phi: &LocalDrinfeld, n: usize) -> Result<EchelonReport> {
    if n == 0 {
        return Err(Error::OutOfRange("echelon 0".into()));
    }
    let v = phi.hasse_valuation()?;
    let bound = Valuation::Finite(Rational::new(1, 2 * (phi.big_q() as i64).pow(n as u32 - 1)));
    let mut chain = vec![v];
    let mut exists = can_sub_exists_1(phi)?;
    let mut cur = phi.clone();
    let mut level = 1;
    while exists && level < n {
        let piece = can_sub_kernel(&cur)?;
        let r = cur.ring();
        let (quo, _) = cur.module().tau().skew_right_divide(cur.phi_pi(), &piece.ell)?;
        let next = cur.quotient(&piece.ell)?;
        chain.push(next.hasse_valuation()?);
        if !can_sub_exists_1(&next)? {
            exists = false;
            break;
        }
        let cn = next.sigma_coeffs()?;
        let canon_root = max_root_valuation(r, &cn, cur.big_q())?;
        let qd = cur.residue_degree();
        let quo_sigma: Vec<LocalElem> = (0..=quo.degree().unwrap() / qd).map(|j| cur.module().tau().coeff(&quo, j * qd)).collect();
        let image_root = max_root_valuation(r, &quo_sigma, cur.big_q())?;
        if image_root >= canon_root {
            exists = false;
            break;
        }
        cur = next;
        level += 1;
    }
    Ok(EchelonReport { n, exists, v_hasse: v, sufficient_bound: bound, sufficient_holds: v < bound, chain })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HttReport {
    pub w: Valuation,
    /// `v(Ha)/(Q - 1)`
    pub bound: Valuation,
    pub satisfied: bool,
}

/// Exponent `(1 - v(a))/(Q - 1)` of the cokernel of the Hodge-Tate-Taguchi map.
pub fn htt_exponent(phi: &LocalDrinfeld) -> Result<HttReport> {
    let piece = can_sub_kernel(phi)?;
    let r = phi.ring();
    let va = fin(r.val(piece.linear_coeff())?, "kernel coefficient")?;
    let qm1 = Rational::from_integer(phi.big_q() as i64 - 1);
    let w = (Rational::from_integer(1) - va) / qm1;
    let v = fin(phi.hasse_valuation()?, "Hasse invariant").unwrap_or(Rational::from_integer(1));
    let bound = v / qm1;
    Ok(HttReport { w: w.into(), bound: bound.into(), satisfied: w >= bound })
}

/// Degrees of the images `U_pi(phi, H)` for rank 2, where `H = ker(h + sigma)`
/// has degree `v(h)`. The other roots `b` of `F` satisfy `b - h = X` with
/// `(c_2 h^Q - c_1) + c_2 h X^{Q-1} + c_2 X^Q = 0` and `c_2 h^Q - c_1 = -pi/h`;
/// the image of `H` in `phi/ker(b + sigma)` has linear coefficient
/// `h (b - h)^{Q-1}`.
pub fn up_degrees_closed_form(v_h: Rational, v_c2: Rational, big_q: u64) -> Result<Vec<Rational>> {
    let qm1 = big_q as i64 - 1;
    let one = Rational::from_integer(1);
    let pts = [
        (0, Valuation::Finite(one - v_h)),
        (qm1, Valuation::Finite(v_c2 + v_h)),
        (qm1 + 1, Valuation::Finite(v_c2)),
    ];
    let np = NewtonPolygon::new(&pts)?;
    let mut out = Vec::new();
    for s in np.segments() {
        let root_val = -s.slope;
        for _ in 0..s.length {
            out.push(v_h + Rational::from_integer(qm1) * root_val);
        }
    }
    out.sort();
    Ok(out)
}

/// Closed-form degrees of `U_pi(phi, H)` for a rank-2 module.
pub fn up_degrees(phi: &LocalDrinfeld, h_piece: &StrictPiece) -> Result<Vec<Rational>> {
    if phi.rank() != 2 {
        return Err(Error::Unsupported("U_pi correspondence is implemented for rank 2".into()));
    }
    if h_piece.order_exp != 1 {
        return Err(Error::Precondition("H is not a line".into()));
    }
    let r = phi.ring();
    let c = phi.sigma_coeffs()?;
    let h = &h_piece.ell.coeffs()[0];
    let res = phi.line_residual(h)?;
    if r.val_lb(&res) < Valuation::int(1) {
        return Err(Error::Precondition("H is not a subgroup of phi[p]".into()));
    }
    let v_h = fin(r.val(h)?, "H coefficient")?;
    let v_c2 = fin(r.val(&c[2])?, "leading coefficient")?;
    up_degrees_closed_form(v_h, v_c2, phi.big_q())
}

/// A rank-2 module over `A_p` whose `p`-torsion is `F_q z_1 + F_q z_2 inside K`,
/// so every line and every quotient is explicit (`d = 1`).
#[derive(Clone, Debug)]
pub struct SplitModule {
    pub phi: LocalDrinfeld,
    pub z1: LocalElem,
    pub z2: LocalElem,
    /// `(generator z, root b = -z^{q-1})` for each of the `q + 1` lines
    pub lines: Vec<(LocalElem, LocalElem)>,
}

/// Build the module with `phi_pi = lambda * prod_{x in F_q z1 + F_q z2} (Z - x)`,
/// `lambda` chosen so the linear coefficient is `pi`.
pub fn split_module(base: &crate::apoly::PolyRing, loc: &crate::local::Localization, z1: &LocalElem, z2: &LocalElem) -> Result<SplitModule> {
    let prime = loc.prime().clone();
    if prime.degree() != Some(1) {
        return Err(Error::Unsupported("split modules are built at degree-1 primes".into()));
    }
    let r = loc.ring();
    let q = base.field().size();
    let tr = crate::tau::TauRing::new(r.clone(), q);
    let ell1 = tr.make(vec![r.neg(&r.pow(z1, q - 1)), r.one()]);
    let w = tr.eval(&ell1, z2);
    if r.is_zero(&w) {
        return Err(Error::Precondition("z1 and z2 are dependent over F_q".into()));
    }
    let ell2 = tr.make(vec![r.neg(&r.pow(&w, q - 1)), r.one()]);
    let p = tr.mul(&ell2, &ell1);
    let lambda = r.try_div(&r.pi(), &p.coeffs()[0])?;
    if !r.is_unit(&lambda) {
        return Err(Error::Precondition("leading coefficient is not a unit (reduction is not good)".into()));
    }
    let phi_pi = tr.scale(&lambda, &p);
    // phi_T = phi_pi - a for the prime T + a
    let mut coeffs = phi_pi.coeffs().to_vec();
    coeffs[0] = loc.t_image().clone();
    let consts = base.field().elements().map(|c| r.constant(loc.embed_const(c))).collect();
    let module = DrinfeldModule::new(base.clone(), r.clone(), consts, coeffs)?;
    let phi = LocalDrinfeld::new(module, &prime)?;
    let mut gens = vec![z1.clone()];
    for alpha in base.field().elements() {
        gens.push(r.add(z2, &r.mul(&r.constant(loc.embed_const(alpha)), z1)));
    }
    let lines = gens.into_iter().map(|z| {
        let b = r.neg(&r.pow(&z, q - 1));
        (z, b)
    }).collect();
    Ok(SplitModule { phi, z1: z1.clone(), z2: z2.clone(), lines })
}

/// Generators with `v(z1) = t/(q-1)`, `v(z2) = (1-t)/(q(q-1))` in a ring of
/// suitable ramification; the line through `z1` then has degree `t`. The
/// module has good reduction exactly when `t > 1/(q+1)`.
pub fn split_valuations(t: Rational, q: u64) -> (Rational, Rational) {
    let q = q as i64;
    let one = Rational::from_integer(1);
    (t / Rational::from_integer(q - 1), (one - t) / Rational::from_integer(q * (q - 1)))
}

#[derive(Clone, Debug)]
pub struct UpImage {
    /// root `b` of the removed line `ker(b + tau)`
    pub line: LocalElem,
    pub quotient: LocalDrinfeld,
    pub image: StrictPiece,
    pub degree: Valuation,
}

impl SplitModule {
    pub fn line_piece(&self, i: usize) -> Result<StrictPiece> {
        let ell = self.phi.line_poly(&self.lines[i].1);
        StrictPiece::new(self.phi.ring(), ell, 1)
    }

    /// Index of the line of largest degree (the canonical one when it exists).
    pub fn canonical_index(&self) -> Result<usize> {
        let r = self.phi.ring();
        let mut best = None;
        for (i, (_, b)) in self.lines.iter().enumerate() {
            let v = r.val(b)?;
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((i, v));
            }
        }
        Ok(best.unwrap().0)
    }

    /// `U_pi(phi, H)` with `H` the `h_index`-th line: explicit quotients
    /// `phi / L` for the other `q` lines and the image of `H` in each.
    pub fn up_correspondence(&self, h_index: usize) -> Result<Vec<UpImage>> {
        let phi = &self.phi;
        let r = phi.ring();
        let tr = phi.module().tau();
        let q = phi.big_q();
        let h = &self.lines[h_index].1;
        let mut out = Vec::new();
        for (j, (_, b)) in self.lines.iter().enumerate() {
            if j == h_index {
                continue;
            }
            let ell_b = phi.line_poly(b);
            let quotient = phi.quotient(&ell_b)?;
            // phi_pi = cof * ell_b and psi_pi = ell_b * cof, so the image of
            // phi[p] (hence of H) is ker(cof)
            let (cof, rem) = tr.skew_right_divide(phi.phi_pi(), &ell_b)?;
            if !rem.is_zero() {
                return Err(Error::Precision("line does not divide phi_pi at working precision".into()));
            }
            let image = StrictPiece::new(r, cof, 1)?;
            let degree = deg_pi(r, &image)?;
            // cross-check against h (b - h)^{q-1}
            let a_img = r.mul(h, &r.pow(&r.sub(b, h), q - 1));
            let v_formula = r.val(&a_img)?;
            if v_formula != degree {
                return Err(Error::Precision(format!("image degree {degree} disagrees with {v_formula}")));
            }
            out.push(UpImage { line: b.clone(), quotient, image, degree });
        }
        out.sort_by(|x, y| x.degree.cmp(&y.degree).then_with(|| r.format(&x.line).cmp(&r.format(&y.line))));
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicsReport {
    pub deg_y: Valuation,
    pub images: Vec<Valuation>,
    /// `deg(y) <= deg(x)` for all `x`
    pub monotone: bool,
    pub equalities: usize,
    /// equality occurs only when `deg(y)` is `0` or `1`
    pub equality_rule: bool,
    /// smallest `deg(x) - deg(y)` over strict increases
    pub min_increment: Option<Valuation>,
}

pub fn dynamics_from_degrees(deg_y: Rational, images: &[Rational]) -> DynamicsReport {
    let zero = Rational::from_integer(0);
    let one = Rational::from_integer(1);
    let monotone = images.iter().all(|&x| x >= deg_y);
    let equalities = images.iter().filter(|&&x| x == deg_y).count();
    let boundary = deg_y == zero || deg_y == one;
    let equality_rule = equalities == 0 || boundary;
    let min_increment = images.iter().filter(|&&x| x > deg_y).map(|&x| x - deg_y).min().map(Valuation::Finite);
    DynamicsReport {
        deg_y: deg_y.into(),
        images: images.iter().map(|&x| x.into()).collect(),
        monotone,
        equalities,
        equality_rule,
        min_increment,
    }
}

/// Monotonicity check of the degree along `U_pi(y)`.
pub fn deg_dynamics_check(phi: &LocalDrinfeld, h_piece: &StrictPiece) -> Result<DynamicsReport> {
    let r = phi.ring();
    let deg_y = fin(deg_pi(r, h_piece)?, "degree")?;
    Ok(dynamics_from_degrees(deg_y, &up_degrees(phi, h_piece)?))
}

/// An edge `y -> x` of the `U_pi` graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeEdge {
    pub from: String,
    pub to: String,
    pub deg_from: Valuation,
    pub deg_to: Valuation,
}

/// Two steps of `U_pi` from `(phi, H_{h_index})`: exact quotients at the
/// first step, closed-form degrees at the second.
pub fn degree_graph(split: &SplitModule, h_index: usize) -> Result<Vec<DegreeEdge>> {
    let r = split.phi.ring();
    let root = "y".to_string();
    let deg_root = deg_pi(r, &split.line_piece(h_index)?)?;
    let mut edges = Vec::new();
    for (i, img) in split.up_correspondence(h_index)?.iter().enumerate() {
        let name = format!("y.{}", i + 1);
        edges.push(DegreeEdge { from: root.clone(), to: name.clone(), deg_from: deg_root, deg_to: img.degree });
        let second = up_degrees(&img.quotient, &img.image)?;
        for (j, dg) in second.iter().enumerate() {
            edges.push(DegreeEdge {
                from: name.clone(),
                to: format!("{name}.{}", j + 1),
                deg_from: img.degree,
                deg_to: Valuation::Finite(*dg),
            });
        }
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apoly::PolyRing;
    use crate::field::FieldCtx;
    use crate::local::{prime_localize, Localization};
    use crate::newton::NewtonPolygon;

    fn setup(q: u64, prec: i64, ram: u32) -> (PolyRing, Localization) {
        let (p, e) = crate::drinfeld::prime_power(q).unwrap();
        let a = PolyRing::new(FieldCtx::new(p, e).unwrap());
        let loc = Localization::new(&a, &a.t(), prec, ram).unwrap();
        (a, loc)
    }

    /// `phi_T = pi + c_1 tau + c_2 tau^2` at the prime `T`.
    fn module(a: &PolyRing, loc: &Localization, c1: LocalElem, c2: LocalElem) -> LocalDrinfeld {
        let r = loc.ring();
        let consts = a.field().elements().map(|c| r.constant(c)).collect();
        let m = DrinfeldModule::new(a.clone(), r.clone(), consts, vec![r.pi(), c1, c2]).unwrap();
        LocalDrinfeld::new(m, &a.t()).unwrap()
    }

    fn np_break_oracle(vals: &[Valuation], q: u64) -> bool {
        // break at x = Q, first segment ending there, via the hull
        let mut pts = vec![];
        let mut qi = 1i64;
        for v in vals {
            pts.push((qi, *v));
            qi *= q as i64;
        }
        let np = NewtonPolygon::new(&pts).unwrap();
        np.vertices().len() >= 2 && np.vertices()[1].0 == q as i64 && {
            // strictly: no other point on the first segment
            let s = np.segments()[0];
            s.length == q as i64 - 1
        }
    }

    #[test]
    fn slope_test_matches_newton_break() {
        for q in [2u64, 3, 4] {
            for num in 0..=24 {
                let v1 = Valuation::frac(num, 12);
                for v2 in [Valuation::int(0), Valuation::frac(1, 3), Valuation::int(2), Valuation::Infinite] {
                    for v3 in [Valuation::int(0), Valuation::Infinite] {
                        let vals = [Valuation::int(1), v1, v2, v3];
                        if vals.iter().filter(|v| !v.is_infinite()).count() < 2 {
                            continue;
                        }
                        assert_eq!(slope_condition(&vals, q), Some(np_break_oracle(&vals, q)), "q={q} {vals:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn rank_two_threshold() {
        let (a, loc) = setup(3, 20, 4);
        let r = loc.ring();
        // v(a_1) = 3/4 is the boundary q/(q+1): excluded
        let phi = module(&a, &loc, r.pow(&r.w(), 3), r.one());
        assert_eq!(phi.hasse_valuation().unwrap(), Valuation::frac(3, 4));
        assert!(!can_sub_exists_1(&phi).unwrap());
        let half = module(&a, &loc, r.pow(&r.w(), 2), r.one());
        assert!(can_sub_exists_1(&half).unwrap());
        let ord = module(&a, &loc, r.one(), r.one());
        for n in 1..4 {
            assert!(can_sub_exists(&ord, n).unwrap().exists);
        }
    }

    #[test]
    fn kernels() {
        let (a, loc) = setup(3, 24, 3);
        let r = loc.ring();
        // ordinary: v(a) = 1
        let ord = module(&a, &loc, r.constant(2), r.one());
        let k = can_sub_kernel(&ord).unwrap();
        assert_eq!(deg_pi(r, &k).unwrap(), Valuation::int(1));
        // v(Ha) = 1/3: v(a) = 2/3
        let third = module(&a, &loc, r.w(), r.constant(2));
        let k = can_sub_kernel(&third).unwrap();
        assert_eq!(deg_pi(r, &k).unwrap(), Valuation::frac(2, 3));
        let htt = htt_exponent(&third).unwrap();
        assert_eq!(htt.w, Valuation::frac(1, 6));
        assert_eq!(htt.w, htt.bound);
        assert!(htt.satisfied);
        assert_eq!(htt_exponent(&ord).unwrap().w, Valuation::int(0));
    }

    #[test]
    fn htt_at_one_half() {
        let (a, loc) = setup(3, 24, 2);
        let r = loc.ring();
        let phi = module(&a, &loc, r.w(), r.one());
        let k = can_sub_kernel(&phi).unwrap();
        assert_eq!(deg_pi(r, &k).unwrap(), Valuation::frac(1, 2));
        assert_eq!(htt_exponent(&phi).unwrap().w, Valuation::frac(1, 4));
    }

    #[test]
    fn degree_pieces_and_additivity() {
        let (_, loc) = setup(3, 10, 1);
        let r = loc.ring();
        let tr = crate::tau::TauRing::new(r.clone(), 3);
        let p1 = StrictPiece::new(r, tr.make(vec![r.pi(), r.one()]), 1).unwrap();
        assert_eq!(deg_pi(r, &p1).unwrap(), Valuation::int(1));
        let p0 = StrictPiece::new(r, tr.make(vec![r.constant(2), r.one()]), 1).unwrap();
        assert_eq!(deg_pi(r, &p0).unwrap(), Valuation::int(0));
        let comp = StrictPiece::new(r, tr.mul(&p0.ell, &p1.ell), 1).unwrap();
        assert_eq!(comp.order_exp, 2);
        assert_eq!(deg_pi(r, &comp).unwrap(), Valuation::int(1));
    }

    #[test]
    fn ordinary_split_module_dynamics() {
        let (a, loc) = setup(3, 24, 2);
        let r = loc.ring();
        // ordinary: v(z1) = 1/2, v(z2) = 0
        let split = split_module(&a, &loc, &r.w(), &r.add(&r.one(), &r.w())).unwrap();
        assert_eq!(split.lines.len(), 4);
        let canon = split.canonical_index().unwrap();
        assert_eq!(canon, 0);
        // canonical kernel from the fixed point matches the line through z1
        let k = can_sub_kernel(&split.phi).unwrap();
        assert!(r.eq_to_prec(&k.ell.coeffs()[0], &split.lines[0].1));
        let imgs = split.up_correspondence(canon).unwrap();
        assert_eq!(imgs.len(), 3);
        assert!(imgs.iter().all(|x| x.degree == Valuation::int(1)));
        // H étale: one image of degree 0, q - 1 of degree 1
        let imgs = split.up_correspondence(1).unwrap();
        let degs: Vec<_> = imgs.iter().map(|x| x.degree).collect();
        assert_eq!(degs, vec![Valuation::int(0), Valuation::int(1), Valuation::int(1)]);
        // closed form agrees
        let cf = up_degrees(&split.phi, &split.line_piece(1).unwrap()).unwrap();
        assert_eq!(cf, vec![Rational::from_integer(0), Rational::from_integer(1), Rational::from_integer(1)]);
        // each quotient satisfies psi_T ell = ell phi_T
        let tr = split.phi.module().tau();
        for img in &imgs {
            let ell = split.phi.line_poly(&img.line);
            let lhs = tr.mul(img.quotient.module().phi_t(), &ell);
            let rhs = tr.mul(&ell, split.phi.module().phi_t());
            assert!(tr.sub(&lhs, &rhs).is_zero());
        }
    }

    #[test]
    fn newton_refines_lines() {
        let (a, loc) = setup(3, 24, 2);
        let r = loc.ring();
        let split = split_module(&a, &loc, &r.w(), &r.add(&r.one(), &r.w())).unwrap();
        for (_, b) in &split.lines {
            let rough = r.add(b, &r.pow(&r.w(), 12));
            let piece = line_through(&split.phi, &rough).unwrap();
            assert!(r.eq_to_prec(&piece.ell.coeffs()[0], b));
        }
        assert!(matches!(line_through(&split.phi, &r.constant(1)), Err(Error::Precondition(_))));
    }

    #[test]
    fn non_ordinary_split_module() {
        // q = 2, t = 1/2: v(z1) = 1/2, v(z2) = 1/4
        let (a, loc) = setup(2, 32, 4);
        let r = loc.ring();
        let (v1, v2) = split_valuations(Rational::new(1, 2), 2);
        assert_eq!((v1, v2), (Rational::new(1, 2), Rational::new(1, 4)));
        let z1 = r.add(&r.pow(&r.w(), 2), &r.pow(&r.w(), 5));
        let z2 = r.w();
        let split = split_module(&a, &loc, &z1, &z2).unwrap();
        let canon = split.canonical_index().unwrap();
        let piece = split.line_piece(canon).unwrap();
        assert_eq!(deg_pi(r, &piece).unwrap(), Valuation::frac(1, 2));
        let imgs = split.up_correspondence(canon).unwrap();
        // (q - 1 + t)/q = 3/4
        assert!(imgs.iter().all(|x| x.degree == Valuation::frac(3, 4)));
        let rep = deg_dynamics_check(&split.phi, &piece).unwrap();
        assert!(rep.monotone && rep.equality_rule);
        assert_eq!(rep.equalities, 0);
        assert_eq!(rep.min_increment, Some(Valuation::frac(1, 4)));
        let edges = degree_graph(&split, canon).unwrap();
        assert_eq!(edges.len(), 2 + 2 * 2);
        assert!(edges.iter().all(|e| e.deg_from <= e.deg_to));
    }

    #[test]
    fn echelon_two() {
        let (a, loc) = setup(3, 30, 8);
        let r = loc.ring();
        // v = 1/8 < 1/(q+1): the quotient's canonical subgroup is new
        let small = module(&a, &loc, r.w(), r.one());
        let rep = can_sub_exists(&small, 2).unwrap();
        assert!(rep.exists);
        assert_eq!(rep.chain[1], Valuation::frac(3, 8));
        assert!(rep.sufficient_holds);
        // v = 1/2: echelon 1 only
        let half = module(&a, &loc, r.pow(&r.w(), 4), r.one());
        assert!(can_sub_exists(&half, 1).unwrap().exists);
        let rep = can_sub_exists(&half, 2).unwrap();
        assert!(!rep.exists);
        assert!(!rep.sufficient_holds);
    }

    #[test]
    fn epsilon_constant() {
        assert_eq!(epsilon(3), Rational::new(1, 4));
    }

    #[test]
    fn unsupported_and_errors() {
        let a = PolyRing::new(FieldCtx::new(2, 1).unwrap());
        let f = APoly::from_coeffs(vec![1, 1, 1]);
        let loc = prime_localize(&a, &f, 8).unwrap();
        let phi = DrinfeldModule::over_a(&a, vec![a.t(), a.one(), a.one()]).unwrap();
        let ld = LocalDrinfeld::new(phi.localize(&loc).unwrap(), &f).unwrap();
        assert!(matches!(ld.sigma_coeffs(), Err(Error::Unsupported(_))));
    }
}

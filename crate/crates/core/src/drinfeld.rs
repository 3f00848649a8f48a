//! Drinfeld modules over `A = F_q[T]`, their torsion and quotients.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apoly::{APoly, PolyRing};
use crate::error::{Error, Result};
use crate::expr;
use crate::field::{FieldCtx, Fe, FiniteField, DEFAULT_FIELD_BOUND};
use crate::local::{LocalRing, Localization};
use crate::ring::Ring;
use crate::tau::{TauPoly, TauRing};

/// A rank-`r` Drinfeld module `phi: A -> R{tau}` given by `phi_T`.
#[derive(Clone, Debug)]
pub struct DrinfeldModule<R: Ring> {
    base: PolyRing,
    tau: TauRing<R>,
    /// images of the constants `F_q` in `R`
    consts: Vec<R::Elem>,
    phi_t: TauPoly<R::Elem>,
}

impl<R: Ring + Clone> DrinfeldModule<R> {
    /// `consts[c]` is the image of `c in F_q`; the twist is `q = |F_q|`.
    pub fn new(base: PolyRing, ring: R, consts: Vec<R::Elem>, coeffs: Vec<R::Elem>) -> Result<Self> {
        let q = base.field().size();
        if consts.len() as u64 != q {
            return Err(Error::Precondition("constant table must cover F_q".into()));
        }
        let tau = TauRing::new(ring, q);
        let phi_t = tau.make(coeffs);
        if phi_t.degree().unwrap_or(0) == 0 {
            return Err(Error::Precondition("phi_T must have tau-degree at least 1".into()));
        }
        Ok(DrinfeldModule { base, tau, consts, phi_t })
    }

    pub fn rank(&self) -> usize {
        self.phi_t.degree().unwrap()
    }

    pub fn q(&self) -> u64 {
        self.tau.q()
    }

    pub fn base(&self) -> &PolyRing {
        &self.base
    }

    pub fn tau(&self) -> &TauRing<R> {
        &self.tau
    }

    pub fn ring(&self) -> &R {
        self.tau.coeff_ring()
    }

    pub fn phi_t(&self) -> &TauPoly<R::Elem> {
        &self.phi_t
    }

    pub fn const_image(&self, c: Fe) -> R::Elem {
        self.consts[c as usize].clone()
    }

    /// `phi_a` by Horner's rule in `phi_T`.
    pub fn phi_eval(&self, a: &APoly) -> Result<TauPoly<R::Elem>> {
        if a.is_zero() {
            return Err(Error::ZeroInput);
        }
        let mut acc = self.tau.zero();
        for &c in a.coeffs().iter().rev() {
            acc = self.tau.mul(&acc, &self.phi_t);
            acc = self.tau.add(&acc, &self.tau.constant(self.const_image(c)));
        }
        Ok(acc)
    }

    /// The module `psi` with `psi_T * ell = ell * phi_T`.
    pub fn quotient_by_kernel(&self, ell: &TauPoly<R::Elem>) -> Result<Self> {
        let lhs = self.tau.tau_mul(ell, &self.phi_t)?;
        let (psi_t, rem) = self.tau.skew_right_divide(&lhs, ell)?;
        // the isogeny must also respect the structure map
        let r = self.ring();
        let drift = r.sub(&self.tau.coeff(&psi_t, 0), &self.tau.coeff(&self.phi_t, 0));
        if !rem.is_zero() || !r.is_zero(&drift) {
            return Err(Error::UnstableKernel);
        }
        Ok(DrinfeldModule {
            base: self.base.clone(),
            tau: self.tau.clone(),
            consts: self.consts.clone(),
            phi_t: psi_t,
        })
    }

    /// Map coefficients through a ring morphism.
    pub fn map_to<S: Ring + Clone>(&self, target: S, consts: Vec<S::Elem>, h: impl Fn(&R::Elem) -> S::Elem) -> Result<DrinfeldModule<S>> {
        let coeffs = self.phi_t.coeffs().iter().map(h).collect();
        DrinfeldModule::new(self.base.clone(), target, consts, coeffs)
    }
}

impl DrinfeldModule<PolyRing> {
    /// Module over `A` itself (generic characteristic): `phi_T = T + c_1 tau + ...`.
    pub fn over_a(base: &PolyRing, coeffs: Vec<APoly>) -> Result<Self> {
        if coeffs.first() != Some(&base.t()) {
            return Err(Error::Precondition("constant term of phi_T must be T".into()));
        }
        let consts = base.field().elements().map(APoly::constant).collect();
        Self::new(base.clone(), base.clone(), consts, coeffs)
    }

    /// Image in `A_p{tau}`.
    pub fn localize(&self, loc: &Localization) -> Result<DrinfeldModule<LocalRing>> {
        let consts = self.base.field().elements().map(|c| loc.ring().constant(loc.embed_const(c))).collect();
        self.map_to(loc.ring().clone(), consts, |a| loc.map(a))
    }

    /// Reduction modulo the prime, over the residue field `F_{q^d}`.
    pub fn reduce(&self, loc: &Localization) -> Result<DrinfeldModule<FiniteField>> {
        let field = FiniteField(loc.ring().residue().clone());
        let consts = self.base.field().elements().map(|c| loc.embed_const(c)).collect();
        self.map_to(field, consts, |a| loc.map(a).digit(0))
    }
}

impl DrinfeldModule<FiniteField> {
    /// Module over a finite field `F_{q^e}` containing `F_q`, in the
    /// characteristic given by the constant term `c_0`.
    pub fn over_field(base: &PolyRing, field: Arc<FieldCtx>, coeffs: Vec<Fe>) -> Result<Self> {
        let consts = base.field().embedding_into(&field)?;
        Self::new(base.clone(), FiniteField(field), consts, coeffs)
    }
}

/// The full `a`-torsion kernel of a module, as the kernel of `phi_a`.
#[derive(Clone, Debug)]
pub struct TorsionKernel<E> {
    pub ell: TauPoly<E>,
    pub ideal: APoly,
}

impl<E: Clone + PartialEq + std::fmt::Debug> TorsionKernel<E> {
    pub fn full<R: Ring<Elem = E> + Clone>(phi: &DrinfeldModule<R>, a: &APoly) -> Result<Self> {
        Ok(TorsionKernel { ell: phi.phi_eval(a)?, ideal: a.clone() })
    }

    /// `ell` right-divides `phi_a` for the generator `a` of the ideal.
    pub fn verify<R: Ring<Elem = E> + Clone>(&self, phi: &DrinfeldModule<R>) -> Result<bool> {
        let phi_a = phi.phi_eval(&self.ideal)?;
        Ok(phi.tau().right_rem(&phi_a, &self.ell)?.is_zero())
    }
}

/// Roots of the additive polynomial `ell` (coefficients in `coeff_field`)
/// inside the degree-`ext` extension of `coeff_field`, by exhaustion.
pub fn kernel_points(ell: &TauPoly<Fe>, coeff_field: &Arc<FieldCtx>, ext: u32, bound: u64) -> Result<Vec<Fe>> {
    if ell.is_zero() {
        return Err(Error::ZeroInput);
    }
    let deg = coeff_field.degree() * ext;
    let big = FieldCtx::with_bound(coeff_field.p(), deg, bound.min(DEFAULT_FIELD_BOUND)).map_err(|e| match e {
        Error::FieldTooLarge { size, bound } => Error::BoundExceeded(format!("field of size {size} over bound {bound}")),
        other => other,
    })?;
    let emb = coeff_field.embedding_into(&big)?;
    let tr = TauRing::new(FiniteField(big.clone()), ell.twist());
    let lifted = tr.make(ell.coeffs().iter().map(|&c| emb[c as usize]).collect());
    let mut roots: Vec<Fe> = (0..big.size() as Fe)
        .into_par_iter()
        .filter(|x| tr.eval(&lifted, x) == 0)
        .collect();
    roots.sort_unstable();
    Ok(roots)
}

/// Order of the Frobenius of `F_{q^d}` on any `F_{q^d}`-space of dimension
/// at most `r`, times `d`: every torsion point of a rank-`r` module over
/// `F_{q^d}` is fixed by `tau^M`.
pub fn splitting_exponent(p: u64, q: u64, d: u32, r: usize) -> u64 {
    let qd = q.pow(d);
    let mut l = 1u64;
    for i in 1..=r as u32 {
        l = num_integer::lcm(l, qd.pow(i) - 1);
    }
    let mut pp = 1u64;
    while pp < r as u64 {
        pp *= p;
    }
    d as u64 * pp * l
}

/// `log_q` of the number of points of `ker(ell)` over `F_{q^m}`: the
/// tau-degree of `gcrd(ell, tau^m - 1)`.
pub fn rational_kernel_degree(tau: &TauRing<FiniteField>, ell: &TauPoly<Fe>, m: u64) -> Result<usize> {
    let rem = tau.tau_power_rem(m, ell)?;
    let diff = tau.sub(&rem, &tau.one());
    if diff.is_zero() {
        return Ok(ell.degree().unwrap());
    }
    Ok(tau.gcrd(ell, &diff)?.degree().unwrap())
}

/// JSON description of a module: `phi_T` coefficients are polynomials in
/// `T` (or local expressions in `pi`, `w` when `ramification` is given).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModuleDescriptor {
    pub q: u64,
    pub r: usize,
    pub prime: String,
    #[serde(rename = "phi_T")]
    pub phi_t: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramification: Option<u32>,
}

/// A parsed descriptor: the localized module, plus the global one when
/// every coefficient lies in `A`.
#[derive(Clone, Debug)]
pub struct LoadedModule {
    pub base: PolyRing,
    pub prime: APoly,
    pub loc: Localization,
    pub global: Option<DrinfeldModule<PolyRing>>,
    pub local: DrinfeldModule<LocalRing>,
}

/// Split `q = p^e`.
pub fn prime_power(q: u64) -> Result<(u64, u32)> {
    if q < 2 {
        return Err(Error::OutOfRange(format!("q = {q}")));
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d)).unwrap();
    let (mut e, mut m) = (0, q);
    while m % p == 0 {
        m /= p;
        e += 1;
    }
    if m != 1 {
        return Err(Error::Precondition(format!("q = {q} is not a prime power")));
    }
    Ok((p, e))
}

impl ModuleDescriptor {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serializes")
    }

    /// Parse with working precision `prec` (in `pi`-units).
    pub fn load(&self, prec: i64) -> Result<LoadedModule> {
        let (p, e) = prime_power(self.q)?;
        let base = PolyRing::new(FieldCtx::new(p, e)?);
        let prime = expr::parse_prime(&self.prime, &base)?;
        if self.phi_t.len() != self.r + 1 {
            return Err(Error::Precondition(format!(
                "phi_T has {} coefficients, expected r + 1 = {}",
                self.phi_t.len(),
                self.r + 1
            )));
        }
        let ram = self.ramification.unwrap_or(1);
        if ram == 0 {
            return Err(Error::OutOfRange("ramification 0".into()));
        }
        let loc = Localization::new(&base, &prime, prec, ram)?;
        let global_coeffs: Result<Vec<APoly>> =
            self.phi_t.iter().enumerate().map(|(i, s)| expr::parse_apoly(s, &base, i + 1)).collect();
        let (global, local) = match global_coeffs {
            Ok(c) => {
                let g = DrinfeldModule::over_a(&base, c)?;
                let l = g.localize(&loc)?;
                (Some(g), l)
            }
            Err(first_err) => {
                let coeffs: Vec<_> = self
                    .phi_t
                    .iter()
                    .enumerate()
                    .map(|(i, s)| expr::parse_local(s, &loc, i + 1))
                    .collect::<Result<_>>()
                    .map_err(|_| first_err)?;
                let r = loc.ring();
                if !r.eq_to_prec(&coeffs[0], loc.t_image()) {
                    return Err(Error::Precondition("constant term of phi_T must be T".into()));
                }
                let consts = base.field().elements().map(|c| r.constant(loc.embed_const(c))).collect();
                (None, DrinfeldModule::new(base.clone(), r.clone(), consts, coeffs)?)
            }
        };
        if local.rank() != self.r {
            return Err(Error::Precondition(format!("leading coefficient of phi_T vanishes (rank {} != {})", local.rank(), self.r)));
        }
        Ok(LoadedModule { base, prime, loc, global, local })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::prime_localize;

    fn base(p: u64, e: u32) -> PolyRing {
        PolyRing::new(FieldCtx::new(p, e).unwrap())
    }

    #[test]
    fn carlitz_phi_of_t_squared() {
        let a = base(3, 1);
        let phi = DrinfeldModule::over_a(&a, vec![a.t(), a.one()]).unwrap();
        let t2 = a.mul(&a.t(), &a.t());
        let img = phi.phi_eval(&t2).unwrap();
        let expect = phi.tau().mul(phi.phi_t(), phi.phi_t());
        assert_eq!(img, expect);
        assert_eq!(img.degree(), Some(2));
        assert_eq!(phi.phi_eval(&a.one()).unwrap(), phi.tau().one());
        assert_eq!(phi.phi_eval(&APoly::constant(2)).unwrap(), phi.tau().constant(APoly::constant(2)));
        assert_eq!(phi.phi_eval(&APoly::zero()).unwrap_err(), Error::ZeroInput);
    }

    #[test]
    fn degree_is_rank_times_degree() {
        let a = base(2, 1);
        let phi = DrinfeldModule::over_a(&a, vec![a.t(), a.linear(1), a.one()]).unwrap();
        for deg in 1..4 {
            let x = a.pow(&a.linear(1), deg);
            assert_eq!(phi.phi_eval(&x).unwrap().degree(), Some(2 * deg as usize));
        }
    }

    #[test]
    fn artin_schreier_kernel() {
        let f = FieldCtx::new(3, 1).unwrap();
        let tr = TauRing::new(FiniteField(f.clone()), 3);
        let ell = tr.make(vec![2, 1]); // x^3 - x
        assert_eq!(kernel_points(&ell, &f, 4, 1 << 20).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn kernels_mod_t() {
        let a = base(3, 1);
        let loc = prime_localize(&a, &a.t(), 5).unwrap();
        // T + tau + tau^2 mod T: x^3 + x^9, three roots
        let phi = DrinfeldModule::over_a(&a, vec![a.t(), a.one(), a.one()]).unwrap();
        let red = phi.reduce(&loc).unwrap();
        let ell = red.phi_eval(&a.t()).unwrap();
        let f = red.ring().ctx().clone();
        assert_eq!(kernel_points(&ell, &f, 2, 1 << 20).unwrap().len(), 3);
        // T + tau^2 mod T: only zero
        let ss = DrinfeldModule::over_a(&a, vec![a.t(), APoly::zero(), a.one()]).unwrap();
        let red = ss.reduce(&loc).unwrap();
        let ell = red.phi_eval(&a.t()).unwrap();
        assert_eq!(kernel_points(&ell, &f, 4, 1 << 20).unwrap(), vec![0]);
        assert!(matches!(kernel_points(&ell, &f, 30, 1 << 20), Err(Error::BoundExceeded(_))));
    }

    #[test]
    fn point_count_by_gcrd_matches_enumeration() {
        let a = base(2, 1);
        let loc = prime_localize(&a, &a.linear(1), 5).unwrap();
        let phi = DrinfeldModule::over_a(&a, vec![a.t(), a.one(), a.one()]).unwrap();
        let red = phi.reduce(&loc).unwrap();
        let ell = red.phi_eval(&a.linear(1)).unwrap();
        let m = splitting_exponent(2, 2, 1, 2);
        let deg = rational_kernel_degree(red.tau(), &ell, m).unwrap();
        let f = red.ring().ctx().clone();
        let pts = kernel_points(&ell, &f, m as u32, 1 << 20).unwrap();
        assert_eq!(pts.len(), 1 << deg);
    }

    #[test]
    fn quotient_identities() {
        let a = base(3, 1);
        let phi = DrinfeldModule::over_a(&a, vec![a.t(), a.one(), a.one()]).unwrap();
        let tr = phi.tau();
        // by phi_T itself: psi = phi
        let psi = phi.quotient_by_kernel(phi.phi_t()).unwrap();
        assert_eq!(psi.phi_t(), phi.phi_t());
        // identity kernel
        let psi = phi.quotient_by_kernel(&tr.one()).unwrap();
        assert_eq!(psi.phi_t(), phi.phi_t());
        // tau divides tau * phi_T but moves the constant term T to T^3
        assert_eq!(
            phi.quotient_by_kernel(&tr.monomial(a.one(), 1)).unwrap_err(),
            Error::UnstableKernel
        );
        let k = TorsionKernel::full(&phi, &a.t()).unwrap();
        assert!(k.verify(&phi).unwrap());
    }

    #[test]
    fn descriptor_round_trip() {
        let js = r#"{"q": 3, "r": 2, "prime": "T+1", "phi_T": ["T", "T^2+1", "1"]}"#;
        let d = ModuleDescriptor::from_json(js).unwrap();
        let m = d.load(10).unwrap();
        assert_eq!(m.local.rank(), 2);
        assert!(m.global.is_some());
        assert_eq!(ModuleDescriptor::from_json(&d.to_json()).unwrap(), d);
        let bad = r#"{"q": 3, "r": 2, "prime": "T+1", "phi_T": ["T", "T^^2", "1"]}"#;
        let err = ModuleDescriptor::from_json(bad).unwrap().load(10).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, col: 3, .. }));
        let ram = r#"{"q": 2, "r": 2, "prime": "T", "phi_T": ["T", "w", "1"], "ramification": 3}"#;
        let m = ModuleDescriptor::from_json(ram).unwrap().load(10).unwrap();
        assert!(m.global.is_none());
        assert!(prime_power(12).is_err());
        assert_eq!(prime_power(9).unwrap(), (3, 2));
    }
}

//! The small ring interface shared by twisted polynomials, matrices and
//! series code: finite fields, `F_q[T]` and the local field `F_{q^d}((pi))`.

use std::fmt::Debug;

/// A commutative ring of characteristic `p` together with its element type.
///
/// Elements carry no context; every operation goes through the ring object.
pub trait Ring {
    type Elem: Clone + Debug + PartialEq;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// `true` when no nonzero information is known about `a`.
    fn is_zero(&self, a: &Self::Elem) -> bool;
    /// `a^n` for `n` a power of the characteristic; additive and exact in char p.
    fn frobenius(&self, a: &Self::Elem, n: u64) -> Self::Elem;
    /// Inverse when `a` is a unit of the ring.
    fn inv(&self, a: &Self::Elem) -> Option<Self::Elem>;
    fn from_int(&self, n: i64) -> Self::Elem;
    fn characteristic(&self) -> u64;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    fn is_one(&self, a: &Self::Elem) -> bool {
        self.is_zero(&self.sub(a, &self.one()))
    }

    fn pow(&self, a: &Self::Elem, mut n: u64) -> Self::Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    fn sum<'a, I>(&self, items: I) -> Self::Elem
    where
        I: IntoIterator<Item = &'a Self::Elem>,
        Self::Elem: 'a,
    {
        items.into_iter().fold(self.zero(), |acc, x| self.add(&acc, x))
    }
}

//! Quaternion and imaginary-quaternion algebra.
//!
//! Quaternions are stored real part first, `(w, x, y, z)` on the basis
//! `1, i, j, k`. Imaginary quaternions are identified with vectors of ℝ³;
//! embedding one into [`Quaternion`] sets `w = 0` exactly.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norms below this are treated as zero by [`Quaternion::inverse`] and
/// [`Quaternion::normalize`].
pub const ZERO_NORM: f64 = 1e-300;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// A pure-imaginary quaternion, i.e. a vector of ℝ³.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImQuat {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub const fn real(w: f64) -> Self {
        Self::new(w, 0.0, 0.0, 0.0)
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn re(self) -> f64 {
        self.w
    }

    /// Imaginary part as an ℝ³ vector.
    pub fn im(self) -> ImQuat {
        ImQuat::new(self.x, self.y, self.z)
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Euclidean inner product on ℝ⁴, equal to `Re(conj(self) * other)`.
    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(s * self.w, s * self.x, s * self.y, s * self.z)
    }

    /// Hamilton product.
    pub fn mul(self, b: Self) -> Self {
        let a = self;
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    pub fn inverse(self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2.sqrt() < ZERO_NORM || n2 == 0.0 {
            return Err(Error::ZeroQuaternion);
        }
        Ok(self.conj().scale(1.0 / n2))
    }

    pub fn normalize(self) -> Result<Self> {
        let n = self.norm();
        if n < ZERO_NORM {
            return Err(Error::ZeroQuaternion);
        }
        Ok(self.scale(1.0 / n))
    }

    /// `self * v * self⁻¹` for a unit quaternion, i.e. the rotation of ℝ³
    /// represented by `self`.
    pub fn rotate(self, v: ImQuat) -> ImQuat {
        self.mul(v.into()).mul(self.conj()).im()
    }

    pub fn max_abs_diff(self, other: Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl ImQuat {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);
    pub const I: Self = Self::new(1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(s * self.x, s * self.y, s * self.z)
    }

    pub fn quat(self) -> Quaternion {
        Quaternion::new(0.0, self.x, self.y, self.z)
    }

    pub fn max_abs_diff(self, o: Self) -> f64 {
        (self.x - o.x)
            .abs()
            .max((self.y - o.y).abs())
            .max((self.z - o.z).abs())
    }
}

impl From<ImQuat> for Quaternion {
    fn from(v: ImQuat) -> Self {
        v.quat()
    }
}

/// Hamilton product.
pub fn mul(a: Quaternion, b: Quaternion) -> Quaternion {
    a.mul(b)
}

pub fn inverse(q: Quaternion) -> Result<Quaternion> {
    q.inverse()
}

/// Both sides of `αβ − βα = 2 α×β`: the commutator computed through the
/// Hamilton product, and twice the cross product.
pub fn commutator_cross(a: ImQuat, b: ImQuat) -> (ImQuat, ImQuat) {
    let (qa, qb) = (a.quat(), b.quat());
    let comm = qa.mul(qb) - qb.mul(qa);
    (comm.im(), a.cross(b).scale(2.0))
}

/// Exponential of an imaginary quaternion: `cos|v| + (v/|v|) sin|v|`.
pub fn exp_im(v: ImQuat) -> Quaternion {
    let theta = v.norm();
    if theta == 0.0 {
        return Quaternion::ONE;
    }
    // sin(θ)/θ loses nothing for small θ in this form
    let s = theta.sin() / theta;
    Quaternion::new(theta.cos(), s * v.x, s * v.y, s * v.z)
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for Quaternion {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Quaternion::mul(self, o)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q.scale(self)
    }
}

impl Add for ImQuat {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for ImQuat {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for ImQuat {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for ImQuat {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul<ImQuat> for f64 {
    type Output = ImQuat;
    fn mul(self, v: ImQuat) -> ImQuat {
        v.scale(self)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i + {}j + {}k", self.w, self.x, self.y, self.z)
    }
}

impl fmt::Display for ImQuat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}i + {}j + {}k", self.x, self.y, self.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    /// Multiplication table of the basis {1, i, j, k}, expanded term by term.
    fn brute_force_mul(a: Quaternion, b: Quaternion) -> Quaternion {
        // TABLE[r][c] = (sign, index) of e_r * e_c
        const TABLE: [[(f64, usize); 4]; 4] = [
            [(1.0, 0), (1.0, 1), (1.0, 2), (1.0, 3)],
            [(1.0, 1), (-1.0, 0), (1.0, 3), (-1.0, 2)],
            [(1.0, 2), (-1.0, 3), (-1.0, 0), (1.0, 1)],
            [(1.0, 3), (1.0, 2), (-1.0, 1), (-1.0, 0)],
        ];
        let (ea, eb) = (a.to_array(), b.to_array());
        let mut out = [0.0; 4];
        for r in 0..4 {
            for c in 0..4 {
                let (s, k) = TABLE[r][c];
                out[k] += s * ea[r] * eb[c];
            }
        }
        Quaternion::from_array(out)
    }

    fn arb_quat() -> impl Strategy<Value = Quaternion> {
        prop::array::uniform4(-3.0f64..3.0).prop_map(Quaternion::from_array)
    }

    fn arb_im() -> impl Strategy<Value = ImQuat> {
        prop::array::uniform3(-3.0f64..3.0).prop_map(ImQuat::from_array)
    }

    #[test]
    fn basis_products() {
        assert_eq!(Quaternion::I * Quaternion::J, Quaternion::K);
        assert_eq!(Quaternion::J * Quaternion::K, Quaternion::I);
        assert_eq!(Quaternion::K * Quaternion::I, Quaternion::J);
        assert_eq!(Quaternion::I * Quaternion::I, Quaternion::real(-1.0));
        let q = Quaternion::new(0.3, -1.2, 2.0, 0.7);
        assert_eq!(Quaternion::ONE * q, q);
    }

    #[test]
    fn circle_subgroup() {
        let (s, t) = (0.4f64, 1.3f64);
        let a = Quaternion::new(s.cos(), s.sin(), 0.0, 0.0);
        let b = Quaternion::new(t.cos(), t.sin(), 0.0, 0.0);
        let c = Quaternion::new((s + t).cos(), (s + t).sin(), 0.0, 0.0);
        assert!((a * b).max_abs_diff(c) < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(Quaternion::I.inverse().unwrap(), -Quaternion::I);
        assert_eq!(Quaternion::real(2.0).inverse().unwrap(), Quaternion::real(0.5));
        let q = Quaternion::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0);
        let qi = q.inverse().unwrap();
        assert!(qi.max_abs_diff(Quaternion::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0, 0.0)) < 1e-15);
        assert!(matches!(Quaternion::ZERO.inverse(), Err(Error::ZeroQuaternion)));
        assert!(matches!(Quaternion::ZERO.normalize(), Err(Error::ZeroQuaternion)));
    }

    #[test]
    fn commutator_examples() {
        let (l, r) = commutator_cross(ImQuat::I, ImQuat::J);
        assert_eq!(l, ImQuat::K.scale(2.0));
        assert_eq!(r, ImQuat::K.scale(2.0));
        let (l, r) = commutator_cross(ImQuat::I, ImQuat::I);
        assert_eq!(l, ImQuat::ZERO);
        assert_eq!(r, ImQuat::ZERO);

        // (i+2j)(3k) − (3k)(i+2j) by the multiplication table
        let a = ImQuat::new(1.0, 2.0, 0.0);
        let b = ImQuat::new(0.0, 0.0, 3.0);
        let expect = brute_force_mul(a.quat(), b.quat()) - brute_force_mul(b.quat(), a.quat());
        assert_eq!(expect, Quaternion::new(0.0, 12.0, -6.0, 0.0));
        let (l, r) = commutator_cross(a, b);
        assert_eq!(l, expect.im());
        assert_eq!(r, expect.im());
    }

    #[test]
    fn exp_examples() {
        assert_eq!(exp_im(ImQuat::ZERO), Quaternion::ONE);
        assert!(exp_im(ImQuat::I.scale(FRAC_PI_2)).max_abs_diff(Quaternion::I) < 1e-16);
        let s = 0.83f64;
        let e = exp_im(ImQuat::I.scale(s));
        assert!(e.max_abs_diff(Quaternion::new(s.cos(), s.sin(), 0.0, 0.0)) < 1e-16);
    }

    proptest! {
        #[test]
        fn hamilton_matches_table(a in arb_quat(), b in arb_quat()) {
            prop_assert!((a * b).max_abs_diff(brute_force_mul(a, b)) < 1e-12);
        }

        #[test]
        fn associative(a in arb_quat(), b in arb_quat(), c in arb_quat()) {
            prop_assert!(((a * b) * c).max_abs_diff(a * (b * c)) < 1e-10);
        }

        #[test]
        fn norm_multiplicative(a in arb_quat(), b in arb_quat()) {
            let lhs = (a * b).norm();
            let rhs = a.norm() * b.norm();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }

        #[test]
        fn commutator_is_twice_cross(a in arb_im(), b in arb_im()) {
            let (l, r) = commutator_cross(a, b);
            prop_assert!(l.max_abs_diff(r) <= 1e-12 * (1.0 + a.norm() * b.norm()));
        }

        #[test]
        fn imaginary_product_splits(a in arb_im(), b in arb_im()) {
            let p = brute_force_mul(a.quat(), b.quat());
            prop_assert!((p.re() + a.dot(b)).abs() <= 1e-12 * (1.0 + a.norm() * b.norm()));
            prop_assert!(p.im().max_abs_diff(a.cross(b)) <= 1e-12 * (1.0 + a.norm() * b.norm()));
        }

        #[test]
        fn inverse_and_unit(q in arb_quat()) {
            prop_assume!(q.norm() > 1e-3);
            let qi = q.inverse().unwrap();
            prop_assert!((q * qi).max_abs_diff(Quaternion::ONE) < 1e-12);
            let u = q.normalize().unwrap();
            prop_assert!((u.norm() - 1.0).abs() <= 1e-12);
            prop_assert!(u.inverse().unwrap().max_abs_diff(u.conj()) < 1e-12);
        }

        #[test]
        fn exp_is_unit(v in arb_im()) {
            prop_assert!((exp_im(v).norm() - 1.0).abs() <= 1e-12);
        }
    }
}

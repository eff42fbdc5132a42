//! The homogeneous nearly Kähler structure on S³×S³.
//!
//! Points are pairs of unit quaternions and tangent vectors are stored in the
//! ambient ℝ⁴×ℝ⁴ embedding. The almost complex structure `J`, the almost
//! product structure `P` and the metric `g` are all left-invariant: in the
//! left-trivialization `(α, β) = (p⁻¹U, q⁻¹V)` they are the constant tensors
//!
//! ```text
//! J(α, β) = (2β − α, −2α + β) / √3
//! P(α, β) = (β, α)
//! g = ½(⟨·,·⟩ + ⟨J·, J·⟩)
//! ```
//!
//! and the formulas below are their ambient translations.

use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::{ImQuat, Quaternion};

/// Tolerance on `|norm − 1|` for points and isometry parameters.
pub const UNIT_TOL: f64 = 1e-10;
/// Tolerance on `Re(p̄U)`, `Re(q̄V)` for tangent vectors.
pub const TANGENT_TOL: f64 = 1e-10;
/// Two base points closer than this (componentwise) are the same point.
pub const BASE_TOL: f64 = 1e-9;
/// Plane spanning pairs whose g-Gram determinant is below this are rejected.
pub const GRAM_TOL: f64 = 1e-12;

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointNK {
    pub p: Quaternion,
    pub q: Quaternion,
}

impl PointNK {
    pub const IDENTITY: Self = Self { p: Quaternion::ONE, q: Quaternion::ONE };

    pub fn new(p: Quaternion, q: Quaternion) -> Result<Self> {
        let (p_err, q_err) = (p.norm() - 1.0, q.norm() - 1.0);
        if p_err.abs() > UNIT_TOL || q_err.abs() > UNIT_TOL || !p_err.is_finite() || !q_err.is_finite() {
            return Err(Error::NotOnManifold { p_err, q_err });
        }
        Ok(Self { p, q })
    }

    pub const fn new_unchecked(p: Quaternion, q: Quaternion) -> Self {
        Self { p, q }
    }

    /// Projects both factors back onto the unit sphere.
    pub fn normalized(self) -> Result<Self> {
        Ok(Self { p: self.p.normalize()?, q: self.q.normalize()? })
    }

    pub fn distance_inf(&self, other: &Self) -> f64 {
        self.p.max_abs_diff(other.p).max(self.q.max_abs_diff(other.q))
    }

    pub fn to_array(self) -> [f64; 8] {
        let (p, q) = (self.p.to_array(), self.q.to_array());
        [p[0], p[1], p[2], p[3], q[0], q[1], q[2], q[3]]
    }

    pub fn from_array(a: [f64; 8]) -> Result<Self> {
        Self::new(
            Quaternion::new(a[0], a[1], a[2], a[3]),
            Quaternion::new(a[4], a[5], a[6], a[7]),
        )
    }

    /// `p q⁻¹`, the factor linking the two tangent spaces in `J` and `P`.
    fn pq_inv(&self) -> Quaternion {
        self.p * self.q.conj()
    }
}

/// A tangent vector `(U, V)` at a point `(p, q)`, in ambient coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentNK {
    pub base: PointNK,
    pub u: Quaternion,
    pub v: Quaternion,
}

impl TangentNK {
    pub fn new(base: PointNK, u: Quaternion, v: Quaternion) -> Result<Self> {
        let (u_err, v_err) = (base.p.dot(u), base.q.dot(v));
        if u_err.abs() > TANGENT_TOL || v_err.abs() > TANGENT_TOL {
            return Err(Error::NotTangent { u_err, v_err });
        }
        Ok(Self { base, u, v })
    }

    pub const fn new_unchecked(base: PointNK, u: Quaternion, v: Quaternion) -> Self {
        Self { base, u, v }
    }

    /// Removes the radial components so that the vector is exactly tangent.
    pub fn project(base: PointNK, u: Quaternion, v: Quaternion) -> Self {
        let u = u - base.p.scale(base.p.dot(u) / base.p.norm_sqr());
        let v = v - base.q.scale(base.q.dot(v) / base.q.norm_sqr());
        Self { base, u, v }
    }

    pub fn zero(base: PointNK) -> Self {
        Self { base, u: Quaternion::ZERO, v: Quaternion::ZERO }
    }

    /// `(p·a, q·b)` for imaginary quaternions `a`, `b`.
    pub fn from_left_trivialized(base: PointNK, a: ImQuat, b: ImQuat) -> Self {
        Self { base, u: base.p * a.quat(), v: base.q * b.quat() }
    }

    /// `(p⁻¹U, q⁻¹V)` as imaginary quaternions.
    pub fn left_trivialized(&self) -> (ImQuat, ImQuat) {
        ((self.base.p.conj() * self.u).im(), (self.base.q.conj() * self.v).im())
    }

    pub fn tangency_error(&self) -> f64 {
        self.base.p.dot(self.u).abs().max(self.base.q.dot(self.v).abs())
    }

    pub fn scale(self, s: f64) -> Self {
        Self { base: self.base, u: self.u.scale(s), v: self.v.scale(s) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.u.max_abs_diff(other.u).max(self.v.max_abs_diff(other.v))
    }

    pub fn to_array(self) -> [f64; 8] {
        let (u, v) = (self.u.to_array(), self.v.to_array());
        [u[0], u[1], u[2], u[3], v[0], v[1], v[2], v[3]]
    }

    /// The almost complex structure
    /// `J(U,V) = (2pq⁻¹V − U, −2qp⁻¹U + V)/√3`.
    pub fn j(&self) -> Self {
        let pq = self.base.pq_inv();
        let qp = pq.conj();
        Self {
            base: self.base,
            u: (pq * self.v).scale(2.0 * INV_SQRT3) - self.u.scale(INV_SQRT3),
            v: (qp * self.u).scale(-2.0 * INV_SQRT3) + self.v.scale(INV_SQRT3),
        }
    }

    /// The almost product structure `P(U,V) = (pq⁻¹V, qp⁻¹U)`.
    pub fn p(&self) -> Self {
        let pq = self.base.pq_inv();
        Self { base: self.base, u: pq * self.v, v: pq.conj() * self.u }
    }

    /// `g(self, self)`.
    pub fn g_norm_sqr(&self) -> f64 {
        g_unchecked(self, self)
    }

    pub fn g_norm(&self) -> f64 {
        self.g_norm_sqr().sqrt()
    }
}

impl Add for TangentNK {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { base: self.base, u: self.u + o.u, v: self.v + o.v }
    }
}

impl Sub for TangentNK {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { base: self.base, u: self.u - o.u, v: self.v - o.v }
    }
}

impl Neg for TangentNK {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

pub fn check_same_base(x: &TangentNK, y: &TangentNK) -> Result<()> {
    let d = x.base.distance_inf(&y.base);
    if d > BASE_TOL {
        return Err(Error::BaseMismatch(d));
    }
    Ok(())
}

/// The standard product metric `Re(Ū₁U₂) + Re(V̄₁V₂)`.
pub fn product_metric(x: &TangentNK, y: &TangentNK) -> Result<f64> {
    check_same_base(x, y)?;
    Ok(x.u.dot(y.u) + x.v.dot(y.v))
}

/// The nearly Kähler metric `g(X,Y) = ½(⟨X,Y⟩ + ⟨JX,JY⟩)`.
pub fn g(x: &TangentNK, y: &TangentNK) -> Result<f64> {
    check_same_base(x, y)?;
    Ok(g_unchecked(x, y))
}

pub(crate) fn g_unchecked(x: &TangentNK, y: &TangentNK) -> f64 {
    let (jx, jy) = (x.j(), y.j());
    0.5 * (x.u.dot(y.u) + x.v.dot(y.v) + jx.u.dot(jy.u) + jx.v.dot(jy.v))
}

/// The curvature tensor `R̃(U,V)W` of `g`:
///
/// ```text
/// 5/12 (g(V,W)U − g(U,W)V)
/// + 1/12 (g(JV,W)JU − g(JU,W)JV − 2g(JU,V)JW)
/// + 1/3 (g(PV,W)PU − g(PU,W)PV + g(PJV,W)PJU − g(PJU,W)PJV)
/// ```
pub fn curvature(u: &TangentNK, v: &TangentNK, w: &TangentNK) -> Result<TangentNK> {
    check_same_base(u, v)?;
    check_same_base(u, w)?;
    Ok(curvature_unchecked(u, v, w))
}

pub(crate) fn curvature_unchecked(u: &TangentNK, v: &TangentNK, w: &TangentNK) -> TangentNK {
    let (ju, jv, jw) = (u.j(), v.j(), w.j());
    let (pu, pv) = (u.p(), v.p());
    let (pju, pjv) = (ju.p(), jv.p());
    let g = g_unchecked;

    let t1 = u.scale(g(v, w)) - v.scale(g(u, w));
    let t2 = ju.scale(g(&jv, w)) - jv.scale(g(&ju, w)) - jw.scale(2.0 * g(&ju, v));
    let t3 = pu.scale(g(&pv, w)) - pv.scale(g(&pu, w)) + pju.scale(g(&pjv, w)) - pjv.scale(g(&pju, w));
    t1.scale(5.0 / 12.0) + t2.scale(1.0 / 12.0) + t3.scale(1.0 / 3.0)
}

/// A 2-plane in a tangent space, given by a spanning pair.
#[derive(Clone, Copy, Debug)]
pub struct Plane2 {
    pub base: PointNK,
    pub x: TangentNK,
    pub y: TangentNK,
}

impl Plane2 {
    pub fn new(x: TangentNK, y: TangentNK) -> Result<Self> {
        check_same_base(&x, &y)?;
        let det = gram_det(&x, &y);
        if !(det > GRAM_TOL) {
            return Err(Error::DegeneratePlane(det));
        }
        Ok(Self { base: x.base, x, y })
    }

    /// The J-invariant plane spanned by `x` and `Jx`.
    pub fn complex_line(x: TangentNK) -> Result<Self> {
        Self::new(x, x.j())
    }

    /// g-orthonormal basis of the plane (Gram–Schmidt).
    pub fn orthonormal(&self) -> (TangentNK, TangentNK) {
        let e1 = self.x.scale(1.0 / self.x.g_norm());
        let y = self.y - e1.scale(g_unchecked(&e1, &self.y));
        let e2 = y.scale(1.0 / y.g_norm());
        (e1, e2)
    }
}

fn gram_det(x: &TangentNK, y: &TangentNK) -> f64 {
    let (xx, yy, xy) = (g_unchecked(x, x), g_unchecked(y, y), g_unchecked(x, y));
    xx * yy - xy * xy
}

/// Sectional curvature `g(R̃(X,Y)Y, X) / (g(X,X)g(Y,Y) − g(X,Y)²)`.
pub fn sectional_curvature(plane: &Plane2) -> Result<f64> {
    let det = gram_det(&plane.x, &plane.y);
    if !(det > GRAM_TOL) {
        return Err(Error::DegeneratePlane(det));
    }
    let (e1, e2) = plane.orthonormal();
    Ok(g_unchecked(&curvature_unchecked(&e1, &e2, &e2), &e1))
}

/// J-invariant plane on which `P` acts as an involution: spanned by
/// `X = Y + PY` (so `PX = X`) and `JX`.
pub fn p_invariant_complex_plane(y: TangentNK) -> Result<Plane2> {
    Plane2::complex_line(y + y.p())
}

/// J-invariant plane with `P(Ω) ⊥ Ω`, built from a unit imaginary
/// quaternion `x` and a direction `xdot ⊥ x`: the tangent of
/// `x ↦ ½(1 − √3x, 1 + √3x)` left-translated to `base`.
pub fn p_orthogonal_complex_plane(base: PointNK, x: ImQuat, xdot: ImQuat) -> Result<Plane2> {
    let s3 = 3f64.sqrt();
    let xcx = x.cross(xdot);
    let a = (xdot + xcx.scale(s3)).scale(-s3 / 4.0);
    let b = (xdot - xcx.scale(s3)).scale(s3 / 4.0);
    Plane2::complex_line(TangentNK::from_left_trivialized(base, a, b))
}

/// The isometry `(p,q) ↦ (apc⁻¹, bqc⁻¹)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsometryNK {
    pub a: Quaternion,
    pub b: Quaternion,
    pub c: Quaternion,
}

impl IsometryNK {
    pub const IDENTITY: Self = Self { a: Quaternion::ONE, b: Quaternion::ONE, c: Quaternion::ONE };

    pub fn new(a: Quaternion, b: Quaternion, c: Quaternion) -> Result<Self> {
        for x in [a, b, c] {
            let err = x.norm() - 1.0;
            if err.abs() > UNIT_TOL {
                return Err(Error::NotUnit(err));
            }
        }
        Ok(Self { a, b, c })
    }

    pub fn apply_point(&self, x: &PointNK) -> PointNK {
        let ci = self.c.conj();
        PointNK::new_unchecked(self.a * x.p * ci, self.b * x.q * ci)
    }

    /// The differential `(U,V) ↦ (aUc⁻¹, bVc⁻¹)`.
    pub fn apply_tangent(&self, x: &TangentNK) -> TangentNK {
        let ci = self.c.conj();
        TangentNK::new_unchecked(self.apply_point(&x.base), self.a * x.u * ci, self.b * x.v * ci)
    }

    /// Effect on left-trivialized frame data: `α ↦ cαc⁻¹`.
    pub fn apply_frame(&self, alpha: ImQuat) -> ImQuat {
        self.c.rotate(alpha)
    }
}

pub fn isometry_apply_point(f: &IsometryNK, x: &PointNK) -> PointNK {
    f.apply_point(x)
}

pub fn isometry_apply_tangent(f: &IsometryNK, x: &TangentNK) -> TangentNK {
    f.apply_tangent(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_point, random_tangent, Sampler};

    const S3: f64 = 1.732_050_807_568_877_2;

    fn tangent_at_identity(a: ImQuat, b: ImQuat) -> TangentNK {
        TangentNK::from_left_trivialized(PointNK::IDENTITY, a, b)
    }

    #[test]
    fn j_at_identity() {
        let x = tangent_at_identity(ImQuat::I, ImQuat::ZERO);
        let jx = x.j();
        let expect = tangent_at_identity(ImQuat::I.scale(-1.0 / S3), ImQuat::I.scale(-2.0 / S3));
        assert!(jx.max_abs_diff(&expect) < 1e-15);

        // Jφ_s = −φ_s/√3 − 2φ_t/√3 on the flat torus at (0, 0)
        let phi_t = tangent_at_identity(ImQuat::ZERO, ImQuat::I);
        let combo = x.scale(-1.0 / S3) + phi_t.scale(-2.0 / S3);
        assert!(jx.max_abs_diff(&combo) < 1e-15);
    }

    #[test]
    fn p_at_identity_swaps() {
        let (a, b) = (ImQuat::new(0.3, -1.0, 2.0), ImQuat::new(1.5, 0.2, -0.7));
        let px = tangent_at_identity(a, b).p();
        assert!(px.max_abs_diff(&tangent_at_identity(b, a)) < 1e-15);
    }

    #[test]
    fn product_metric_examples() {
        let e1 = tangent_at_identity(ImQuat::I, ImQuat::ZERO);
        let e2 = tangent_at_identity(ImQuat::ZERO, ImQuat::I);
        assert_eq!(product_metric(&e1, &e1).unwrap(), 1.0);
        assert_eq!(product_metric(&e1, &e2).unwrap(), 0.0);
        assert!((g(&e1, &e1).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((g(&e1, &e2).unwrap() + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn base_mismatch_is_rejected() {
        let x = random_tangent(random_point(1), 2);
        let y = random_tangent(random_point(3), 4);
        assert!(matches!(g(&x, &y), Err(Error::BaseMismatch(_))));
        assert!(matches!(product_metric(&x, &y), Err(Error::BaseMismatch(_))));
        assert!(matches!(curvature(&x, &x, &y), Err(Error::BaseMismatch(_))));
    }

    #[test]
    fn validation() {
        assert!(PointNK::new(Quaternion::real(1.1), Quaternion::ONE).is_err());
        let base = random_point(5);
        assert!(TangentNK::new(base, base.p, Quaternion::ZERO).is_err());
        assert!(IsometryNK::new(Quaternion::real(2.0), Quaternion::ONE, Quaternion::ONE).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_valid() {
        assert_eq!(random_point(7), random_point(7));
        let x = random_point(7);
        assert!((x.p.norm() - 1.0).abs() <= 1e-12 && (x.q.norm() - 1.0).abs() <= 1e-12);
        let t = random_tangent(x, 8);
        assert_eq!(t, random_tangent(x, 8));
        assert!(t.tangency_error() <= 1e-12);
    }

    #[test]
    fn sampled_tangents_span_six_dimensions() {
        let mut s = Sampler::new(11);
        let base = s.point();
        let rows: Vec<[f64; 8]> = (0..6).map(|_| s.tangent(base).to_array()).collect();
        let m = nalgebra::DMatrix::from_fn(6, 8, |r, c| rows[r][c]);
        let sv = m.singular_values();
        assert!(sv.iter().all(|&x| x > 1e-6), "{sv}");
    }

    #[test]
    fn degenerate_plane() {
        let x = random_tangent(random_point(9), 10);
        assert!(matches!(Plane2::new(x, x.scale(2.0)), Err(Error::DegeneratePlane(_))));
    }

    #[test]
    fn identity_isometry() {
        let x = random_tangent(random_point(12), 13);
        let y = IsometryNK::IDENTITY.apply_tangent(&x);
        assert!(y.max_abs_diff(&x) < 1e-15);
        assert!(y.base.distance_inf(&x.base) < 1e-15);
    }
}

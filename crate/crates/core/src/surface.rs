//! Parametrized almost complex surfaces.
//!
//! A surface `φ(u,v) = (p, q)` is almost complex with the orientation used
//! here when `Jφ_u = φ_v`. Its left-translated frame fields
//!
//! ```text
//! α = p⁻¹p_u,  β = p⁻¹p_v,  γ = q⁻¹q_u,  δ = q⁻¹q_v
//! ```
//!
//! are imaginary quaternions with `γ = (√3/2)β + ½α`, `δ = ½β − (√3/2)α`,
//! the induced metric is `(α·α + β·β)(du² + dv²)`, and the frames satisfy
//!
//! ```text
//! α_v − β_u = 2 α×β,   α_u + β_v = (2/√3) α×β.
//! ```
//!
//! The quadratic differential `Λ dz² = g(Pφ_z, φ_z) dz²` is holomorphic and
//! equals `½ e^{−iπ/6} w dz²` with `w = 2α·β + i(α·α − β·β)`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{d_u, d_v, first_derivative_weights, laplacian, Domain, Grid2, GridGeom};
use crate::nkspace::{g_unchecked, IsometryNK, PointNK, TangentNK};
use crate::quat::{ImQuat, Quaternion};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Default node count per axis.
pub const DEFAULT_GRID: usize = 129;
/// Step used when an analytic surface has no closed-form derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Almost-complex residual tolerated by [`frame_fields`] for surfaces with
/// exact derivatives.
pub const AC_TOL_ANALYTIC: f64 = 1e-8;
/// Same, for surfaces whose derivatives are finite differences.
pub const AC_TOL_FD: f64 = 1e-3;
/// Conformal factors at or below this are degenerate.
pub const LAMBDA_MIN: f64 = 1e-10;

pub type PointFn = dyn Fn(f64, f64) -> PointNK + Send + Sync;
pub type DerivFn = dyn Fn(f64, f64) -> (TangentNK, TangentNK) + Send + Sync;

#[derive(Clone)]
enum Source {
    Analytic { point: Arc<PointFn>, derivs: Option<Arc<DerivFn>>, fd_step: f64 },
    Nodes(Arc<Vec<PointNK>>),
}

/// A map from a rectangle of the `(u, v)` plane to S³×S³, sampled on a grid.
#[derive(Clone)]
pub struct ParamSurface {
    pub name: String,
    geom: GridGeom,
    source: Source,
}

impl fmt::Debug for ParamSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match &self.source {
            Source::Analytic { derivs: Some(_), .. } => "analytic",
            Source::Analytic { derivs: None, .. } => "sampled",
            Source::Nodes(_) => "grid",
        };
        f.debug_struct("ParamSurface").field("name", &self.name).field("geom", &self.geom).field("mode", &mode).finish()
    }
}

impl ParamSurface {
    /// Surface with closed-form point and derivative maps.
    pub fn analytic(
        name: impl Into<String>,
        geom: GridGeom,
        point: impl Fn(f64, f64) -> PointNK + Send + Sync + 'static,
        derivs: impl Fn(f64, f64) -> (TangentNK, TangentNK) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            geom,
            source: Source::Analytic { point: Arc::new(point), derivs: Some(Arc::new(derivs)), fd_step: DEFAULT_FD_STEP },
        }
    }

    /// Surface given only by its point map; derivatives are central
    /// differences with `fd_step`.
    pub fn sampled(
        name: impl Into<String>,
        geom: GridGeom,
        point: impl Fn(f64, f64) -> PointNK + Send + Sync + 'static,
        fd_step: f64,
    ) -> Self {
        Self { name: name.into(), geom, source: Source::Analytic { point: Arc::new(point), derivs: None, fd_step } }
    }

    /// Surface known only at grid nodes (u-major order).
    pub fn from_nodes(name: impl Into<String>, geom: GridGeom, nodes: Vec<PointNK>) -> Result<Self> {
        if nodes.len() != geom.len() {
            return Err(Error::BadInput(format!("expected {} nodes, got {}", geom.len(), nodes.len())));
        }
        for (k, x) in nodes.iter().enumerate() {
            PointNK::new(x.p, x.q).map_err(|e| Error::BadInput(format!("node {k}: {e}")))?;
        }
        Ok(Self { name: name.into(), geom, source: Source::Nodes(Arc::new(nodes)) })
    }

    pub fn geom(&self) -> &GridGeom {
        &self.geom
    }

    pub fn domain(&self) -> &Domain {
        &self.geom.domain
    }

    pub fn has_exact_derivatives(&self) -> bool {
        matches!(self.source, Source::Analytic { derivs: Some(_), .. })
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.source, Source::Nodes(_))
    }

    /// Node spacing for grid surfaces, `None` otherwise.
    pub fn grid_spacing(&self) -> Option<(f64, f64)> {
        self.is_grid().then(|| (self.geom.du(), self.geom.dv()))
    }

    /// Default almost-complex tolerance for this derivative mode.
    pub fn ac_tolerance(&self) -> f64 {
        if self.has_exact_derivatives() {
            AC_TOL_ANALYTIC
        } else {
            AC_TOL_FD
        }
    }

    /// Same surface resampled on an `nu × nv` grid. Node surfaces cannot be
    /// resampled.
    pub fn with_grid(mut self, nu: usize, nv: usize) -> Result<Self> {
        if self.is_grid() {
            return Err(Error::BadInput("a node-sampled surface cannot be regridded".into()));
        }
        self.geom = GridGeom::new(self.geom.domain, nu, nv)?;
        Ok(self)
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        if self.is_grid() {
            return Err(Error::BadInput("a node-sampled surface cannot change domain".into()));
        }
        self.geom = GridGeom::new(domain, self.geom.nu, self.geom.nv)?;
        Ok(self)
    }

    pub fn eval(&self, u: f64, v: f64) -> Result<PointNK> {
        match &self.source {
            Source::Analytic { point, .. } => Ok(point(u, v)),
            Source::Nodes(nodes) => {
                let (i, j) = self.geom.node_of(u, v).ok_or(Error::OffGrid { u, v })?;
                Ok(nodes[self.geom.index(i, j)])
            }
        }
    }

    pub fn node(&self, i: usize, j: usize) -> PointNK {
        match &self.source {
            Source::Analytic { point, .. } => point(self.geom.u(i), self.geom.v(j)),
            Source::Nodes(nodes) => nodes[self.geom.index(i, j)],
        }
    }

    pub fn nodes(&self) -> Grid2<PointNK> {
        Grid2::from_fn(self.geom, |i, j| self.node(i, j))
    }

    /// `(φ, φ_u, φ_v)` at node `(i, j)`.
    pub fn jet_at_node(&self, i: usize, j: usize) -> (PointNK, TangentNK, TangentNK) {
        let (u, v) = (self.geom.u(i), self.geom.v(j));
        match &self.source {
            Source::Analytic { point, derivs: Some(d), .. } => {
                let (a, b) = d(u, v);
                (point(u, v), a, b)
            }
            Source::Analytic { point, derivs: None, fd_step } => {
                let x = point(u, v);
                let h = *fd_step;
                let diff = |a: PointNK, b: PointNK| {
                    TangentNK::project(x, (a.p - b.p).scale(0.5 / h), (a.q - b.q).scale(0.5 / h))
                };
                (x, diff(point(u + h, v), point(u - h, v)), diff(point(u, v + h), point(u, v - h)))
            }
            Source::Nodes(nodes) => {
                let x = nodes[self.geom.index(i, j)];
                let pu = grid_derivative(&self.geom, nodes, i, j, true);
                let pv = grid_derivative(&self.geom, nodes, i, j, false);
                (x, TangentNK::project(x, pu.0, pu.1), TangentNK::project(x, pv.0, pv.1))
            }
        }
    }

    /// The image under a nearly Kähler isometry.
    pub fn transformed(&self, f: &IsometryNK) -> Self {
        let f = *f;
        let source = match &self.source {
            Source::Analytic { point, derivs, fd_step } => {
                let point = point.clone();
                let p2 = point.clone();
                Source::Analytic {
                    point: Arc::new(move |u, v| f.apply_point(&p2(u, v))),
                    derivs: derivs.clone().map(|d| {
                        Arc::new(move |u: f64, v: f64| {
                            let (a, b) = d(u, v);
                            (f.apply_tangent(&a), f.apply_tangent(&b))
                        }) as Arc<DerivFn>
                    }),
                    fd_step: *fd_step,
                }
            }
            Source::Nodes(nodes) => Source::Nodes(Arc::new(nodes.iter().map(|x| f.apply_point(x)).collect())),
        };
        Self { name: self.name.clone(), geom: self.geom, source }
    }

    /// `φ ∘ f` for a holomorphic `f(z) = x + iy` of `z = u + iv` on `geom`;
    /// `map` returns `(f(z), f'(z))`. Holomorphic maps keep `Jφ_u = φ_v`.
    /// Needs closed-form derivatives.
    pub fn reparametrized(
        &self,
        geom: GridGeom,
        map: impl Fn(Complex64) -> (Complex64, Complex64) + Send + Sync + 'static,
    ) -> Result<Self> {
        let Source::Analytic { point, derivs: Some(d), .. } = &self.source else {
            return Err(Error::BadInput("reparametrization needs closed-form derivatives".into()));
        };
        let (point, d) = (point.clone(), d.clone());
        let map = Arc::new(map);
        let m2 = map.clone();
        Ok(Self::analytic(
            format!("{}-reparametrized", self.name),
            geom,
            move |u, v| {
                let z = map(Complex64::new(u, v)).0;
                point(z.re, z.im)
            },
            move |u, v| {
                let (z, dz) = m2(Complex64::new(u, v));
                let (px, py) = d(z.re, z.im);
                (px.scale(dz.re) + py.scale(dz.im), px.scale(-dz.im) + py.scale(dz.re))
            },
        ))
    }
}

/// Fourth-order difference of node data along one axis.
fn grid_derivative(geom: &GridGeom, nodes: &[PointNK], i: usize, j: usize, along_u: bool) -> (Quaternion, Quaternion) {
    let (pos, n, h, periodic) = if along_u {
        (i, geom.nu, geom.du(), geom.domain.periodic[0])
    } else {
        (j, geom.nv, geom.dv(), geom.domain.periodic[1])
    };
    let mut p = Quaternion::ZERO;
    let mut q = Quaternion::ZERO;
    for (k, c) in first_derivative_weights(pos, n, periodic) {
        let m = (pos as isize + k).rem_euclid(n as isize) as usize;
        let x = if along_u { nodes[geom.index(m, j)] } else { nodes[geom.index(i, m)] };
        p += x.p.scale(c / h);
        q += x.q.scale(c / h);
    }
    (p, q)
}

fn unit_circle(s: f64) -> Quaternion {
    Quaternion::new(s.cos(), s.sin(), 0.0, 0.0)
}

/// The flat torus `φ(s,t) = (cos s + i sin s, cos t + i sin t)` on
/// `[0, 2π)²`.
pub fn example1_torus() -> ParamSurface {
    let geom = GridGeom::new(Domain::new(0.0, TAU, 0.0, TAU).with_periodic([true, true]), DEFAULT_GRID - 1, DEFAULT_GRID - 1)
        .expect("valid grid");
    ParamSurface::analytic(
        "torus",
        geom,
        |s, t| PointNK::new_unchecked(unit_circle(s), unit_circle(t)),
        |s, t| {
            let x = PointNK::new_unchecked(unit_circle(s), unit_circle(t));
            (
                TangentNK::from_left_trivialized(x, ImQuat::I, ImQuat::ZERO),
                TangentNK::from_left_trivialized(x, ImQuat::ZERO, ImQuat::I),
            )
        },
    )
}

/// The flat torus reparametrized by `s = u − v/√3`, `t = −2v/√3`, for which
/// `Jφ_u = φ_v`. Periodic in `u` with period 2π; `v ∈ [0, √3π]`.
pub fn example1_torus_isothermal() -> ParamSurface {
    let geom = GridGeom::new(
        Domain::new(0.0, TAU, 0.0, SQRT3 * PI).with_periodic([true, false]),
        DEFAULT_GRID - 1,
        DEFAULT_GRID,
    )
    .expect("valid grid");
    let point = |u: f64, v: f64| PointNK::new_unchecked(unit_circle(u - v / SQRT3), unit_circle(-2.0 * v / SQRT3));
    ParamSurface::analytic("torus-isothermal", geom, point, move |u, v| {
        let x = point(u, v);
        (
            TangentNK::from_left_trivialized(x, ImQuat::I, ImQuat::ZERO),
            TangentNK::from_left_trivialized(x, ImQuat::I.scale(-1.0 / SQRT3), ImQuat::I.scale(-2.0 / SQRT3)),
        )
    })
}

/// Isothermal parametrization of the unit sphere of imaginary quaternions,
/// `x(u,v) = (2u, 2v, 1 − u² − v²)/(1 + u² + v²)`, with its derivatives.
pub fn sphere_chart(u: f64, v: f64) -> (ImQuat, ImQuat, ImQuat) {
    let r2 = u * u + v * v;
    let d = 1.0 + r2;
    let d2 = d * d;
    let x = ImQuat::new(2.0 * u / d, 2.0 * v / d, (1.0 - r2) / d);
    let xu = ImQuat::new(2.0 * (1.0 - u * u + v * v) / d2, -4.0 * u * v / d2, -4.0 * u / d2);
    let xv = ImQuat::new(-4.0 * u * v / d2, 2.0 * (1.0 + u * u - v * v) / d2, -4.0 * v / d2);
    (x, xu, xv)
}

/// `ψ(x) = ½(1 − √3x, 1 + √3x)` for a unit imaginary quaternion `x`.
pub fn sphere_map(x: ImQuat) -> PointNK {
    let a = x.scale(SQRT3 / 2.0);
    PointNK::new_unchecked(Quaternion::new(0.5, -a.x, -a.y, -a.z), Quaternion::new(0.5, a.x, a.y, a.z))
}

/// The totally geodesic almost complex sphere `ψ ∘ x` on `[−1, 1]²`.
pub fn example2_sphere() -> ParamSurface {
    let geom = GridGeom::new(Domain::new(-1.0, 1.0, -1.0, 1.0), DEFAULT_GRID, DEFAULT_GRID).expect("valid grid");
    ParamSurface::analytic(
        "sphere",
        geom,
        |u, v| sphere_map(sphere_chart(u, v).0),
        |u, v| {
            let (x, xu, xv) = sphere_chart(u, v);
            let base = sphere_map(x);
            let k = SQRT3 / 2.0;
            let d = |t: ImQuat| TangentNK::new_unchecked(base, t.quat().scale(-k), t.quat().scale(k));
            (d(xu), d(xv))
        },
    )
}

/// Builtin surface by name: `torus`, `torus-isothermal` or `sphere`.
pub fn builtin(name: &str) -> Option<ParamSurface> {
    match name {
        "torus" => Some(example1_torus()),
        "torus-isothermal" => Some(example1_torus_isothermal()),
        "sphere" => Some(example2_sphere()),
        _ => None,
    }
}

/// Nodewise `‖Jφ_u − φ_v‖_g`.
pub fn almost_complex_residual(s: &ParamSurface) -> Grid2<f64> {
    Grid2::from_fn(*s.geom(), |i, j| {
        let (_, pu, pv) = s.jet_at_node(i, j);
        (pu.j() - pv).g_norm()
    })
}

/// Nodewise g-distance of `Jφ_u` from the tangent plane, relative to
/// `|φ_u|`. Zero exactly when the plane is J-invariant, whatever the
/// parametrization.
pub fn j_invariance_residual(s: &ParamSurface) -> Grid2<f64> {
    Grid2::from_fn(*s.geom(), |i, j| {
        let (_, pu, pv) = s.jet_at_node(i, j);
        let jpu = pu.j();
        let (e, f, g) = (g_unchecked(&pu, &pu), g_unchecked(&pu, &pv), g_unchecked(&pv, &pv));
        let det = e * g - f * f;
        if !(det > 0.0) {
            return f64::INFINITY;
        }
        let (a, b) = (g_unchecked(&jpu, &pu), g_unchecked(&jpu, &pv));
        let (x, y) = ((g * a - f * b) / det, (e * b - f * a) / det);
        (jpu - pu.scale(x) - pv.scale(y)).g_norm() / e.sqrt()
    })
}

fn opposite_residual(s: &ParamSurface) -> f64 {
    Grid2::from_fn(*s.geom(), |i, j| {
        let (_, pu, pv) = s.jet_at_node(i, j);
        (pu.j() + pv).g_norm()
    })
    .max_all()
}

/// Fails with `NotAlmostComplex` unless `‖Jφ_u − φ_v‖ ≤ tol` at every node.
pub fn check_almost_complex(s: &ParamSurface, tol: f64) -> Result<f64> {
    let residual = almost_complex_residual(s).max_all();
    if !(residual <= tol) {
        let opposite = opposite_residual(s) <= tol;
        return Err(Error::NotAlmostComplex { residual, tolerance: tol, opposite });
    }
    Ok(residual)
}

/// Left-translated frame fields `α, β, γ, δ` on the grid.
#[derive(Clone, Debug)]
pub struct FrameFields {
    pub alpha: Grid2<ImQuat>,
    pub beta: Grid2<ImQuat>,
    pub gamma: Grid2<ImQuat>,
    pub delta: Grid2<ImQuat>,
    /// Largest discarded real part of `p⁻¹p_u`, … (zero up to rounding).
    pub real_part_residual: f64,
}

impl FrameFields {
    pub fn geom(&self) -> &GridGeom {
        &self.alpha.geom
    }

    /// Frames from `α`, `β` alone, with `γ`, `δ` from the almost complex
    /// relations.
    pub fn from_alpha_beta(alpha: Grid2<ImQuat>, beta: Grid2<ImQuat>) -> Self {
        let gamma = Grid2::from_fn(alpha.geom, |i, j| gamma_of(alpha.at(i, j), beta.at(i, j)));
        let delta = Grid2::from_fn(alpha.geom, |i, j| delta_of(alpha.at(i, j), beta.at(i, j)));
        Self { alpha, beta, gamma, delta, real_part_residual: 0.0 }
    }

    /// Largest deviation from `γ = (√3/2)β + ½α`, `δ = ½β − (√3/2)α`.
    pub fn gd_residual(&self) -> f64 {
        let mut m = 0.0f64;
        for k in 0..self.alpha.data.len() {
            let (a, b) = (self.alpha.data[k], self.beta.data[k]);
            m = m.max(self.gamma.data[k].max_abs_diff(gamma_of(a, b)));
            m = m.max(self.delta.data[k].max_abs_diff(delta_of(a, b)));
        }
        m
    }

    /// Frames after the isometry `(a, b, c)`: every field is conjugated by `c`.
    pub fn conjugated(&self, c: Quaternion) -> Self {
        let r = |g: &Grid2<ImQuat>| g.map(|x| c.rotate(x));
        Self {
            alpha: r(&self.alpha),
            beta: r(&self.beta),
            gamma: r(&self.gamma),
            delta: r(&self.delta),
            real_part_residual: self.real_part_residual,
        }
    }
}

pub fn gamma_of(alpha: ImQuat, beta: ImQuat) -> ImQuat {
    beta.scale(SQRT3 / 2.0) + alpha.scale(0.5)
}

pub fn delta_of(alpha: ImQuat, beta: ImQuat) -> ImQuat {
    beta.scale(0.5) - alpha.scale(SQRT3 / 2.0)
}

/// Frame fields with the default almost-complex tolerance of the surface.
pub fn frame_fields(s: &ParamSurface) -> Result<FrameFields> {
    frame_fields_with_tol(s, s.ac_tolerance())
}

pub fn frame_fields_with_tol(s: &ParamSurface, tol: f64) -> Result<FrameFields> {
    check_almost_complex(s, tol)?;
    let raw = Grid2::from_fn(*s.geom(), |i, j| {
        let (x, pu, pv) = s.jet_at_node(i, j);
        let (pi, qi) = (x.p.conj(), x.q.conj());
        [pi * pu.u, pi * pv.u, qi * pu.v, qi * pv.v]
    });
    let real = raw.data.iter().flat_map(|a| a.iter().map(|q| q.w.abs())).fold(0.0, f64::max);
    let part = |k: usize| raw.map(|a| a[k].im());
    Ok(FrameFields { alpha: part(0), beta: part(1), gamma: part(2), delta: part(3), real_part_residual: real })
}

/// Nodewise norms of `α_v − β_u − 2α×β` and `α_u + β_v − (2/√3)α×β`.
pub fn integrability_residuals(f: &FrameFields) -> (Grid2<f64>, Grid2<f64>) {
    let (a_u, a_v) = (d_u(&f.alpha), d_v(&f.alpha));
    let (b_u, b_v) = (d_u(&f.beta), d_v(&f.beta));
    let geom = *f.geom();
    let minus = Grid2::from_fn(geom, |i, j| {
        let c = f.alpha.at(i, j).cross(f.beta.at(i, j));
        (a_v.at(i, j) - b_u.at(i, j) - c.scale(2.0)).norm()
    });
    let plus = Grid2::from_fn(geom, |i, j| {
        let c = f.alpha.at(i, j).cross(f.beta.at(i, j));
        (a_u.at(i, j) + b_v.at(i, j) - c.scale(2.0 / SQRT3)).norm()
    });
    (minus, plus)
}

/// Conformal factor `λ = α·α + β·β` and Gaussian curvature
/// `K = −Δ(ln λ) / (2λ)`.
pub fn induced_metric_and_k(f: &FrameFields) -> Result<(Grid2<f64>, Grid2<f64>)> {
    let lambda = Grid2::from_fn(*f.geom(), |i, j| f.alpha.at(i, j).norm_sqr() + f.beta.at(i, j).norm_sqr());
    let min = lambda.min_all();
    if !(min > LAMBDA_MIN) {
        return Err(Error::DegenerateMetric(min));
    }
    Ok((lambda.clone(), curvature_from_conformal(&lambda)))
}

pub fn curvature_from_conformal(lambda: &Grid2<f64>) -> Grid2<f64> {
    let lap = laplacian(&lambda.map(f64::ln));
    Grid2::from_fn(lambda.geom, |i, j| -lap.at(i, j) / (2.0 * lambda.at(i, j)))
}

/// `|U_u − V_v| + |U_v + V_u|` for `f = U + iV`.
pub fn cauchy_riemann_residual(f: &Grid2<Complex64>) -> Grid2<f64> {
    let (fu, fv) = (d_u(f), d_v(f));
    Grid2::from_fn(f.geom, |i, j| {
        let (a, b) = (fu.at(i, j), fv.at(i, j));
        (a.re - b.im).abs() + (b.re + a.im).abs()
    })
}

/// `Λ = g(Pφ_z, φ_z)` with `φ_z = ½(φ_u − iφ_v)`, `g` extended
/// complex-bilinearly.
pub fn lambda_at(pu: &TangentNK, pv: &TangentNK) -> Complex64 {
    let (a, b) = (pu.scale(0.5), pv.scale(-0.5));
    let (pa, pb) = (a.p(), b.p());
    Complex64::new(
        g_unchecked(&pa, &a) - g_unchecked(&pb, &b),
        g_unchecked(&pa, &b) + g_unchecked(&pb, &a),
    )
}

/// `w = 2α·β + i(α·α − β·β)`.
pub fn w_of(alpha: ImQuat, beta: ImQuat) -> Complex64 {
    Complex64::new(2.0 * alpha.dot(beta), alpha.norm_sqr() - beta.norm_sqr())
}

/// The holomorphic differential and its companions on the grid.
#[derive(Clone, Debug)]
pub struct LambdaField {
    pub lambda: Grid2<Complex64>,
    pub w: Grid2<Complex64>,
    pub conformal: Grid2<f64>,
    pub cr_lambda: Grid2<f64>,
    pub cr_w: Grid2<f64>,
    /// Mean of `Λ/w` over nodes with `|w| > 1e-8`; `None` if there are none.
    pub ratio: Option<Complex64>,
    /// Largest deviation of nodewise `Λ/w` from `ratio`.
    pub ratio_spread: f64,
}

pub fn lambda_differential(s: &ParamSurface) -> Result<LambdaField> {
    let frames = frame_fields(s)?;
    let geom = *s.geom();
    let lambda = Grid2::from_fn(geom, |i, j| {
        let (_, pu, pv) = s.jet_at_node(i, j);
        lambda_at(&pu, &pv)
    });
    let w = Grid2::from_fn(geom, |i, j| w_of(frames.alpha.at(i, j), frames.beta.at(i, j)));
    let conformal = Grid2::from_fn(geom, |i, j| frames.alpha.at(i, j).norm_sqr() + frames.beta.at(i, j).norm_sqr());

    let quotients: Vec<Complex64> =
        lambda.data.iter().zip(&w.data).filter(|(_, w)| w.norm() > 1e-8).map(|(l, w)| l / w).collect();
    let (ratio, ratio_spread) = if quotients.is_empty() {
        (None, 0.0)
    } else {
        let re: Vec<f64> = quotients.iter().map(|c| c.re).collect();
        let im: Vec<f64> = quotients.iter().map(|c| c.im).collect();
        let n = quotients.len() as f64;
        let mean = Complex64::new(crate::grid::pairwise_sum(&re) / n, crate::grid::pairwise_sum(&im) / n);
        let spread = quotients.iter().map(|c| (c - mean).norm()).fold(0.0, f64::max);
        (Some(mean), spread)
    };

    Ok(LambdaField {
        cr_lambda: cauchy_riemann_residual(&lambda),
        cr_w: cauchy_riemann_residual(&w),
        lambda,
        w,
        conformal,
        ratio,
        ratio_spread,
    })
}

/// The three equivalent vanishing conditions for `Λ`, nodewise.
#[derive(Clone, Debug)]
pub struct TheoremLReport {
    /// `|Λ|`
    pub lambda_abs: Grid2<f64>,
    /// `|α·α − β·β| + |α·β|`
    pub frame_defect: Grid2<f64>,
    /// `|g(Pφ_u,φ_u)| + |g(Pφ_u,φ_v)| + |g(Pφ_v,φ_v)|`
    pub p_tangency: Grid2<f64>,
}

impl TheoremLReport {
    pub fn maxima(&self) -> [f64; 3] {
        [self.lambda_abs.max_all(), self.frame_defect.max_all(), self.p_tangency.max_all()]
    }

    pub fn minima(&self) -> [f64; 3] {
        [self.lambda_abs.min_all(), self.frame_defect.min_all(), self.p_tangency.min_all()]
    }

    /// Whether the three conditions agree at tolerance `tol`: either all
    /// maxima are below it or all minima are above it.
    pub fn consistent(&self, tol: f64) -> bool {
        let mx = self.maxima();
        let mn = self.minima();
        mx.iter().all(|&x| x <= tol) || mn.iter().all(|&x| x > tol)
    }
}

pub fn theorem_l_check(s: &ParamSurface) -> Result<TheoremLReport> {
    let frames = frame_fields(s)?;
    let geom = *s.geom();
    let jets = Grid2::from_fn(geom, |i, j| {
        let (_, pu, pv) = s.jet_at_node(i, j);
        (pu, pv)
    });
    let lambda_abs = Grid2::from_fn(geom, |i, j| {
        let (pu, pv) = jets.at(i, j);
        lambda_at(&pu, &pv).norm()
    });
    let frame_defect = Grid2::from_fn(geom, |i, j| {
        let (a, b) = (frames.alpha.at(i, j), frames.beta.at(i, j));
        (a.norm_sqr() - b.norm_sqr()).abs() + a.dot(b).abs()
    });
    let p_tangency = Grid2::from_fn(geom, |i, j| {
        let (pu, pv) = jets.at(i, j);
        let ppu = pu.p();
        g_unchecked(&ppu, &pu).abs() + g_unchecked(&ppu, &pv).abs() + g_unchecked(&pv.p(), &pv).abs()
    });
    Ok(TheoremLReport { lambda_abs, frame_defect, p_tangency })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nkspace::g;

    #[test]
    fn torus_metric_values() {
        let s = example1_torus().with_grid(8, 8).unwrap();
        for (i, j) in [(0, 0), (1, 5), (6, 3)] {
            let (_, ps, pt) = s.jet_at_node(i, j);
            assert!((g(&ps, &ps).unwrap() - 4.0 / 3.0).abs() < 1e-12);
            assert!((g(&pt, &pt).unwrap() - 4.0 / 3.0).abs() < 1e-12);
            assert!((g(&ps, &pt).unwrap() + 2.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn torus_st_is_not_adapted() {
        let r = almost_complex_residual(&example1_torus().with_grid(8, 8).unwrap());
        assert!(r.min_all() > 0.5, "{}", r.min_all());
        assert!(matches!(frame_fields(&example1_torus()), Err(Error::NotAlmostComplex { .. })));
    }

    #[test]
    fn torus_isothermal_frames() {
        let s = example1_torus_isothermal().with_grid(16, 9).unwrap();
        assert!(almost_complex_residual(&s).max_all() <= 1e-12);
        let f = frame_fields(&s).unwrap();
        for k in 0..f.alpha.data.len() {
            assert!(f.alpha.data[k].max_abs_diff(ImQuat::I) < 1e-12);
            assert!(f.beta.data[k].max_abs_diff(ImQuat::I.scale(-1.0 / SQRT3)) < 1e-12);
        }
        assert!(f.gd_residual() < 1e-12);
        let (lam, k) = induced_metric_and_k(&f).unwrap();
        assert!((lam.max_all() - 4.0 / 3.0).abs() < 1e-12 && (lam.min_all() - 4.0 / 3.0).abs() < 1e-12);
        assert!(k.max_abs_interior() < 1e-9);
        let (m, p) = integrability_residuals(&f);
        assert!(m.max_all() < 1e-9 && p.max_all() < 1e-9);
    }

    #[test]
    fn sphere_basics() {
        let s = example2_sphere().with_grid(17, 17).unwrap();
        assert!(almost_complex_residual(&s).max_all() <= 1e-12);
        let f = frame_fields(&s).unwrap();
        assert!(f.gd_residual() <= 1e-10);
        let (lam, _) = induced_metric_and_k(&f).unwrap();
        for i in 0..17 {
            for j in 0..17 {
                let (u, v) = (s.geom().u(i), s.geom().v(j));
                let expect = 1.5 * 4.0 / (1.0 + u * u + v * v).powi(2);
                assert!((lam.at(i, j) - expect).abs() <= 1e-12);
            }
        }
        let l = theorem_l_check(&s).unwrap();
        assert!(l.maxima().iter().all(|&x| x <= 1e-12), "{:?}", l.maxima());
    }

    #[test]
    fn exact_and_sampled_derivatives_agree() {
        let s = example2_sphere();
        let sampled = ParamSurface::sampled("sphere-fd", *s.geom(), |u, v| sphere_map(sphere_chart(u, v).0), 1e-5);
        let g = s.geom();
        for (i, j) in [(3, 7), (64, 64), (100, 20), (1, 127)] {
            let (_, a, b) = s.jet_at_node(i, j);
            let (_, c, d) = sampled.jet_at_node(i, j);
            assert!(a.max_abs_diff(&c) < 1e-6 && b.max_abs_diff(&d) < 1e-6, "{i} {j} {g:?}");
        }
    }

    #[test]
    fn constant_lambda_is_flat() {
        let geom = GridGeom::new(Domain::new(0.0, 1.0, 0.0, 1.0), 9, 9).unwrap();
        let k = curvature_from_conformal(&Grid2::from_fn(geom, |_, _| 2.5));
        assert!(k.max_all().abs() < 1e-12 && k.min_all().abs() < 1e-12);
    }

    #[test]
    fn torus_plane_is_j_invariant_in_any_coordinates() {
        let s = example1_torus().with_grid(16, 16).unwrap();
        assert!(j_invariance_residual(&s).max_all() < 1e-12);
        assert!(almost_complex_residual(&s).min_all() > 0.1);
    }

    #[test]
    fn holomorphic_reparametrization_scales_lambda_by_derivative_squared() {
        let base = example1_torus_isothermal();
        let geom = GridGeom::new(Domain::new(0.0, 1.0, 0.0, 1.0), 17, 17).unwrap();
        let s = base.reparametrized(geom, |z| ((z * 0.5).exp() * 2.0 - 2.0, (z * 0.5).exp())).unwrap();
        assert!(almost_complex_residual(&s).max_all() < 1e-12);
        let l0 = lambda_differential(&base.with_grid(8, 8).unwrap()).unwrap().lambda.at(0, 0);
        let l = lambda_differential(&s).unwrap();
        for i in 0..17 {
            for j in 0..17 {
                let dz = (Complex64::new(geom.u(i), geom.v(j)) * 0.5).exp();
                assert!((l.lambda.at(i, j) - l0 * dz * dz).norm() < 1e-12);
            }
        }
        assert!(example1_torus().with_grid(8, 8).unwrap().reparametrized(geom, |z| (z, Complex64::new(1.0, 0.0))).is_ok());
        let grid = ParamSurface::from_nodes("n", geom, vec![PointNK::IDENTITY; 17 * 17]).unwrap();
        assert!(grid.reparametrized(geom, |z| (z, Complex64::new(1.0, 0.0))).is_err());
    }

    #[test]
    fn opposite_orientation_is_rejected() {
        let s = example2_sphere().with_grid(9, 9).unwrap();
        let geom = *s.geom();
        let swapped = ParamSurface::analytic(
            "swapped",
            geom,
            |u, v| sphere_map(sphere_chart(v, u).0),
            |u, v| {
                let (x, xu, xv) = sphere_chart(v, u);
                let base = sphere_map(x);
                let k = SQRT3 / 2.0;
                let d = |t: ImQuat| TangentNK::new_unchecked(base, t.quat().scale(-k), t.quat().scale(k));
                (d(xv), d(xu))
            },
        );
        match frame_fields(&swapped) {
            Err(Error::NotAlmostComplex { opposite, .. }) => assert!(opposite),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_surface_node_lookup() {
        let s = example2_sphere().with_grid(9, 9).unwrap();
        let nodes = s.nodes().data;
        let gs = ParamSurface::from_nodes("g", *s.geom(), nodes).unwrap();
        let x = gs.eval(0.25, -0.5).unwrap();
        assert!(x.distance_inf(&s.eval(0.25, -0.5).unwrap()) < 1e-15);
        assert!(matches!(gs.eval(0.3, 0.0), Err(Error::OffGrid { .. })));
    }
}

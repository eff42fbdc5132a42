//! The correspondence between almost complex surfaces and solutions of the
//! H-surface equation `ε_uu + ε_vv = −(4/√3) ε_u×ε_v` in ℝ³.
//!
//! Forward: rotating the frame pair `(α, β)` through `2π/3` gives a closed
//! one-form `(α̃, β̃)`; integrating it yields `ε` with `ε_u = α̃`, `ε_v = β̃`.
//! Backward: differencing a sampled `ε`, undoing the rotation and
//! integrating `p_u = pα`, `q_u = qγ` (and the `v` counterparts) recovers
//! the surface in S³×S³ up to a nearly Kähler isometry.
//!
//! Imaginary quaternions double as vectors of ℝ³ throughout.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{d_u4, d_uu, d_v4, d_vv, Domain, Grid2, GridGeom};
use crate::nkspace::{PointNK, UNIT_TOL};
use crate::quat::{exp_im, ImQuat, Quaternion};
use crate::surface::{delta_of, gamma_of, sphere_chart, FrameFields, ParamSurface, DEFAULT_GRID};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// The constant mean curvature of every `ε` produced by the correspondence.
pub const H_EXPECTED: f64 = -2.0 / SQRT3;

/// Coefficient of `ε_u×ε_v` in the H-surface equation, `2H`.
pub const TWO_H: f64 = -4.0 / SQRT3;

/// Relative tolerance of the isothermality check.
pub const ISOTHERMAL_TOL: f64 = 1e-6;

/// Smallest admissible `|ε_u×ε_v|`.
pub const RANK_TOL: f64 = 1e-10;

/// Default gate on the H-surface residual of a lift input.
pub const LIFT_GATE_TOL: f64 = 1e-3;

/// Default bound on the disagreement of the two integration paths of a lift.
pub const LIFT_CONSISTENCY_TOL: f64 = 1e-3;

/// Radius of the cylinder solving the H-surface equation.
pub const CYLINDER_RADIUS: f64 = SQRT3 / 4.0;

/// `(α, β) ↦ (α̃, β̃)`, rotation of the tangent plane through `2π/3`.
pub fn rotate_frame(alpha: ImQuat, beta: ImQuat) -> (ImQuat, ImQuat) {
    let (c, s) = (-0.5, SQRT3 / 2.0);
    (c * alpha + s * beta, -s * alpha + c * beta)
}

/// Inverse of [`rotate_frame`].
pub fn unrotate_frame(at: ImQuat, bt: ImQuat) -> (ImQuat, ImQuat) {
    let (c, s) = (-0.5, SQRT3 / 2.0);
    (c * at - s * bt, s * at + c * bt)
}

/// A sampled map `ε` from the parameter grid into ℝ³.
#[derive(Clone, Debug)]
pub struct EpsilonGrid {
    pub points: Grid2<ImQuat>,
    /// `(ε_u, ε_v)` when known exactly (from frames); differenced otherwise.
    pub tangents: Option<(Grid2<ImQuat>, Grid2<ImQuat>)>,
    /// Increment of `ε` across one period of each periodic axis (row/column 0).
    pub holonomy: [Option<ImQuat>; 2],
    /// Largest nodewise disagreement between the column-first and row-first
    /// integration paths.
    pub path_residual: f64,
}

impl EpsilonGrid {
    /// Wraps sampled points; periodic axes are taken to close up.
    pub fn from_points(points: Grid2<ImQuat>) -> Self {
        let holonomy = points.geom.domain.periodic.map(|p| p.then_some(ImQuat::ZERO));
        Self { points, tangents: None, holonomy, path_residual: 0.0 }
    }

    pub fn geom(&self) -> &GridGeom {
        &self.points.geom
    }

    /// `(ε_u, ε_v)`: stored values, or fourth-order differences of the points.
    pub fn tangents(&self) -> (Grid2<ImQuat>, Grid2<ImQuat>) {
        match &self.tangents {
            Some((a, b)) => (a.clone(), b.clone()),
            None => (d_u4(&self.points), d_v4(&self.points)),
        }
    }

    /// `ε_uu + ε_vv`, with wrap-around corrected by the holonomy.
    pub fn laplacian(&self) -> Grid2<ImQuat> {
        let g = *self.geom();
        let (uu, vv) = (d_uu(&self.points), d_vv(&self.points));
        let (hu, hv) = (g.du(), g.dv());
        let hol = self.holonomy.map(|h| h.unwrap_or(ImQuat::ZERO));
        Grid2::from_fn(g, |i, j| {
            let mut x = uu.at(i, j) + vv.at(i, j);
            if g.domain.periodic[0] {
                if i == 0 {
                    x = x - (1.0 / (hu * hu)) * hol[0];
                }
                if i + 1 == g.nu {
                    x = x + (1.0 / (hu * hu)) * hol[0];
                }
            }
            if g.domain.periodic[1] {
                if j == 0 {
                    x = x - (1.0 / (hv * hv)) * hol[1];
                }
                if j + 1 == g.nv {
                    x = x + (1.0 / (hv * hv)) * hol[1];
                }
            }
            x
        })
    }

    /// Nodewise `‖∂_v ε_u − ∂_u ε_v‖` of the tangent fields.
    pub fn closedness_residual(&self) -> Grid2<f64> {
        let (a, b) = self.tangents();
        let (av, bu) = (crate::grid::d_v(&a), crate::grid::d_u(&b));
        Grid2::from_fn(*self.geom(), |i, j| (av.at(i, j) - bu.at(i, j)).norm())
    }

    /// Smallest `|ε_u×ε_v|` over interior nodes.
    pub fn min_area_element(&self) -> f64 {
        let (a, b) = self.tangents();
        Grid2::from_fn(*self.geom(), |i, j| a.at(i, j).cross(b.at(i, j)).norm()).min_interior()
    }

    /// `λ_ε = ε_u·ε_u` at each node.
    pub fn conformal_factor(&self) -> Grid2<f64> {
        self.tangents().0.map(|a| a.dot(a))
    }

    pub fn point_list(&self) -> &[ImQuat] {
        &self.points.data
    }
}

/// Integrates `dε = α̃ du + β̃ dv` with `ε(u₀, v₀) = 0`.
///
/// Composite trapezoid steps run up the first column and then along each
/// row. A periodic axis is only accepted with `allow_periodic`, in which case
/// the rectangle is treated as a fundamental domain of the universal cover and
/// the period of `ε` is reported as holonomy.
pub fn integrate_epsilon(f: &FrameFields, allow_periodic: bool) -> Result<EpsilonGrid> {
    let geom = *f.geom();
    if !allow_periodic {
        if geom.domain.periodic[0] {
            return Err(Error::PeriodicWithoutFlag("u"));
        }
        if geom.domain.periodic[1] {
            return Err(Error::PeriodicWithoutFlag("v"));
        }
    }
    let rotated = Grid2::from_fn(geom, |i, j| rotate_frame(f.alpha.at(i, j), f.beta.at(i, j)));
    let at = rotated.map(|x| x.0);
    let bt = rotated.map(|x| x.1);

    let column_first = integrate_path(&at, &bt, true);
    let row_first = integrate_path(&at, &bt, false);
    let path_residual = column_first
        .iter()
        .zip(&row_first)
        .map(|(a, b)| (*a - *b).norm())
        .fold(0.0, f64::max);

    let (hu, hv) = (geom.du(), geom.dv());
    let hol_u = geom.domain.periodic[0].then(|| {
        (0..geom.nu).fold(ImQuat::ZERO, |s, i| s + (0.5 * hu) * (at.at(i, 0) + at.at((i + 1) % geom.nu, 0)))
    });
    let hol_v = geom.domain.periodic[1].then(|| {
        (0..geom.nv).fold(ImQuat::ZERO, |s, j| s + (0.5 * hv) * (bt.at(0, j) + bt.at(0, (j + 1) % geom.nv)))
    });

    Ok(EpsilonGrid {
        points: Grid2 { geom, data: column_first },
        tangents: Some((at, bt)),
        holonomy: [hol_u, hol_v],
        path_residual,
    })
}

/// Generic two-leg path integration on the grid.
///
/// `column_first` walks `v` along `i = 0` and then `u` along every row;
/// otherwise `u` along `j = 0` and then `v` along every column. A step from
/// node `a` to its neighbour `b` is `step(x, along_u, a, b)`. The independent
/// legs run in parallel; the result does not depend on scheduling.
fn walk<T, F>(geom: GridGeom, x0: T, column_first: bool, step: F) -> Vec<T>
where
    T: Copy + Send + Sync,
    F: Fn(T, bool, (usize, usize), (usize, usize)) -> T + Sync,
{
    let (nu, nv) = (geom.nu, geom.nv);
    let mut data = vec![x0; geom.len()];
    if column_first {
        let mut first = vec![x0; nv];
        for j in 1..nv {
            first[j] = step(first[j - 1], false, (0, j - 1), (0, j));
        }
        let rows: Vec<Vec<T>> = (0..nv)
            .into_par_iter()
            .map(|j| {
                let mut row = vec![first[j]; nu];
                for i in 1..nu {
                    row[i] = step(row[i - 1], true, (i - 1, j), (i, j));
                }
                row
            })
            .collect();
        for (j, row) in rows.into_iter().enumerate() {
            for (i, x) in row.into_iter().enumerate() {
                data[geom.index(i, j)] = x;
            }
        }
    } else {
        let mut first = vec![x0; nu];
        for i in 1..nu {
            first[i] = step(first[i - 1], true, (i - 1, 0), (i, 0));
        }
        let cols: Vec<Vec<T>> = (0..nu)
            .into_par_iter()
            .map(|i| {
                let mut col = vec![first[i]; nv];
                for j in 1..nv {
                    col[j] = step(col[j - 1], false, (i, j - 1), (i, j));
                }
                col
            })
            .collect();
        for (i, col) in cols.into_iter().enumerate() {
            data[i * nv..(i + 1) * nv].copy_from_slice(&col);
        }
    }
    data
}

fn integrate_path(at: &Grid2<ImQuat>, bt: &Grid2<ImQuat>, column_first: bool) -> Vec<ImQuat> {
    let geom = at.geom;
    let (hu, hv) = (geom.du(), geom.dv());
    walk(geom, ImQuat::ZERO, column_first, |x, along_u, (i0, j0), (i1, j1)| {
        let (f, h) = if along_u { (at, hu) } else { (bt, hv) };
        x + (0.5 * h) * (f.at(i0, j0) + f.at(i1, j1))
    })
}

/// Largest isothermality defect relative to the largest `|ε_u|²`.
fn isothermal_defect(a: &Grid2<ImQuat>, b: &Grid2<ImQuat>) -> f64 {
    let g = a.geom;
    let defect = Grid2::from_fn(g, |i, j| {
        let (x, y) = (a.at(i, j), b.at(i, j));
        (x.dot(x) - y.dot(y)).abs().max(x.dot(y).abs())
    });
    let scale = Grid2::from_fn(g, |i, j| a.at(i, j).norm_sqr().max(b.at(i, j).norm_sqr())).max_interior();
    if scale > 0.0 {
        defect.max_interior() / scale
    } else {
        0.0
    }
}

/// Mean curvature `(ε_uu + ε_vv)·n / (2 ε_u·ε_u)` with `n` along `ε_u×ε_v`.
pub fn mean_curvature_r3(e: &EpsilonGrid) -> Result<Grid2<f64>> {
    let (a, b) = e.tangents();
    let area = e.min_area_element();
    if !(area >= RANK_TOL) {
        return Err(Error::DegenerateImmersion(area));
    }
    let defect = isothermal_defect(&a, &b);
    if defect > ISOTHERMAL_TOL {
        return Err(Error::NotIsothermal(defect));
    }
    let lap = e.laplacian();
    Ok(Grid2::from_fn(*e.geom(), |i, j| {
        let (x, y) = (a.at(i, j), b.at(i, j));
        let c = x.cross(y);
        lap.at(i, j).dot(c) / (c.norm() * 2.0 * x.dot(x))
    }))
}

/// Nodewise `‖ε_uu + ε_vv − 2H ε_u×ε_v‖` for a given `2H`.
pub fn h_surface_residual_with(e: &EpsilonGrid, two_h: f64) -> Grid2<f64> {
    let (a, b) = e.tangents();
    let lap = e.laplacian();
    Grid2::from_fn(*e.geom(), |i, j| (lap.at(i, j) - two_h * a.at(i, j).cross(b.at(i, j))).norm())
}

/// Nodewise residual of `ε_uu + ε_vv = −(4/√3) ε_u×ε_v`.
pub fn h_surface_residual(e: &EpsilonGrid) -> Grid2<f64> {
    h_surface_residual_with(e, TWO_H)
}

/// Nodewise `λ_ε / λ`, which is `½` whenever the holomorphic differential
/// vanishes.
pub fn metric_ratio(e: &EpsilonGrid, f: &FrameFields) -> Grid2<f64> {
    let le = e.conformal_factor();
    Grid2::from_fn(*e.geom(), |i, j| {
        let (a, b) = (f.alpha.at(i, j), f.beta.at(i, j));
        le.at(i, j) / (a.dot(a) + b.dot(b))
    })
}

/// A sampled candidate solution of the H-surface equation.
#[derive(Clone, Debug)]
pub struct CMCInput {
    pub points: Grid2<ImQuat>,
    /// Whether the parametrization is declared isothermal (and was checked).
    pub isothermal: bool,
}

impl CMCInput {
    pub fn new(geom: GridGeom, isothermal: bool, points: Vec<ImQuat>) -> Result<Self> {
        if points.len() != geom.len() {
            return Err(Error::BadInput(format!(
                "nodes: expected {} = {}x{} points, got {}",
                geom.len(),
                geom.nu,
                geom.nv,
                points.len()
            )));
        }
        if let Some(k) = points.iter().position(|x| !(x.x.is_finite() && x.y.is_finite() && x.z.is_finite())) {
            return Err(Error::BadInput(format!("nodes[{k}]: non-finite coordinate")));
        }
        let input = Self { points: Grid2 { geom, data: points }, isothermal };
        if isothermal {
            let e = input.epsilon();
            let (a, b) = e.tangents();
            let defect = isothermal_defect(&a, &b);
            if defect > ISOTHERMAL_TOL {
                return Err(Error::NotIsothermal(defect));
            }
        }
        Ok(input)
    }

    pub fn geom(&self) -> &GridGeom {
        &self.points.geom
    }

    pub fn epsilon(&self) -> EpsilonGrid {
        EpsilonGrid::from_points(self.points.clone())
    }
}

/// Tolerances of [`lift_from_cmc_with`].
#[derive(Clone, Copy, Debug)]
pub struct LiftTolerances {
    /// Bound on the largest interior H-surface residual of the input,
    /// relative to `max(1, max |ε_uu + ε_vv|)`.
    pub gate: f64,
    /// Bound on the disagreement of the two integration paths.
    pub consistency: f64,
}

impl Default for LiftTolerances {
    fn default() -> Self {
        Self { gate: LIFT_GATE_TOL, consistency: LIFT_CONSISTENCY_TOL }
    }
}

/// A lifted almost complex surface with its diagnostics.
#[derive(Clone, Debug)]
pub struct Lift {
    pub surface: ParamSurface,
    pub alpha: Grid2<ImQuat>,
    pub beta: Grid2<ImQuat>,
    /// Largest interior H-surface residual of the input, relative as in
    /// [`LiftTolerances::gate`].
    pub input_residual: f64,
    /// Largest difference between column-first and row-first integration.
    pub consistency: f64,
    /// Largest `||p| − 1|`, `||q| − 1|` over the lifted nodes.
    pub unit_error: f64,
}

pub fn lift_from_cmc(e: &CMCInput, p0: Quaternion, q0: Quaternion) -> Result<Lift> {
    lift_from_cmc_with(e, p0, q0, LiftTolerances::default())
}

/// Lifts a solution of the H-surface equation to an almost complex surface
/// through `(p0, q0)` at the first node.
///
/// `ε_u`, `ε_v` are fourth-order differences on the input grid. The frame
/// equations are integrated with exponential (Magnus) steps, renormalized to
/// unit length after each step.
pub fn lift_from_cmc_with(e: &CMCInput, p0: Quaternion, q0: Quaternion, tol: LiftTolerances) -> Result<Lift> {
    for x in [p0, q0] {
        if (x.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit(x.norm()));
        }
    }
    let eps = e.epsilon();
    let scale = eps.laplacian().map(|x| x.norm()).max_interior().max(1.0);
    let direct = h_surface_residual_with(&eps, TWO_H).max_interior() / scale;
    if !(direct <= tol.gate) {
        let flipped = h_surface_residual_with(&eps, -TWO_H).max_interior() / scale;
        if flipped <= tol.gate {
            return Err(Error::OrientationMismatch { direct, flipped });
        }
        return Err(Error::ResidualTooLarge { residual: direct, tolerance: tol.gate });
    }

    let geom = *e.geom();
    let (at, bt) = eps.tangents();
    let frames = Grid2::from_fn(geom, |i, j| {
        let (a, b) = unrotate_frame(at.at(i, j), bt.at(i, j));
        [a, b, gamma_of(a, b), delta_of(a, b)]
    });
    let component = |k: usize| frames.map(|f| f[k]);
    // derivative of each frame along the direction it is integrated in
    let slopes = {
        let (a, b, c, d) = (d_u4(&component(0)), d_v4(&component(1)), d_u4(&component(2)), d_v4(&component(3)));
        Grid2::from_fn(geom, |i, j| [a.at(i, j), b.at(i, j), c.at(i, j), d.at(i, j)])
    };
    let (hu, hv) = (geom.du(), geom.dv());
    let advance = |x: (Quaternion, Quaternion), along_u: bool, n0: (usize, usize), n1: (usize, usize)| {
        let (f0, f1) = (frames.at(n0.0, n0.1), frames.at(n1.0, n1.1));
        let (s0, s1) = (slopes.at(n0.0, n0.1), slopes.at(n1.0, n1.1));
        let (k, l, h) = if along_u { (0, 2, hu) } else { (1, 3, hv) };
        let p = x.0.mul(exp_im(magnus4(h, f0[k], f1[k], s0[k], s1[k])));
        let q = x.1.mul(exp_im(magnus4(h, f0[l], f1[l], s0[l], s1[l])));
        (renormalize(p), renormalize(q))
    };
    let column_first = walk(geom, (p0, q0), true, advance);
    let row_first = walk(geom, (p0, q0), false, advance);
    let consistency = column_first
        .iter()
        .zip(&row_first)
        .map(|(a, b)| a.0.max_abs_diff(b.0).max(a.1.max_abs_diff(b.1)))
        .fold(0.0, f64::max);
    if !(consistency <= tol.consistency) {
        return Err(Error::IntegrationDiverged { residual: consistency, tolerance: tol.consistency });
    }
    let unit_error =
        column_first.iter().map(|(p, q)| (p.norm() - 1.0).abs().max((q.norm() - 1.0).abs())).fold(0.0, f64::max);
    let nodes = column_first.into_iter().map(|(p, q)| PointNK::new_unchecked(p, q)).collect();
    Ok(Lift {
        surface: ParamSurface::from_nodes("lift", geom, nodes)?,
        alpha: frames.map(|f| f[0]),
        beta: frames.map(|f| f[1]),
        input_residual: direct,
        consistency,
        unit_error,
    })
}

/// Fourth-order Magnus exponent for `x' = x·A` over one step of length `h`,
/// from the end values `A₀`, `A₁` and their derivatives.
fn magnus4(h: f64, a0: ImQuat, a1: ImQuat, d0: ImQuat, d1: ImQuat) -> ImQuat {
    (0.5 * h) * (a0 + a1) + (h * h / 12.0) * (d0 - d1) - (h * h / 6.0) * a1.cross(a0)
}

fn renormalize(x: Quaternion) -> Quaternion {
    x.scale(1.0 / x.norm())
}

/// `ε = (√3/2)·x` for the stereographic unit sphere `x` on `[−1, 1]²`.
pub fn sphere_cmc(nu: usize, nv: usize) -> Result<CMCInput> {
    let geom = GridGeom::new(Domain::new(-1.0, 1.0, -1.0, 1.0), nu, nv)?;
    let points = Grid2::from_fn(geom, |i, j| (SQRT3 / 2.0) * sphere_chart(geom.u(i), geom.v(j)).0);
    CMCInput::new(geom, true, points.data)
}

/// `ε = (r cos(u/r), r sin(u/r), v)` with `r = √3/4` on `[0, 1]²`.
pub fn cylinder_cmc(nu: usize, nv: usize) -> Result<CMCInput> {
    let geom = GridGeom::new(Domain::new(0.0, 1.0, 0.0, 1.0), nu, nv)?;
    let r = CYLINDER_RADIUS;
    let points = Grid2::from_fn(geom, |i, j| {
        let (u, v) = (geom.u(i), geom.v(j));
        ImQuat::new(r * (u / r).cos(), r * (u / r).sin(), v)
    });
    CMCInput::new(geom, true, points.data)
}

/// Builtin lift input by name (`sphere-cmc` or `cylinder-cmc`) on a
/// `nu × nv` grid.
pub fn builtin_cmc_with_grid(name: &str, nu: usize, nv: usize) -> Option<Result<CMCInput>> {
    match name {
        "sphere-cmc" => Some(sphere_cmc(nu, nv)),
        "cylinder-cmc" => Some(cylinder_cmc(nu, nv)),
        _ => None,
    }
}

/// Builtin lift input on the default grid.
pub fn builtin_cmc(name: &str) -> Option<CMCInput> {
    builtin_cmc_with_grid(name, DEFAULT_GRID, DEFAULT_GRID)?.ok()
}

/// Least-squares sphere through a point cloud.
#[derive(Clone, Copy, Debug)]
pub struct SphereFit {
    pub center: ImQuat,
    pub radius: f64,
    /// Largest `||x − c| − r|`.
    pub max_residual: f64,
}

/// Fits `|x|² = 2c·x + k`, `r² = k + |c|²`, by least squares.
pub fn fit_sphere(points: &[ImQuat]) -> Result<SphereFit> {
    if points.len() < 4 {
        return Err(Error::BadInput(format!("sphere fit needs 4 points, got {}", points.len())));
    }
    let n = points.len();
    let a = DMatrix::from_fn(n, 4, |r, c| match c {
        0 => 2.0 * points[r].x,
        1 => 2.0 * points[r].y,
        2 => 2.0 * points[r].z,
        _ => 1.0,
    });
    let rhs = DVector::from_fn(n, |r, _| points[r].norm_sqr());
    let sol = a.svd(true, true).solve(&rhs, 1e-14).map_err(|e| Error::BadInput(e.to_string()))?;
    let center = ImQuat::new(sol[0], sol[1], sol[2]);
    let r2 = sol[3] + center.norm_sqr();
    if !(r2 > 0.0) {
        return Err(Error::BadInput("points do not lie near a sphere".into()));
    }
    let radius = r2.sqrt();
    let max_residual = points.iter().map(|x| ((*x - center).norm() - radius).abs()).fold(0.0, f64::max);
    Ok(SphereFit { center, radius, max_residual })
}

/// A rigid motion `x ↦ Rx + t` of ℝ³.
#[derive(Clone, Copy, Debug)]
pub struct RigidMotion {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    /// Largest `|R a_k + t − b_k|` after alignment.
    pub max_residual: f64,
}

fn vec3(x: ImQuat) -> Vector3<f64> {
    Vector3::new(x.x, x.y, x.z)
}

/// Proper rotation best mapping `a` onto `b` (Kabsch).
fn kabsch(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> Matrix3<f64> {
    let h = a.iter().zip(b).fold(Matrix3::zeros(), |m, (x, y)| m + x * y.transpose());
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let d = (vt.transpose() * u.transpose()).determinant().signum();
    vt.transpose() * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose()
}

/// Best rigid motion taking `a` onto `b` in the least-squares sense.
pub fn rigid_align(a: &[ImQuat], b: &[ImQuat]) -> Result<RigidMotion> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::BadInput(format!("cannot align {} points with {}", a.len(), b.len())));
    }
    let (a, b): (Vec<_>, Vec<_>) = (a.iter().map(|&x| vec3(x)).collect(), b.iter().map(|&x| vec3(x)).collect());
    let n = a.len() as f64;
    let ca = a.iter().sum::<Vector3<f64>>() / n;
    let cb = b.iter().sum::<Vector3<f64>>() / n;
    let a0: Vec<_> = a.iter().map(|x| x - ca).collect();
    let b0: Vec<_> = b.iter().map(|x| x - cb).collect();
    let rotation = kabsch(&a0, &b0);
    let translation = cb - rotation * ca;
    let max_residual = a.iter().zip(&b).map(|(x, y)| (rotation * x + translation - y).norm()).fold(0.0, f64::max);
    Ok(RigidMotion { rotation, translation, max_residual })
}

/// Best rotation (no translation) taking `a` onto `b`; the residual is the
/// largest `|R a_k − b_k|`.
pub fn rotation_align(a: &[ImQuat], b: &[ImQuat]) -> Result<RigidMotion> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::BadInput(format!("cannot align {} vectors with {}", a.len(), b.len())));
    }
    let (a, b): (Vec<_>, Vec<_>) = (a.iter().map(|&x| vec3(x)).collect(), b.iter().map(|&x| vec3(x)).collect());
    let rotation = kabsch(&a, &b);
    let max_residual = a.iter().zip(&b).map(|(x, y)| (rotation * x - y).norm()).fold(0.0, f64::max);
    Ok(RigidMotion { rotation, translation: Vector3::zeros(), max_residual })
}

/// Largest nodewise distance between the frame pairs of two surfaces after
/// the best common rotation `v ↦ cvc⁻¹`.
pub fn frame_conjugacy_residual(f: &FrameFields, alpha: &Grid2<ImQuat>, beta: &Grid2<ImQuat>) -> Result<f64> {
    let a: Vec<ImQuat> = alpha.data.iter().chain(&beta.data).copied().collect();
    let b: Vec<ImQuat> = f.alpha.data.iter().chain(&f.beta.data).copied().collect();
    Ok(rotation_align(&a, &b)?.max_residual)
}

/// Angle of the rotation `2π/3` used by the correspondence.
pub const ROTATION_ANGLE: f64 = 2.0 * PI / 3.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Sampler;
    use crate::surface::{example1_torus_isothermal, example2_sphere, frame_fields};

    #[test]
    fn rotation_examples() {
        let (a, b) = rotate_frame(ImQuat::I, (-1.0 / SQRT3) * ImQuat::I);
        assert!(a.max_abs_diff(-1.0 * ImQuat::I) < 1e-15);
        assert!(b.max_abs_diff((-1.0 / SQRT3) * ImQuat::I) < 1e-15);
        let mut s = Sampler::new(3);
        for _ in 0..100 {
            let (x, y) = (s.im_quat(), s.im_quat());
            let (a, b) = rotate_frame(x, y);
            let before = x.norm_sqr() + y.norm_sqr();
            assert!(((a.norm_sqr() + b.norm_sqr()) - before).abs() <= 1e-14 * before);
            let (a3, b3) = {
                let (a2, b2) = rotate_frame(a, b);
                rotate_frame(a2, b2)
            };
            assert!(a3.max_abs_diff(x).max(b3.max_abs_diff(y)) < 1e-14 * (1.0 + before.sqrt()));
            let (x2, y2) = unrotate_frame(a, b);
            assert!(x2.max_abs_diff(x).max(y2.max_abs_diff(y)) < 1e-14 * (1.0 + before.sqrt()));
        }
        let (c, s) = (ROTATION_ANGLE.cos(), ROTATION_ANGLE.sin());
        let (a, _) = rotate_frame(ImQuat::I, ImQuat::ZERO);
        assert!((a.x - c).abs() < 1e-15);
        let (_, b) = rotate_frame(ImQuat::I, ImQuat::ZERO);
        assert!((b.x + s).abs() < 1e-15);
    }

    #[test]
    fn periodic_needs_flag() {
        let f = frame_fields(&example1_torus_isothermal()).unwrap();
        assert!(matches!(integrate_epsilon(&f, false), Err(Error::PeriodicWithoutFlag("u"))));
        let e = integrate_epsilon(&f, true).unwrap();
        // constant rotated frame: a straight line with period 2π·(−i)
        let hol = e.holonomy[0].unwrap();
        assert!(hol.max_abs_diff((-2.0 * PI) * ImQuat::I) < 1e-10);
        assert!(h_surface_residual(&e).max_all() < 1e-9);
        assert!(matches!(mean_curvature_r3(&e), Err(Error::DegenerateImmersion(_))));
    }

    #[test]
    fn sphere_epsilon() {
        let s = example2_sphere().with_grid(65, 65).unwrap();
        let f = frame_fields(&s).unwrap();
        let e = integrate_epsilon(&f, false).unwrap();
        let fit = fit_sphere(e.point_list()).unwrap();
        assert!((fit.radius - SQRT3 / 2.0).abs() < 1e-3, "{fit:?}");
        let h = mean_curvature_r3(&e).unwrap();
        assert!((h.max_interior() - H_EXPECTED).abs() < 5e-3);
        assert!((h.min_interior() - H_EXPECTED).abs() < 5e-3);
        let r = metric_ratio(&e, &f);
        assert!((r.max_all() - 0.5).abs() < 1e-12 && (r.min_all() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn plane_and_round_sphere_curvature() {
        let geom = GridGeom::new(Domain::new(-1.0, 1.0, -1.0, 1.0), 33, 33).unwrap();
        let plane = Grid2::from_fn(geom, |i, j| ImQuat::new(geom.u(i), geom.v(j), 0.0));
        let h = mean_curvature_r3(&EpsilonGrid::from_points(plane)).unwrap();
        assert!(h.max_abs_interior() < 1e-12);

        let sphere = sphere_cmc(129, 129).unwrap().epsilon();
        let h = mean_curvature_r3(&sphere).unwrap();
        assert!((h.max_interior() - H_EXPECTED).abs() < 1e-3);
    }

    #[test]
    fn alignment_recovers_motion() {
        let mut s = Sampler::new(9);
        let c = s.unit_quat();
        let t = s.im_quat();
        let a: Vec<ImQuat> = (0..40).map(|_| s.im_quat()).collect();
        let b: Vec<ImQuat> = a.iter().map(|&x| c.rotate(x) + t).collect();
        let m = rigid_align(&a, &b).unwrap();
        assert!(m.max_residual < 1e-12);
        let sph: Vec<ImQuat> = a.iter().map(|x| t + (2.5 / x.norm()) * *x).collect();
        let fit = fit_sphere(&sph).unwrap();
        assert!((fit.radius - 2.5).abs() < 1e-10 && fit.center.max_abs_diff(t) < 1e-10);
    }

    #[test]
    fn sphere_lift_reproduces_example_nodes() {
        // same frames as the example, so the lift through its first node is the example itself
        let mut errs = Vec::new();
        for n in [129, 257] {
            let s = example2_sphere().with_grid(n, n).unwrap();
            let x0 = s.node(0, 0);
            let lift = lift_from_cmc(&sphere_cmc(n, n).unwrap(), x0.p, x0.q).unwrap();
            let err = (0..s.geom().len())
                .map(|k| {
                    let (i, j) = (k / n, k % n);
                    lift.surface.node(i, j).distance_inf(&s.node(i, j))
                })
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 3.5, "{errs:?}");
    }

    #[test]
    fn wrong_orientation_is_reported() {
        let good = cylinder_cmc(65, 65).unwrap();
        let g = *good.geom();
        let swapped = Grid2::from_fn(g, |i, j| {
            let x = good.points.at(i, j);
            ImQuat::new(x.x, -x.y, x.z)
        });
        let bad = CMCInput::new(g, true, swapped.data).unwrap();
        let err = lift_from_cmc(&bad, Quaternion::ONE, Quaternion::ONE).unwrap_err();
        assert!(matches!(err, Error::OrientationMismatch { .. }), "{err:?}");
    }
}

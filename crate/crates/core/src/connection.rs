//! Numerical Levi-Civita connection of the nearly Kähler metric.
//!
//! Everything here works in stereographic charts: each factor `p` is first
//! left-translated by the inverse of the chart center, `y = c⁻¹p`, and then
//! projected from `−1`, `ξ = Im(y) / (1 + Re(y))`. The metric components are
//! evaluated in closed form; their first and second derivatives are taken by
//! central differences, which gives Christoffel symbols and their first
//! derivatives (hence the Riemann tensor) at second order in the step.
//!
//! Vector fields are extended off a point by holding their chart components
//! constant.

use nalgebra::{Matrix2, SMatrix, SVector, Vector2};

use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::nkspace::{check_same_base, curvature_unchecked, g_unchecked, PointNK, TangentNK};
use crate::quat::Quaternion;
use crate::surface::ParamSurface;

pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Vec6 = SVector<f64, 6>;

pub const DEFAULT_STEP: f64 = 1e-4;
pub const MIN_STEP: f64 = 1e-6;
pub const MAX_STEP: f64 = 1e-2;

/// Default parameter step for differencing analytic surfaces.
pub const SFF_STEP: f64 = 1e-3;

/// Per-factor coordinate norm inside which charts are used.
pub const CHART_RADIUS: f64 = 2.0;

pub fn check_step(step: f64) -> Result<()> {
    if !(MIN_STEP..=MAX_STEP).contains(&step) {
        return Err(Error::StepOutOfRange(step));
    }
    Ok(())
}

/// Stereographic image of a unit quaternion near 1.
fn stereo(y: Quaternion) -> Result<[f64; 3]> {
    let d = 1.0 + y.w;
    if d < 1e-12 {
        return Err(Error::OutsideChart(f64::INFINITY));
    }
    Ok([y.x / d, y.y / d, y.z / d])
}

fn stereo_inv(xi: &[f64]) -> Quaternion {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let d = 1.0 / (1.0 + r2);
    Quaternion::new((1.0 - r2) * d, 2.0 * xi[0] * d, 2.0 * xi[1] * d, 2.0 * xi[2] * d)
}

/// `∂y/∂ξ_k` for the inverse stereographic map.
fn stereo_inv_jacobian(xi: &[f64]) -> [Quaternion; 3] {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    let d = 1.0 + r2;
    let d2 = d * d;
    std::array::from_fn(|k| {
        let mut im = [-4.0 * xi[0] * xi[k] / d2, -4.0 * xi[1] * xi[k] / d2, -4.0 * xi[2] * xi[k] / d2];
        im[k] += 2.0 / d;
        Quaternion::new(-4.0 * xi[k] / d2, im[0], im[1], im[2])
    })
}

/// Differential of the stereographic map at `y` applied to `ẏ`.
fn stereo_differential(y: Quaternion, ydot: Quaternion) -> [f64; 3] {
    let d = 1.0 + y.w;
    let c = ydot.w / (d * d);
    [ydot.x / d - y.x * c, ydot.y / d - y.y * c, ydot.z / d - y.z * c]
}

/// A product stereographic chart centered at a point of S³×S³.
#[derive(Clone, Copy, Debug)]
pub struct Chart {
    pub center: PointNK,
    cp_inv: Quaternion,
    cq_inv: Quaternion,
}

impl Chart {
    pub fn new(center: PointNK) -> Self {
        Self { center, cp_inv: center.p.conj(), cq_inv: center.q.conj() }
    }

    pub fn to_coords(&self, x: &PointNK) -> Result<[f64; 6]> {
        let a = stereo(self.cp_inv * x.p)?;
        let b = stereo(self.cq_inv * x.q)?;
        Ok([a[0], a[1], a[2], b[0], b[1], b[2]])
    }

    pub fn from_coords(&self, xi: &[f64; 6]) -> PointNK {
        PointNK::new_unchecked(self.center.p * stereo_inv(&xi[..3]), self.center.q * stereo_inv(&xi[3..]))
    }

    /// Largest per-factor coordinate norm of `xi`.
    pub fn coord_radius(xi: &[f64; 6]) -> f64 {
        let a = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
        let b = (xi[3] * xi[3] + xi[4] * xi[4] + xi[5] * xi[5]).sqrt();
        a.max(b)
    }

    /// Coordinate vector fields `∂/∂ξ_k` at `xi`.
    pub fn coord_basis(&self, xi: &[f64; 6]) -> [TangentNK; 6] {
        let base = self.from_coords(xi);
        let jp = stereo_inv_jacobian(&xi[..3]);
        let jq = stereo_inv_jacobian(&xi[3..]);
        std::array::from_fn(|k| {
            if k < 3 {
                TangentNK::new_unchecked(base, self.center.p * jp[k], Quaternion::ZERO)
            } else {
                TangentNK::new_unchecked(base, Quaternion::ZERO, self.center.q * jq[k - 3])
            }
        })
    }

    /// Chart components of a tangent vector at its own base point.
    pub fn tangent_to_coords(&self, t: &TangentNK) -> [f64; 6] {
        let a = stereo_differential(self.cp_inv * t.base.p, self.cp_inv * t.u);
        let b = stereo_differential(self.cq_inv * t.base.q, self.cq_inv * t.v);
        [a[0], a[1], a[2], b[0], b[1], b[2]]
    }

    pub fn coords_to_tangent(&self, xi: &[f64; 6], c: &Vec6) -> TangentNK {
        let basis = self.coord_basis(xi);
        let mut t = TangentNK::zero(basis[0].base);
        for (k, e) in basis.iter().enumerate() {
            t = t + e.scale(c[k]);
        }
        t
    }

    /// Metric components `g_ij = g(∂_i, ∂_j)` at `xi`.
    pub fn metric(&self, xi: &[f64; 6]) -> Mat6 {
        let basis = self.coord_basis(xi);
        let mut m = Mat6::zeros();
        for i in 0..6 {
            for j in i..6 {
                let v = g_unchecked(&basis[i], &basis[j]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Components of `J` in the coordinate basis: column `j` holds `J∂_j`.
    pub fn complex_structure(&self, xi: &[f64; 6]) -> Mat6 {
        let basis = self.coord_basis(xi);
        let mut m = Mat6::zeros();
        for (j, e) in basis.iter().enumerate() {
            let c = self.tangent_to_coords(&e.j());
            for k in 0..6 {
                m[(k, j)] = c[k];
            }
        }
        m
    }

    /// Metric, Christoffel symbols and their first derivatives at `xi`.
    pub fn jet(&self, xi: &[f64; 6], step: f64) -> Result<ConnectionJet> {
        check_step(step)?;
        let h = step;
        let shifted = |offsets: &[(usize, f64)]| {
            let mut x = *xi;
            for &(k, d) in offsets {
                x[k] += d;
            }
            self.metric(&x)
        };

        let g0 = self.metric(xi);
        let plus: Vec<Mat6> = (0..6).map(|m| shifted(&[(m, h)])).collect();
        let minus: Vec<Mat6> = (0..6).map(|m| shifted(&[(m, -h)])).collect();
        let dg: [Mat6; 6] = std::array::from_fn(|m| (plus[m] - minus[m]) / (2.0 * h));

        let mut ddg = [[Mat6::zeros(); 6]; 6];
        for m in 0..6 {
            ddg[m][m] = (plus[m] - g0 * 2.0 + minus[m]) / (h * h);
            for n in (m + 1)..6 {
                let v = (shifted(&[(m, h), (n, h)]) - shifted(&[(m, h), (n, -h)]) - shifted(&[(m, -h), (n, h)])
                    + shifted(&[(m, -h), (n, -h)]))
                    / (4.0 * h * h);
                ddg[m][n] = v;
                ddg[n][m] = v;
            }
        }

        let ginv = g0.try_inverse().ok_or(Error::DegenerateMetric(g0.determinant()))?;

        // first-kind symbols Γ_lij and their derivatives
        let mut first = [[[0.0; 6]; 6]; 6];
        let mut dfirst = [[[[0.0; 6]; 6]; 6]; 6];
        for l in 0..6 {
            for i in 0..6 {
                for j in 0..6 {
                    first[l][i][j] = 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    for m in 0..6 {
                        dfirst[m][l][i][j] =
                            0.5 * (ddg[m][i][(j, l)] + ddg[m][j][(i, l)] - ddg[m][l][(i, j)]);
                    }
                }
            }
        }
        let dginv: [Mat6; 6] = std::array::from_fn(|m| -(ginv * dg[m] * ginv));

        let mut christoffel = [[[0.0; 6]; 6]; 6];
        let mut dchristoffel = [[[[0.0; 6]; 6]; 6]; 6];
        for k in 0..6 {
            for i in 0..6 {
                for j in 0..6 {
                    christoffel[k][i][j] = (0..6).map(|l| ginv[(k, l)] * first[l][i][j]).sum();
                    for m in 0..6 {
                        dchristoffel[m][k][i][j] = (0..6)
                            .map(|l| dginv[m][(k, l)] * first[l][i][j] + ginv[(k, l)] * dfirst[m][l][i][j])
                            .sum();
                    }
                }
            }
        }

        Ok(ConnectionJet { coords: *xi, step, metric: g0, christoffel, dchristoffel })
    }
}

/// Metric and connection data at one chart point.
#[derive(Clone, Debug)]
pub struct ConnectionJet {
    pub coords: [f64; 6],
    pub step: f64,
    /// `g_ij`
    pub metric: Mat6,
    /// `Γ^k_ij` indexed `[k][i][j]`
    pub christoffel: [[[f64; 6]; 6]; 6],
    /// `∂_m Γ^k_ij` indexed `[m][k][i][j]`
    pub dchristoffel: [[[[f64; 6]; 6]; 6]; 6],
}

impl ConnectionJet {
    pub fn inner(&self, a: &Vec6, b: &Vec6) -> f64 {
        a.dot(&(self.metric * b))
    }

    /// `Γ(a, b)^k = Γ^k_ij a^i b^j`, the covariant derivative of the
    /// coordinate-constant extension of `b` along `a`.
    pub fn gamma(&self, a: &Vec6, b: &Vec6) -> Vec6 {
        Vec6::from_fn(|k, _| {
            let mut s = 0.0;
            for i in 0..6 {
                for j in 0..6 {
                    s += self.christoffel[k][i][j] * a[i] * b[j];
                }
            }
            s
        })
    }

    /// Largest `|Γ^k_ij − Γ^k_ji|`.
    pub fn torsion(&self) -> f64 {
        let mut m = 0.0f64;
        for k in 0..6 {
            for i in 0..6 {
                for j in 0..6 {
                    m = m.max((self.christoffel[k][i][j] - self.christoffel[k][j][i]).abs());
                }
            }
        }
        m
    }

    /// `R(U,V)W = ∇_U∇_V W − ∇_V∇_U W − ∇_[U,V] W` in coordinates.
    pub fn riemann(&self, u: &Vec6, v: &Vec6, w: &Vec6) -> Vec6 {
        let gm = &self.christoffel;
        let dg = &self.dchristoffel;
        Vec6::from_fn(|l, _| {
            let mut s = 0.0;
            for i in 0..6 {
                for j in 0..6 {
                    let uv = u[i] * v[j];
                    if uv == 0.0 {
                        continue;
                    }
                    for k in 0..6 {
                        let mut r = dg[i][l][j][k] - dg[j][l][i][k];
                        for m in 0..6 {
                            r += gm[l][i][m] * gm[m][j][k] - gm[l][j][m] * gm[m][i][k];
                        }
                        s += uv * w[k] * r;
                    }
                }
            }
            s
        })
    }

    pub fn sectional_curvature(&self, x: &Vec6, y: &Vec6) -> Result<f64> {
        let (xx, yy, xy) = (self.inner(x, x), self.inner(y, y), self.inner(x, y));
        let det = xx * yy - xy * xy;
        if !(det > crate::nkspace::GRAM_TOL) {
            return Err(Error::DegeneratePlane(det));
        }
        Ok(self.inner(&self.riemann(x, y, y), x) / det)
    }
}

/// Connection jet at `x` in the chart centered at `x`.
pub fn christoffels(x: &PointNK, step: f64) -> Result<ConnectionJet> {
    Chart::new(*x).jet(&[0.0; 6], step)
}

/// Max deviation between `∂_k g_ij` (fourth-order stencil) and
/// `g_lj Γ^l_ki + g_il Γ^l_kj`, relative to the largest metric derivative.
pub fn metric_compatibility_residual(x: &PointNK, step: f64) -> Result<f64> {
    let chart = Chart::new(*x);
    let jet = chart.jet(&[0.0; 6], step)?;
    let h = step;
    let at = |k: usize, d: f64| {
        let mut xi = [0.0; 6];
        xi[k] = d;
        chart.metric(&xi)
    };
    let mut resid = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..6 {
        let dg = (at(k, -2.0 * h) - at(k, -h) * 8.0 + at(k, h) * 8.0 - at(k, 2.0 * h)) / (12.0 * h);
        for i in 0..6 {
            for j in 0..6 {
                let mut rhs = 0.0;
                for l in 0..6 {
                    rhs += jet.metric[(l, j)] * jet.christoffel[l][k][i] + jet.metric[(i, l)] * jet.christoffel[l][k][j];
                }
                resid = resid.max((dg[(i, j)] - rhs).abs());
                scale = scale.max(dg[(i, j)].abs());
            }
        }
    }
    Ok(resid / scale.max(1.0))
}

fn to_vec6(a: [f64; 6]) -> Vec6 {
    Vec6::from_column_slice(&a)
}

/// `(∇̃_X J)Y = ∇̃_X(JY) − J(∇̃_X Y)`.
pub fn nabla_j(x: &TangentNK, y: &TangentNK, step: f64) -> Result<TangentNK> {
    check_same_base(x, y)?;
    check_step(step)?;
    let chart = Chart::new(x.base);
    let origin = [0.0; 6];
    let jet = chart.jet(&origin, step)?;
    let xc = to_vec6(chart.tangent_to_coords(x));
    let yc = to_vec6(chart.tangent_to_coords(y));

    let j0 = chart.complex_structure(&origin);
    // X^m ∂_m J by central differences along X
    let mut dj = Mat6::zeros();
    for m in 0..6 {
        if xc[m] == 0.0 {
            continue;
        }
        let mut plus = origin;
        let mut minus = origin;
        plus[m] = step;
        minus[m] = -step;
        dj += (chart.complex_structure(&plus) - chart.complex_structure(&minus)) * (xc[m] / (2.0 * step));
    }

    let jy = j0 * yc;
    let out = dj * yc + jet.gamma(&xc, &jy) - j0 * jet.gamma(&xc, &yc);
    Ok(chart.coords_to_tangent(&origin, &out))
}

/// g-norm of the difference between the chart curvature and the closed-form
/// curvature tensor at `x`, divided by `|U|·|V|·|W|`.
pub fn curvature_crosscheck(x: &PointNK, u: &TangentNK, v: &TangentNK, w: &TangentNK, step: f64) -> Result<f64> {
    for t in [u, v, w] {
        let d = x.distance_inf(&t.base);
        if d > crate::nkspace::BASE_TOL {
            return Err(Error::BaseMismatch(d));
        }
    }
    let chart = Chart::new(*x);
    let origin = [0.0; 6];
    let jet = chart.jet(&origin, step)?;
    let (uc, vc, wc) = (
        to_vec6(chart.tangent_to_coords(u)),
        to_vec6(chart.tangent_to_coords(v)),
        to_vec6(chart.tangent_to_coords(w)),
    );
    let numeric = chart.coords_to_tangent(&origin, &jet.riemann(&uc, &vc, &wc));
    let exact = curvature_unchecked(u, v, w);
    let scale = u.g_norm() * v.g_norm() * w.g_norm();
    Ok((numeric - exact).g_norm() / scale.max(f64::MIN_POSITIVE))
}

/// Sectional curvature of the plane spanned by `x`, `y`, from the chart
/// curvature rather than the closed form.
pub fn numeric_sectional_curvature(x: &TangentNK, y: &TangentNK, step: f64) -> Result<f64> {
    check_same_base(x, y)?;
    let chart = Chart::new(x.base);
    let jet = chart.jet(&[0.0; 6], step)?;
    jet.sectional_curvature(&to_vec6(chart.tangent_to_coords(x)), &to_vec6(chart.tangent_to_coords(y)))
}

/// Second fundamental form of a parametrized surface at one parameter value.
#[derive(Clone, Copy, Debug)]
pub struct Bilinear2Normal {
    pub h_uu: TangentNK,
    pub h_uv: TangentNK,
    pub h_vv: TangentNK,
    pub phi_u: TangentNK,
    pub phi_v: TangentNK,
    /// Induced metric `(E, F, G)`.
    pub induced: [f64; 3],
    /// Largest `|g(h_ab, φ_c)|`.
    pub normality_residual: f64,
}

impl Bilinear2Normal {
    fn induced_inverse(&self) -> Matrix2<f64> {
        let [e, f, g] = self.induced;
        Matrix2::new(e, f, f, g).try_inverse().unwrap_or_else(|| Matrix2::from_element(f64::NAN))
    }

    /// `|h|` with respect to the induced metric.
    pub fn norm(&self) -> f64 {
        let gi = self.induced_inverse();
        let h = [[self.h_uu, self.h_uv], [self.h_uv, self.h_vv]];
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        s += gi[(a, c)] * gi[(b, d)] * g_unchecked(&h[a][b], &h[c][d]);
                    }
                }
            }
        }
        s.max(0.0).sqrt()
    }

    /// Mean curvature vector `½ g^{ab} h_ab`.
    pub fn mean_curvature(&self) -> TangentNK {
        let gi = self.induced_inverse();
        (self.h_uu.scale(gi[(0, 0)]) + self.h_uv.scale(2.0 * gi[(0, 1)]) + self.h_vv.scale(gi[(1, 1)])).scale(0.5)
    }
}

/// Metric step used for the connection when the surface step is `step`.
fn metric_step_for(step: f64) -> f64 {
    step.clamp(MIN_STEP, DEFAULT_STEP)
}

/// `h_ab`: the part of `∇̃_{φ_a} φ_b` g-orthogonal to the tangent plane.
///
/// Surface derivatives are fourth-order central differences on the points
/// `±step`, `±2·step`; the connection uses `min(step, 1e-4)`. For grid
/// surfaces `(u, v)` must be a node and `step` a multiple of the spacing.
pub fn second_fundamental_form(s: &ParamSurface, u: f64, v: f64, step: f64) -> Result<Bilinear2Normal> {
    let x = s.eval(u, v)?;
    second_fundamental_form_in_chart(s, u, v, step, &Chart::new(x))
}

pub fn second_fundamental_form_in_chart(
    s: &ParamSurface,
    u: f64,
    v: f64,
    step: f64,
    chart: &Chart,
) -> Result<Bilinear2Normal> {
    if !(step > 0.0) {
        return Err(Error::StepOutOfRange(step));
    }
    let d = s.domain();
    let margin = 2.0 * step * (1.0 - 1e-9);
    let too_close_u = !d.periodic[0] && (u - d.u0 < margin || d.u1 - u < margin);
    let too_close_v = !d.periodic[1] && (v - d.v0 < margin || d.v1 - v < margin);
    if too_close_u || too_close_v {
        return Err(Error::BoundaryTooClose { u, v });
    }
    sff_with_steps(s, u, v, [step, step], chart)
}

/// Second fundamental form at node `(i, j)`.
///
/// Grid surfaces are differenced with the grid spacings; analytic ones with
/// `step`. Nodes next to a closed edge give `BoundaryTooClose`.
pub fn second_fundamental_form_at_node(s: &ParamSurface, i: usize, j: usize, step: f64) -> Result<Bilinear2Normal> {
    let g = s.geom();
    let (u, v) = (g.u(i), g.v(j));
    if !s.is_grid() {
        return second_fundamental_form(s, u, v, step);
    }
    let inner = |k: usize, n: usize, periodic: bool| periodic || (k >= 2 && k + 2 < n);
    if !inner(i, g.nu, g.domain.periodic[0]) || !inner(j, g.nv, g.domain.periodic[1]) {
        return Err(Error::BoundaryTooClose { u, v });
    }
    let x = s.node(i, j);
    sff_with_steps(s, u, v, [g.du(), g.dv()], &Chart::new(x))
}

/// Nodewise `‖h‖` and `|tr_g h|` (NaN where undefined), with their maxima.
#[derive(Clone, Debug)]
pub struct SffField {
    pub norm: Grid2<f64>,
    pub trace: Grid2<f64>,
    pub max_norm: f64,
    pub min_norm: f64,
    pub max_trace: f64,
    pub max_normality: f64,
}

/// Evaluates the second fundamental form at every node where it is defined.
pub fn second_fundamental_field(s: &ParamSurface, step: f64) -> Result<SffField> {
    let geom = *s.geom();
    let vals = Grid2::try_from_fn(geom, |i, j| match second_fundamental_form_at_node(s, i, j, step) {
        Ok(b) => Ok([b.norm(), 2.0 * b.mean_curvature().g_norm(), b.normality_residual]),
        Err(Error::BoundaryTooClose { .. }) => Ok([f64::NAN; 3]),
        Err(e) => Err(e),
    })?;
    let norm = vals.map(|x| x[0]);
    let trace = vals.map(|x| x[1]);
    let defined: Vec<[f64; 3]> = vals.data.iter().copied().filter(|x| !x[0].is_nan()).collect();
    if defined.is_empty() {
        return Err(Error::BadInput("grid too small for the second fundamental form".into()));
    }
    let max = |k: usize| defined.iter().map(|x| x[k]).fold(f64::NEG_INFINITY, f64::max);
    let min_norm = defined.iter().map(|x| x[0]).fold(f64::INFINITY, f64::min);
    Ok(SffField { norm, trace, max_norm: max(0), min_norm, max_trace: max(1), max_normality: max(2) })
}

fn sff_with_steps(s: &ParamSurface, u: f64, v: f64, [hu, hv]: [f64; 2], chart: &Chart) -> Result<Bilinear2Normal> {
    let step = hu.min(hv);
    let c = |du: f64, dv: f64| -> Result<Vec6> {
        let x = s.eval(u + du * hu, v + dv * hv)?;
        Ok(to_vec6(chart.to_coords(&x)?))
    };
    let c0 = c(0.0, 0.0)?;
    let axis = |du: f64, dv: f64| -> Result<[Vec6; 4]> {
        Ok([c(du, dv)?, c(-du, -dv)?, c(2.0 * du, 2.0 * dv)?, c(-2.0 * du, -2.0 * dv)?])
    };
    // fourth-order central stencils on the ±1, ±2 nodes
    let first = |[p1, m1, p2, m2]: &[Vec6; 4], h: f64| (p1 * 8.0 - m1 * 8.0 - p2 + m2) / (12.0 * h);
    let second = |[p1, m1, p2, m2]: &[Vec6; 4], h: f64| (p1 * 16.0 + m1 * 16.0 - p2 - m2 - c0 * 30.0) / (12.0 * h * h);
    let (au, av) = (axis(1.0, 0.0)?, axis(0.0, 1.0)?);
    let cross = |k: f64| -> Result<Vec6> { Ok(c(k, k)? - c(k, -k)? - c(-k, k)? + c(-k, -k)?) };
    let xu = first(&au, hu);
    let xv = first(&av, hv);
    let xuu = second(&au, hu);
    let xvv = second(&av, hv);
    let xuv = (cross(1.0)? * 16.0 - cross(2.0)?) / (48.0 * hu * hv);

    let xi0: [f64; 6] = c0.into();
    let jet = chart.jet(&xi0, metric_step_for(step))?;
    let accel = |a: &Vec6, b: &Vec6, ab: &Vec6| ab + jet.gamma(a, b);
    let a_uu = accel(&xu, &xu, &xuu);
    let a_uv = accel(&xu, &xv, &xuv);
    let a_vv = accel(&xv, &xv, &xvv);

    let e = jet.inner(&xu, &xu);
    let f = jet.inner(&xu, &xv);
    let gg = jet.inner(&xv, &xv);
    let gram = Matrix2::new(e, f, f, gg);
    let gram_inv = gram.try_inverse().ok_or(Error::DegenerateMetric(e * gg - f * f))?;
    let normal_part = |a: Vec6| {
        let coef = gram_inv * Vector2::new(jet.inner(&a, &xu), jet.inner(&a, &xv));
        a - xu * coef[0] - xv * coef[1]
    };
    let (n_uu, n_uv, n_vv) = (normal_part(a_uu), normal_part(a_uv), normal_part(a_vv));

    let mut normality = 0.0f64;
    for n in [&n_uu, &n_uv, &n_vv] {
        for t in [&xu, &xv] {
            let scale = (jet.inner(n, n) * jet.inner(t, t)).sqrt().max(1.0);
            normality = normality.max(jet.inner(n, t).abs() / scale);
        }
    }

    let amb = |w: &Vec6| chart.coords_to_tangent(&xi0, w);
    Ok(Bilinear2Normal {
        h_uu: amb(&n_uu),
        h_uv: amb(&n_uv),
        h_vv: amb(&n_vv),
        phi_u: amb(&xu),
        phi_v: amb(&xv),
        induced: [e, f, gg],
        normality_residual: normality,
    })
}

/// Mean curvature vector `½ tr_g h` at `(u, v)`.
pub fn mean_curvature_vector(s: &ParamSurface, u: f64, v: f64, step: f64) -> Result<TangentNK> {
    Ok(second_fundamental_form(s, u, v, step)?.mean_curvature())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nkspace::{p_invariant_complex_plane, p_orthogonal_complex_plane};
    use crate::rng::Sampler;

    #[test]
    fn chart_center_and_roundtrip() {
        let mut s = Sampler::new(21);
        for _ in 0..50 {
            let c = s.point();
            let chart = Chart::new(c);
            let z = chart.to_coords(&c).unwrap();
            assert!(z.iter().all(|v| v.abs() <= 1e-12));
            let mut xi = [0.0; 6];
            for v in xi.iter_mut() {
                *v = s.uniform(-1.1, 1.1);
            }
            let x = chart.from_coords(&xi);
            let back = chart.to_coords(&x).unwrap();
            let err = xi.iter().zip(back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err <= 1e-10, "{err}");
        }
    }

    #[test]
    fn coordinate_differential_inverts_basis() {
        let mut s = Sampler::new(22);
        let chart = Chart::new(s.point());
        let xi = [0.3, -0.2, 0.5, 0.1, 0.7, -0.4];
        let basis = chart.coord_basis(&xi);
        for (k, e) in basis.iter().enumerate() {
            assert!(e.tangency_error() < 1e-14);
            let c = chart.tangent_to_coords(e);
            for (m, v) in c.iter().enumerate() {
                let expect = if m == k { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn step_range() {
        let x = PointNK::IDENTITY;
        assert!(matches!(christoffels(&x, 1e-7), Err(Error::StepOutOfRange(_))));
        assert!(matches!(christoffels(&x, 0.1), Err(Error::StepOutOfRange(_))));
        assert!(christoffels(&x, 1e-4).is_ok());
    }

    #[test]
    fn christoffels_are_symmetric() {
        let mut s = Sampler::new(23);
        let jet = christoffels(&s.point(), 1e-4).unwrap();
        assert!(jet.torsion() <= 1e-8);
        let m = jet.metric;
        assert!((m - m.transpose()).abs().max() == 0.0);
        assert!(m.cholesky().is_some());
    }

    #[test]
    fn metric_compatibility_is_second_order() {
        let x = Sampler::new(24).point();
        let r1 = metric_compatibility_residual(&x, 2e-3).unwrap();
        let r2 = metric_compatibility_residual(&x, 1e-3).unwrap();
        let ratio = r1 / r2;
        assert!((3.0..5.0).contains(&ratio), "r1={r1:e} r2={r2:e}");
        assert!(metric_compatibility_residual(&x, 1e-4).unwrap() <= 10.0 * 1e-8);
    }

    #[test]
    fn special_planes_from_numeric_curvature() {
        let mut s = Sampler::new(25);
        let base = s.point();
        let x = s.unit_im_quat();
        let xdot = x.cross(s.im_quat());
        let orth = p_orthogonal_complex_plane(base, x, xdot).unwrap();
        let k = numeric_sectional_curvature(&orth.x, &orth.y, 1e-4).unwrap();
        assert!((k - 2.0 / 3.0).abs() <= 1e-3, "{k}");
        let inv = p_invariant_complex_plane(s.tangent(base)).unwrap();
        let k = numeric_sectional_curvature(&inv.x, &inv.y, 1e-4).unwrap();
        assert!(k.abs() <= 1e-3, "{k}");
    }

    #[test]
    fn curvature_with_repeated_slot_vanishes() {
        let mut s = Sampler::new(26);
        let x = s.point();
        let (u, w) = (s.tangent(x), s.tangent(x));
        let chart = Chart::new(x);
        let jet = chart.jet(&[0.0; 6], 1e-4).unwrap();
        let uc = to_vec6(chart.tangent_to_coords(&u));
        let wc = to_vec6(chart.tangent_to_coords(&w));
        assert!(jet.riemann(&uc, &uc, &wc).norm() < 1e-12);
        assert!(curvature_crosscheck(&x, &u, &u, &w, 1e-4).unwrap() < 1e-12);
    }
}

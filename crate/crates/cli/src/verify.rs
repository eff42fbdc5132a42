//! Seeded identity suite for the nearly Kähler structure.

use nks_core::connection::{curvature_crosscheck, nabla_j};
use nks_core::nkspace::{
    curvature, g, p_invariant_complex_plane, p_orthogonal_complex_plane, sectional_curvature, IsometryNK,
};
use nks_core::quat::commutator_cross;
use nks_core::rng::Sampler;
use nks_core::{Result, TangentNK};

use crate::report::{Check, Config, Report};

/// Number of samples used by the finite-difference checks (at most).
const FD_SAMPLES: usize = 200;
const CURVATURE_SAMPLES: usize = 100;

pub struct VerifyArgs {
    pub samples: usize,
    pub seed: u64,
    pub step: f64,
    pub tol_analytic: f64,
    pub tol_fd: f64,
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) })
}

fn gn(x: &TangentNK) -> f64 {
    x.g_norm()
}

pub fn run(a: &VerifyArgs) -> Result<Report> {
    let mut report = Report::new(
        "verify",
        Config {
            samples: Some(a.samples),
            seed: Some(a.seed),
            step: a.step,
            tol_analytic: a.tol_analytic,
            tol_fd: a.tol_fd,
            ..Default::default()
        },
    );
    let ta = a.tol_analytic;
    let mut s = Sampler::new(a.seed);

    // quaternion algebra
    let mut assoc = 0.0f64;
    let mut comm = 0.0f64;
    for _ in 0..a.samples {
        let (p, q, r) = (s.unit_quat(), s.unit_quat(), s.unit_quat());
        assoc = assoc.max(((p * q) * r).max_abs_diff(p * (q * r)));
        let (x, y) = (s.im_quat(), s.im_quat());
        let (lhs, rhs) = commutator_cross(x, y);
        comm = comm.max(lhs.max_abs_diff(rhs) / (1.0 + x.norm() * y.norm()));
    }
    report.push(Check::new("quaternion associativity", "Hamilton product").at_most("max", assoc, ta));
    report.push(Check::new("commutator = 2 cross", "αβ − βα = 2 α×β").at_most("max", comm, ta));

    // pointwise structure identities
    let (mut j2, mut jg, mut p2, mut pj, mut pg, mut psym) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut anti, mut skew, mut pair, mut bianchi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut iso_g, mut iso_j, mut iso_frame) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..a.samples {
        let x0 = s.point();
        let (x, y, z, w) = (s.tangent(x0), s.tangent(x0), s.tangent(x0), s.tangent(x0));
        let sxy = 1.0 + gn(&x) * gn(&y);
        j2 = j2.max((x.j().j() + x).g_norm() / (1.0 + gn(&x)));
        jg = jg.max((g(&x.j(), &y.j())? - g(&x, &y)?).abs() / sxy);
        p2 = p2.max((x.p().p() - x).g_norm() / (1.0 + gn(&x)));
        pj = pj.max((x.j().p() + x.p().j()).g_norm() / (1.0 + gn(&x)));
        pg = pg.max((g(&x.p(), &y.p())? - g(&x, &y)?).abs() / sxy);
        psym = psym.max((g(&x.p(), &y)? - g(&x, &y.p())?).abs() / sxy);

        let s3 = 1.0 + gn(&x) * gn(&y) * gn(&z);
        let s4 = 1.0 + gn(&x) * gn(&y) * gn(&z) * gn(&w);
        let rxyz = curvature(&x, &y, &z)?;
        anti = anti.max((rxyz + curvature(&y, &x, &z)?).g_norm() / s3);
        let rxyw = curvature(&x, &y, &w)?;
        skew = skew.max((g(&rxyz, &w)? + g(&rxyw, &z)?).abs() / s4);
        pair = pair.max((g(&rxyz, &w)? - g(&curvature(&z, &w, &x)?, &y)?).abs() / s4);
        let cyc = rxyz + curvature(&y, &z, &x)? + curvature(&z, &x, &y)?;
        bianchi = bianchi.max(cyc.g_norm() / s3);

        let f = IsometryNK::new(s.unit_quat(), s.unit_quat(), s.unit_quat())?;
        let (fx, fy) = (f.apply_tangent(&x), f.apply_tangent(&y));
        iso_g = iso_g.max((g(&fx, &fy)? - g(&x, &y)?).abs() / sxy);
        iso_j = iso_j.max((f.apply_tangent(&x.j()) - fx.j()).g_norm() / (1.0 + gn(&x)));
        // left-trivialized first factor transforms by conjugation with c
        let (alpha, _) = x.left_trivialized();
        let (alpha_f, _) = fx.left_trivialized();
        iso_frame = iso_frame.max(alpha_f.max_abs_diff(f.apply_frame(alpha)) / (1.0 + alpha.norm()));
    }
    let push = |r: &mut Report, name: &str, reference: &str, x: f64| r.push(Check::new(name, reference).at_most("max", x, ta));
    push(&mut report, "J squared = -Id", "J² = −Id", j2);
    push(&mut report, "J preserves g", "g(JX,JY) = g(X,Y)", jg);
    push(&mut report, "P squared = Id", "P² = Id", p2);
    push(&mut report, "PJ = -JP", "PJ = −JP", pj);
    push(&mut report, "P preserves g", "g(PX,PY) = g(X,Y)", pg);
    push(&mut report, "P is g-symmetric", "g(PX,Y) = g(X,PY)", psym);
    push(&mut report, "curvature antisymmetry", "R(X,Y) = −R(Y,X)", anti);
    push(&mut report, "curvature g-skew", "g(R(X,Y)Z,W) = −g(R(X,Y)W,Z)", skew);
    push(&mut report, "curvature pair symmetry", "g(R(X,Y)Z,W) = g(R(Z,W)X,Y)", pair);
    push(&mut report, "first Bianchi identity", "cyclic sum of R(X,Y)Z vanishes", bianchi);
    push(&mut report, "isometry preserves g", "(p,q) ↦ (apc⁻¹, bqc⁻¹) is an isometry", iso_g);
    push(&mut report, "isometry commutes with J", "(p,q) ↦ (apc⁻¹, bqc⁻¹) is holomorphic", iso_j);
    push(&mut report, "isometry conjugates frames", "α ↦ cαc⁻¹", iso_frame);

    // complex planes with K = 0 and K = 2/3
    let (mut k0, mut k23) = (0.0f64, 0.0f64);
    for _ in 0..a.samples {
        let x0 = s.point();
        let y = s.tangent(x0);
        k0 = k0.max(sectional_curvature(&p_invariant_complex_plane(y)?)?.abs());
        let xi = s.unit_im_quat();
        let d = s.im_quat();
        let xdot = d - xi.scale(d.dot(xi));
        k23 = k23.max((sectional_curvature(&p_orthogonal_complex_plane(x0, xi, xdot)?)? - 2.0 / 3.0).abs());
    }
    report.push(Check::new("P-invariant complex plane", "sectional curvature 0").at_most("max |K|", k0, ta));
    report.push(Check::new("P-orthogonal complex plane", "sectional curvature 2/3").at_most("max |K - 2/3|", k23, ta));

    // finite-difference checks
    let nk_tol = 0.5 * a.tol_fd;
    let (mut nk, mut nk_skew) = (0.0f64, 0.0f64);
    for _ in 0..a.samples.min(FD_SAMPLES) {
        let x0 = s.point();
        let (x, y) = (s.tangent(x0), s.tangent(x0));
        nk = nk.max(nabla_j(&x, &x, a.step)?.g_norm() / x.g_norm_sqr());
        let sym = nabla_j(&x, &y, a.step)? + nabla_j(&y, &x, a.step)?;
        nk_skew = nk_skew.max(sym.g_norm() / (gn(&x) * gn(&y)));
    }
    report.push(Check::new("nearly Kähler (∇_X J)X = 0", "(∇_X J)X = 0").at_most("max", nk, nk_tol));
    report.push(Check::new("∇J skew-symmetric", "∇J is skew-symmetric").at_most("max", nk_skew, nk_tol));

    let mut cross = Vec::new();
    for _ in 0..a.samples.min(CURVATURE_SAMPLES) {
        let x0 = s.point();
        let (u, v, w) = (s.tangent(x0), s.tangent(x0), s.tangent(x0));
        cross.push(curvature_crosscheck(&x0, &u, &v, &w, a.step)?);
    }
    report.push(
        Check::new("curvature closed form vs chart", "curvature tensor of the nearly Kähler metric")
            .at_most("max relative", max_of(cross), a.tol_fd),
    );
    Ok(report)
}

//! Analysis of one almost complex surface.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use nks_core::connection::second_fundamental_field;
use nks_core::grid::Grid2;
use nks_core::io::write_fields_csv;
use nks_core::nkspace::g;
use nks_core::surface::{
    almost_complex_residual, frame_fields, induced_metric_and_k, integrability_residuals, j_invariance_residual,
    lambda_differential, theorem_l_check, AC_TOL_FD,
};
use nks_core::{Error, ParamSurface, Result};

use crate::report::{Check, Report};

/// Curvature tolerance on the builtin sphere.
const SPHERE_K_TOL: f64 = 1e-4;
/// Curvature tolerance on the builtin isothermal torus.
const TORUS_K_TOL: f64 = 1e-6;
/// Lower bound for the three vanishing-condition residuals on the isothermal torus.
const TORUS_VANISHING_MIN: f64 = 0.1;

pub struct SurfaceArgs<'a> {
    pub name: &'a str,
    pub step: f64,
    pub tol_analytic: f64,
    pub tol_fd: f64,
    pub out: Option<&'a Path>,
}

/// Tolerance for residuals that vanish identically: analytic tier when the
/// derivatives are exact, finite-difference tier otherwise.
fn tier(s: &ParamSurface, a: &SurfaceArgs) -> f64 {
    if s.has_exact_derivatives() {
        a.tol_analytic
    } else {
        a.tol_fd
    }
}

pub fn run(s: &ParamSurface, a: &SurfaceArgs, report: &mut Report) -> Result<()> {
    let tol = tier(s, a);
    let jinv = j_invariance_residual(s);
    report.push(
        Check::new("tangent planes J-invariant", "almost complex surface: J(TM) = TM").at_most(
            "max",
            jinv.max_interior(),
            tol,
        ),
    );

    let sff = second_fundamental_field(s, a.step)?;
    report.push(
        Check::new("minimal (trace of h)", "almost complex surfaces are minimal").at_most(
            "max |tr h|",
            sff.max_trace,
            a.tol_fd,
        ),
    );
    let h_check = Check::new("second fundamental form", "‖h‖ over nodes with a full stencil")
        .value("max", sff.max_norm)
        .value("min", sff.min_norm);
    match a.name {
        "sphere" | "torus" | "torus-isothermal" => {
            report.push(h_check.at_most("max", sff.max_norm, a.tol_fd).value("min", sff.min_norm));
        }
        _ => report.push(h_check),
    }

    if a.name == "torus" {
        torus_metric(s, a, report)?;
    }

    let ac = almost_complex_residual(s);
    let adapted = ac.max_all() <= s.ac_tolerance().max(tol);
    let mut fields: Vec<(&str, Grid2<f64>)> =
        vec![("j_invariance", jinv), ("h_norm", sff.norm.clone()), ("h_trace", sff.trace.clone())];
    if !adapted {
        report.push(Check::new("adapted coordinates (Jφ_u = φ_v)", "isothermal, J-adapted parameters").value(
            "max residual",
            ac.max_all(),
        ));
        report.note("coordinates are not J-adapted; frame fields, curvature and Λ are skipped");
        return write_fields(a.out, &fields);
    }
    report.push(
        Check::new("adapted coordinates (Jφ_u = φ_v)", "isothermal, J-adapted parameters").at_most(
            "max",
            ac.max_interior(),
            tol.max(if s.has_exact_derivatives() { 0.0 } else { AC_TOL_FD }),
        ),
    );

    let f = frame_fields(s)?;
    report.push(
        Check::new("frame relation γ, δ", "γ = (√3/2)β + ½α, δ = ½β − (√3/2)α").at_most(
            "max",
            f.gd_residual(),
            tol.max(1e-8),
        ),
    );
    let (minus, plus) = integrability_residuals(&f);
    report.push(
        Check::new("frame integrability", "structure equations of the frame")
            .value("max minus", minus.max_interior())
            .value("max plus", plus.max_interior()),
    );

    let (lambda, k) = induced_metric_and_k(&f)?;
    let mut kc = Check::new("Gaussian curvature", "K = −Δ ln λ / (2λ)")
        .value("min", k.min_interior())
        .value("max", k.max_interior())
        .value("mean", k.mean_interior());
    match a.name {
        "sphere" => {
            kc = kc.near(2.0 / 3.0, SPHERE_K_TOL, &[("min", k.min_interior()), ("max", k.max_interior())]);
            let exact = Grid2::from_fn(lambda.geom, |i, j| {
                let (u, v) = (lambda.geom.u(i), lambda.geom.v(j));
                6.0 / (1.0 + u * u + v * v).powi(2)
            });
            let err = Grid2::from_fn(lambda.geom, |i, j| (lambda.at(i, j) - exact.at(i, j)).abs()).max_all();
            report.push(Check::new("conformal factor", "λ = (3/2)·4/(1+u²+v²)²").at_most("max error", err, tol));
        }
        "torus-isothermal" => {
            kc = kc.near(0.0, TORUS_K_TOL, &[("min", k.min_interior()), ("max", k.max_interior())]);
            report.push(Check::new("conformal factor", "λ = 4/3").near(
                4.0 / 3.0,
                tol,
                &[("min", lambda.min_all()), ("max", lambda.max_all())],
            ));
        }
        _ => {
            report.push(
                Check::new("conformal factor", "λ = α·α + β·β")
                    .value("min", lambda.min_all())
                    .value("max", lambda.max_all()),
            );
        }
    }
    report.push(kc);

    let lf = lambda_differential(s)?;
    let lam_abs = lf.lambda.map(|z| z.norm());
    let mut lc = Check::new("holomorphic differential Λ", "Λ = g(Pφ_z, φ_z)")
        .value("max |Λ|", lam_abs.max_all())
        .value("min |Λ|", lam_abs.min_all())
        .value("max CR residual of w", lf.cr_w.max_interior());
    if let Some(r) = lf.ratio {
        lc = lc.value("Λ/w re", r.re).value("Λ/w im", r.im).value("Λ/w spread", lf.ratio_spread);
    }
    if a.name == "sphere" {
        lc = lc.at_most("max |Λ|", lam_abs.max_all(), tol);
    }
    report.push(lc);
    if a.name == "torus-isothermal" {
        let target = nks_core::surface::w_of(nks_core::ImQuat::I, nks_core::ImQuat::I.scale(-1.0 / 3f64.sqrt()));
        let err = lf.w.data.iter().map(|w| (w - target).norm()).fold(0.0, f64::max);
        report.push(Check::new("w constant on the torus", "w = −2/√3 + (2/3)i").at_most("max error", err, tol.max(1e-10)));
    }

    let tl = theorem_l_check(s)?;
    let [mx0, mx1, mx2] = tl.maxima();
    let [mn0, mn1, mn2] = tl.minima();
    let mut tc = Check::new("Λ = 0 ⇔ |α|=|β|, α⊥β ⇔ P(TM) ⊥ TM", "equivalent vanishing conditions")
        .value("max |Λ|", mx0)
        .value("max frame defect", mx1)
        .value("max P-tangency", mx2)
        .value("min |Λ|", mn0)
        .value("min frame defect", mn1)
        .value("min P-tangency", mn2);
    let tl_tol = tol.max(1e-8);
    tc = match a.name {
        "sphere" => tc.judged(tol, mx0.max(mx1).max(mx2) <= tol),
        "torus-isothermal" => tc.judged(TORUS_VANISHING_MIN, mn0.min(mn1).min(mn2) >= TORUS_VANISHING_MIN),
        _ => tc.judged(tl_tol, tl.consistent(tl_tol)),
    };
    report.push(tc);

    fields.extend([
        ("lambda", lambda),
        ("K", k),
        ("abs_Lambda", lam_abs),
        ("w_re", lf.w.map(|z| z.re)),
        ("w_im", lf.w.map(|z| z.im)),
        ("ac_residual", ac),
    ]);
    write_fields(a.out, &fields)
}

/// Metric coefficients of the `(s, t)` torus.
fn torus_metric(s: &ParamSurface, a: &SurfaceArgs, report: &mut Report) -> Result<()> {
    let geom = *s.geom();
    let mut err = [0.0f64; 3];
    for i in 0..geom.nu {
        for j in 0..geom.nv {
            let (_, ps, pt) = s.jet_at_node(i, j);
            let vals = [g(&ps, &ps)?, g(&pt, &pt)?, g(&ps, &pt)?];
            for (e, (v, t)) in err.iter_mut().zip(vals.iter().zip([4.0 / 3.0, 4.0 / 3.0, -2.0 / 3.0])) {
                *e = e.max((v - t).abs());
            }
        }
    }
    report.push(
        Check::new("torus metric", "g(φ_s,φ_s) = g(φ_t,φ_t) = 4/3, g(φ_s,φ_t) = −2/3")
            .value("err ss", err[0])
            .value("err tt", err[1])
            .value("err st", err[2])
            .judged(a.tol_analytic, err.iter().all(|&e| e <= a.tol_analytic)),
    );
    Ok(())
}

fn write_fields(out: Option<&Path>, fields: &[(&str, Grid2<f64>)]) -> Result<()> {
    let Some(path) = out else { return Ok(()) };
    let names: Vec<&str> = fields.iter().map(|f| f.0).collect();
    let grids: Vec<&Grid2<f64>> = fields.iter().map(|f| &f.1).collect();
    let file = File::create(path).map_err(|e| Error::BadInput(format!("{}: {e}", path.display())))?;
    write_fields_csv(BufWriter::new(file), &names, &grids)
}

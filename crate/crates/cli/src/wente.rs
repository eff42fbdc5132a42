//! Forward direction of the correspondence: surface → ε in ℝ³.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use nks_core::grid::{observed_orders, GridGeom};
use nks_core::io::{write_obj, write_points_csv};
use nks_core::surface::{frame_fields, lambda_differential};
use nks_core::wente::{
    fit_sphere, h_surface_residual, integrate_epsilon, mean_curvature_r3, metric_ratio, EpsilonGrid, H_EXPECTED,
    RANK_TOL,
};
use nks_core::{Error, ParamSurface, Result};

use crate::report::{Check, Report};

/// Tolerance of the metric-halving ratio.
pub const RATIO_TOL: f64 = 1e-6;
/// `Λ` below which the metric-halving ratio is asserted.
const LAMBDA_ZERO: f64 = 1e-8;
/// Radius tolerance of the sphere fit for the builtin sphere.
const RADIUS_TOL: f64 = 1e-4;
/// Minimum convergence order of the H-surface residual.
pub const MIN_ORDER: f64 = 1.8;
/// Residuals below this are treated as rounding noise in order estimates.
const FLOOR: f64 = 1e-10;

pub struct WenteArgs<'a> {
    pub name: &'a str,
    pub tol_fd: f64,
    pub periodic: [bool; 2],
    pub out: Option<&'a Path>,
}

fn integrate(s: &ParamSurface, periodic: [bool; 2]) -> Result<EpsilonGrid> {
    let p = s.domain().periodic;
    for (axis, (&is, &allowed)) in ["u", "v"].into_iter().zip(p.iter().zip(&periodic)) {
        if is && !allowed {
            return Err(Error::PeriodicWithoutFlag(axis));
        }
    }
    integrate_epsilon(&frame_fields(s)?, p[0] || p[1])
}

/// Largest interior H-surface residual relative to `max(1, max |Δε|)`.
fn relative_residual(e: &EpsilonGrid) -> f64 {
    let scale = e.laplacian().map(|x| x.norm()).max_interior().max(1.0);
    h_surface_residual(e).max_interior() / scale
}

fn coarsened(g: &GridGeom, k: usize) -> Option<(usize, usize)> {
    let c = |n: usize, p: bool| {
        if p {
            (n % (1 << k) == 0).then_some(n >> k)
        } else {
            ((n - 1) % (1 << k) == 0).then_some(((n - 1) >> k) + 1)
        }
    };
    let (nu, nv) = (c(g.nu, g.domain.periodic[0])?, c(g.nv, g.domain.periodic[1])?);
    (nu >= 9 && nv >= 9).then_some((nu, nv))
}

pub fn run(s: &ParamSurface, a: &WenteArgs, report: &mut Report) -> Result<()> {
    let f = frame_fields(s)?;
    let e = integrate(s, a.periodic)?;
    let geom = *s.geom();

    report.push(
        Check::new("path independence", "ε_v·du and ε_u·dv integrate consistently").at_most(
            "max",
            e.path_residual,
            a.tol_fd,
        ),
    );
    report.push(
        Check::new("closedness α̃_v = β̃_u", "rotated frame is a closed one-form").value(
            "max",
            e.closedness_residual().max_interior(),
        ),
    );
    for (axis, h) in ["u", "v"].into_iter().zip(e.holonomy) {
        if let Some(h) = h {
            report.push(
                Check::new(&format!("period of ε along {axis}"), "holonomy on the universal cover")
                    .value("x", h.x)
                    .value("y", h.y)
                    .value("z", h.z),
            );
        }
    }

    let residual = relative_residual(&e);
    report.push(
        Check::new("H-surface equation", "ε_uu + ε_vv = −(4/√3) ε_u×ε_v").at_most(
            "max relative",
            residual,
            a.tol_fd,
        ),
    );
    if !s.is_grid() {
        let mut errs = vec![residual];
        for k in 1..=2 {
            let Some((nu, nv)) = coarsened(&geom, k) else { break };
            let c = s.clone().with_grid(nu, nv)?;
            errs.push(relative_residual(&integrate(&c, a.periodic)?));
        }
        errs.reverse();
        if errs.len() >= 2 {
            let orders = observed_orders(&errs);
            let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
            let at_floor = errs.iter().all(|&x| x <= FLOOR);
            let mut c = Check::new("H-surface residual order", "second-order scheme under refinement")
                .value("coarsest", errs[0])
                .value("finest", errs[errs.len() - 1]);
            if !at_floor {
                c = c.value("min order", min_order);
            }
            report.push(c.judged(MIN_ORDER, at_floor || min_order >= MIN_ORDER));
            if at_floor {
                report.note("H-surface residual is at rounding level on every grid; order not measured");
            }
        }
    }

    let area = e.min_area_element();
    if !(area >= RANK_TOL) {
        report.push(Check::new("immersion rank", "|ε_u×ε_v| > 0").value("min |ε_u×ε_v|", area));
        report.note("ε is not an immersion (rank deficient): mean curvature and fits are skipped");
    } else {
        let h = mean_curvature_r3(&e)?;
        report.push(Check::new("mean curvature of ε", "constant mean curvature −2/√3").near(
            H_EXPECTED,
            a.tol_fd,
            &[("min", h.min_interior()), ("max", h.max_interior())],
        ));
        let lf = lambda_differential(s)?;
        let lam_max = lf.lambda.map(|z| z.norm()).max_all();
        let ratio = metric_ratio(&e, &f);
        let rc = Check::new("metric ratio λ_ε/λ", "ε-metric is half the induced metric");
        if lam_max <= LAMBDA_ZERO {
            report.push(rc.near(0.5, RATIO_TOL, &[("min", ratio.min_all()), ("max", ratio.max_all())]));
        } else {
            report.push(rc.value("min", ratio.min_all()).value("max", ratio.max_all()).value("max |Λ|", lam_max));
        }
        let fit = fit_sphere(e.point_list())?;
        let fc = Check::new("sphere fit", "round sphere of radius √3/2")
            .value("radius", fit.radius)
            .value("max residual", fit.max_residual)
            .value("center x", fit.center.x)
            .value("center y", fit.center.y)
            .value("center z", fit.center.z);
        if a.name == "sphere" {
            let r0 = 3f64.sqrt() / 2.0;
            let ok = (fit.radius - r0).abs() <= RADIUS_TOL && fit.max_residual <= RADIUS_TOL;
            report.push(fc.value("target", r0).judged(RADIUS_TOL, ok));
        } else {
            report.push(fc);
        }
    }

    if let Some(path) = a.out {
        let kind = out_kind(path)?;
        let file = File::create(path).map_err(|err| Error::BadInput(format!("{}: {err}", path.display())))?;
        let w = BufWriter::new(file);
        match kind {
            MeshFormat::Obj => write_obj(w, &e.points)?,
            MeshFormat::Csv => write_points_csv(w, &e.points)?,
        }
    }
    Ok(())
}

pub enum MeshFormat {
    Obj,
    Csv,
}

/// Export format from the extension of `--out`.
pub fn out_kind(path: &Path) -> Result<MeshFormat> {
    match path.extension().and_then(|x| x.to_str()) {
        Some("obj") => Ok(MeshFormat::Obj),
        Some("csv") => Ok(MeshFormat::Csv),
        _ => Err(Error::BadInput(format!("--out {}: expected a .obj or .csv path", path.display()))),
    }
}

//! Reverse direction: a constant mean curvature surface in ℝ³ lifted to an
//! almost complex surface.

use std::path::Path;

use nks_core::connection::second_fundamental_field;
use nks_core::io::write_surface;
use nks_core::surface::{almost_complex_residual, example2_sphere, frame_fields, lambda_differential};
use nks_core::wente::{
    frame_conjugacy_residual, integrate_epsilon, lift_from_cmc_with, rigid_align, CMCInput, LiftTolerances,
};
use nks_core::{Quaternion, Result};

use crate::report::{Check, Report};

/// Almost-complex and `Λ` tolerance for lifted surfaces.
pub const LIFT_AC_TOL: f64 = 1e-4;
/// Lower bound on `‖h‖` for the lifted cylinder.
pub const CYLINDER_H_MIN: f64 = 0.05;
/// Bound on `||p| − 1|`, `||q| − 1|` after renormalized steps.
pub const UNIT_TOL: f64 = 1e-10;

pub struct LiftArgs<'a> {
    pub name: &'a str,
    pub step: f64,
    pub tol_fd: f64,
    pub out: Option<&'a Path>,
}

pub fn run(input: &CMCInput, a: &LiftArgs, report: &mut Report) -> Result<()> {
    let tol = LiftTolerances { gate: a.tol_fd, consistency: a.tol_fd };
    let lift = lift_from_cmc_with(input, Quaternion::ONE, Quaternion::ONE, tol)?;
    report.push(
        Check::new("input H-surface residual", "ε_uu + ε_vv = −(4/√3) ε_u×ε_v").at_most(
            "max relative",
            lift.input_residual,
            a.tol_fd,
        ),
    );
    report.push(
        Check::new("path consistency", "column-first and row-first frame integration agree").at_most(
            "max",
            lift.consistency,
            a.tol_fd,
        ),
    );
    report.push(Check::new("unit norms", "lift stays on S³×S³").at_most("max", lift.unit_error, UNIT_TOL));

    let s = &lift.surface;
    let ac = almost_complex_residual(s);
    report.push(
        Check::new("almost complex (Jφ_u = φ_v)", "the lift is an almost complex surface")
            .at_most("max interior", ac.max_interior(), LIFT_AC_TOL)
            .value("max", ac.max_all()),
    );
    let lf = lambda_differential(s)?;
    let lam = lf.lambda.map(|z| z.norm());
    report.push(
        Check::new("holomorphic differential Λ", "Λ vanishes for lifts of CMC surfaces")
            .at_most("max interior", lam.max_interior(), LIFT_AC_TOL),
    );

    let sff = second_fundamental_field(s, a.step)?;
    report.push(
        Check::new("minimal (trace of h)", "almost complex surfaces are minimal").at_most(
            "max |tr h|",
            sff.max_trace,
            a.tol_fd,
        ),
    );
    let hc = Check::new("second fundamental form", "‖h‖ over nodes with a full stencil")
        .value("max", sff.max_norm)
        .value("min", sff.min_norm);
    report.push(match a.name {
        "sphere-cmc" => hc.at_most("max", sff.max_norm, a.tol_fd),
        "cylinder-cmc" => hc.at_least("min", sff.min_norm, CYLINDER_H_MIN),
        _ => hc,
    });

    let f = frame_fields(s)?;
    let back = integrate_epsilon(&f, false)?;
    let motion = rigid_align(back.point_list(), &input.points.data)?;
    report.push(
        Check::new("round trip ε", "forward map of the lift reproduces ε up to a rigid motion").at_most(
            "max",
            motion.max_residual,
            a.tol_fd,
        ),
    );

    if a.name == "sphere-cmc" {
        let example = example2_sphere().with_grid(input.geom().nu, input.geom().nv)?;
        if *example.domain() == input.geom().domain {
            let conj = frame_conjugacy_residual(&frame_fields(&example)?, &lift.alpha, &lift.beta)?;
            report.push(
                Check::new("frames conjugate to the sphere example", "(α, β) ↦ (cαc⁻¹, cβc⁻¹)").at_most(
                    "max",
                    conj,
                    a.tol_fd,
                ),
            );
        }
    }

    if let Some(path) = a.out {
        write_surface(path, s)?;
    }
    Ok(())
}

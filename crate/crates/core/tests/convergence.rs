//! Refinement studies, chart independence and negative controls.

use nalgebra::SVector;
use nks_core::connection::{curvature_crosscheck, nabla_j, second_fundamental_field, Chart, SFF_STEP};
use nks_core::grid::{observed_orders, Domain, Grid2, GridGeom};
use nks_core::nkspace::{curvature, g, sectional_curvature, IsometryNK};
use nks_core::rng::Sampler;
use nks_core::surface::{
    example1_torus_isothermal, example2_sphere, frame_fields, induced_metric_and_k, lambda_differential,
};
use nks_core::wente::{
    h_surface_residual, integrate_epsilon, lift_from_cmc, rigid_align, rotation_align, CMCInput,
    CYLINDER_RADIUS,
};
use nks_core::{Error, ImQuat, Plane2, Quaternion};
use num_complex::Complex64;

type Vec6 = SVector<f64, 6>;

/// The builtin cylinder without the isothermality check, which needs fine
/// grids.
fn cylinder(n: usize) -> CMCInput {
    let geom = GridGeom::new(Domain::new(0.0, 1.0, 0.0, 1.0), n, n).unwrap();
    let r = CYLINDER_RADIUS;
    let pts = Grid2::from_fn(geom, |i, j| {
        let (u, v) = (geom.u(i), geom.v(j));
        ImQuat::new(r * (u / r).cos(), r * (u / r).sin(), v)
    });
    CMCInput::new(geom, false, pts.data).unwrap()
}

fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn curvature_crosscheck_is_second_order_in_the_step() {
    let mut s = Sampler::new(3);
    let steps = [8e-3, 4e-3, 2e-3];
    for _ in 0..10 {
        let x0 = s.point();
        let (u, v, w) = (s.tangent(x0), s.tangent(x0), s.tangent(x0));
        let errs: Vec<f64> = steps.iter().map(|&h| curvature_crosscheck(&x0, &u, &v, &w, h).unwrap()).collect();
        let orders = observed_orders(&errs);
        assert!(min(&orders) >= 1.8, "{errs:?} {orders:?}");
    }
}

#[test]
fn nearly_kaehler_residual_is_second_order_in_the_step() {
    let mut s = Sampler::new(4);
    let x0 = s.point();
    let x = s.tangent(x0);
    let errs: Vec<f64> = [8e-3, 4e-3, 2e-3].iter().map(|&h| nabla_j(&x, &x, h).unwrap().g_norm()).collect();
    assert!(min(&observed_orders(&errs)) >= 1.8, "{errs:?}");
    // ∇J itself does not vanish: S³×S³ is strictly nearly Kähler
    let y = s.tangent(x0);
    assert!(nabla_j(&x, &y, 1e-4).unwrap().g_norm() > 0.1);
}

/// Sectional curvature from the connection in a chart centered away from
/// the point agrees with the closed form.
#[test]
fn chart_curvature_does_not_depend_on_the_chart_center() {
    let mut s = Sampler::new(8);
    for _ in 0..10 {
        let x0 = s.point();
        let (x, y) = (s.tangent(x0), s.tangent(x0));
        let offset = s.tangent(x0).scale(0.1);
        let center = nks_core::PointNK::new(
            (x0.p + offset.u).normalize().unwrap(),
            (x0.q + offset.v).normalize().unwrap(),
        )
        .unwrap();
        let chart = Chart::new(center);
        let xi = chart.to_coords(&x0).unwrap();
        let jet = chart.jet(&xi, 1e-4).unwrap();
        let c = |t| Vec6::from_column_slice(&chart.tangent_to_coords(t));
        let k_chart = jet.sectional_curvature(&c(&x), &c(&y)).unwrap();
        let k = sectional_curvature(&Plane2::new(x, y).unwrap()).unwrap();
        assert!((k_chart - k).abs() < 1e-5, "{k_chart} {k}");
        // the chart metric reproduces g
        assert!((jet.inner(&c(&x), &c(&y)) - g(&x, &y).unwrap()).abs() < 1e-12 * (1.0 + x.g_norm() * y.g_norm()));
    }
}

#[test]
fn sphere_curvature_converges() {
    let errs: Vec<f64> = [17, 33, 65]
        .iter()
        .map(|&n| {
            let s = example2_sphere().with_grid(n, n).unwrap();
            let (_, k) = induced_metric_and_k(&frame_fields(&s).unwrap()).unwrap();
            Grid2::from_fn(k.geom, |i, j| (k.at(i, j) - 2.0 / 3.0).abs()).max_interior()
        })
        .collect();
    assert!(min(&observed_orders(&errs)) >= 1.8, "{errs:?}");
}

#[test]
fn h_surface_residual_converges_on_the_sphere() {
    let errs: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&n| {
            let s = example2_sphere().with_grid(n, n).unwrap();
            h_surface_residual(&integrate_epsilon(&frame_fields(&s).unwrap(), false).unwrap()).max_interior()
        })
        .collect();
    assert!(min(&observed_orders(&errs)) >= 1.8, "{errs:?}");
}

/// `w` is holomorphic; on a holomorphic reparametrization of the flat torus
/// it is not constant, so the discrete Cauchy-Riemann residual shows the
/// order of the difference scheme.
#[test]
fn cauchy_riemann_residual_of_w_converges() {
    let errs: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&n| {
            let geom = GridGeom::new(Domain::new(0.0, 1.0, 0.0, 1.0), n, n).unwrap();
            let s = example1_torus_isothermal()
                .reparametrized(geom, |z| ((z * 0.5).exp() * 2.0 - 2.0, (z * 0.5).exp()))
                .unwrap();
            lambda_differential(&s).unwrap().cr_w.max_interior()
        })
        .collect();
    assert!(errs[0] > 1e-6, "{errs:?}");
    assert!(min(&observed_orders(&errs)) >= 1.8, "{errs:?}");
}

#[test]
fn surface_data_is_isometry_invariant() {
    let mut smp = Sampler::new(12);
    let f = IsometryNK::new(smp.unit_quat(), smp.unit_quat(), smp.unit_quat()).unwrap();
    let s = example2_sphere().with_grid(65, 65).unwrap();
    let t = s.transformed(&f);
    let (fs, ft) = (frame_fields(&s).unwrap(), frame_fields(&t).unwrap());
    for (a, b) in fs.alpha.data.iter().zip(&ft.alpha.data).chain(fs.beta.data.iter().zip(&ft.beta.data)) {
        assert!(b.max_abs_diff(f.apply_frame(*a)) < 1e-10);
    }
    let (ls, lt) = (lambda_differential(&s).unwrap(), lambda_differential(&t).unwrap());
    for (a, b) in ls.lambda.data.iter().zip(&lt.lambda.data) {
        assert!((a - b).norm() < 1e-10);
    }
    let (_, ks) = induced_metric_and_k(&fs).unwrap();
    let (_, kt) = induced_metric_and_k(&ft).unwrap();
    assert!(ks.data.iter().zip(&kt.data).all(|(a, b)| (a - b).abs() < 1e-8));

    // ε rotates by c: the two immersions differ by a rotation after centering
    let (es, et) = (integrate_epsilon(&fs, false).unwrap(), integrate_epsilon(&ft, false).unwrap());
    let center = |e: &[ImQuat]| -> Vec<ImQuat> {
        let n = e.len() as f64;
        let c = e.iter().fold(ImQuat::ZERO, |a, b| a + *b).scale(1.0 / n);
        e.iter().map(|x| *x - c).collect()
    };
    let m = rotation_align(&center(es.point_list()), &center(et.point_list())).unwrap();
    assert!(m.max_residual < 1e-6, "{}", m.max_residual);
    let expected = f.c.rotate(ImQuat::I);
    let got = m.rotation * nalgebra::Vector3::new(1.0, 0.0, 0.0);
    assert!((got - nalgebra::Vector3::new(expected.x, expected.y, expected.z)).norm() < 1e-6);
}

#[test]
fn isometric_image_of_the_sphere_stays_totally_geodesic() {
    let mut smp = Sampler::new(13);
    let f = IsometryNK::new(smp.unit_quat(), smp.unit_quat(), smp.unit_quat()).unwrap();
    let t = example2_sphere().with_grid(33, 33).unwrap().transformed(&f);
    let sff = second_fundamental_field(&t, SFF_STEP).unwrap();
    assert!(sff.max_norm < 1e-6, "{}", sff.max_norm);
}

#[test]
fn lift_round_trip_converges() {
    // round trip on the cylinder, where the exact lift is not needed: the
    // forward image must match the input up to a rigid motion
    let errs: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&n| {
            let c = cylinder(n);
            let l = lift_from_cmc(&c, Quaternion::ONE, Quaternion::ONE).unwrap();
            let back = integrate_epsilon(&frame_fields(&l.surface).unwrap(), false).unwrap();
            rigid_align(back.point_list(), &c.points.data).unwrap().max_residual
        })
        .collect();
    assert!(errs[2] < 1e-3, "{errs:?}");
    assert!(min(&observed_orders(&errs)) >= 1.8, "{errs:?}");
}

// negative controls

#[test]
fn wrong_curvature_constant_is_caught() {
    // scaling the closed form by 1.01 must fail the chart cross-check
    let mut s = Sampler::new(21);
    let x0 = s.point();
    let (u, v, w) = (s.tangent(x0), s.tangent(x0), s.tangent(x0));
    let exact = curvature(&u, &v, &w).unwrap();
    let chart = Chart::new(x0);
    let jet = chart.jet(&[0.0; 6], 1e-4).unwrap();
    let c = |t| Vec6::from_column_slice(&chart.tangent_to_coords(t));
    let numeric = chart.coords_to_tangent(&[0.0; 6], &jet.riemann(&c(&u), &c(&v), &c(&w)));
    let scale = u.g_norm() * v.g_norm() * w.g_norm();
    assert!((numeric - exact).g_norm() / scale < 1e-6);
    assert!((numeric - exact.scale(1.01)).g_norm() / scale > 1e-3);
}

#[test]
fn non_cmc_input_is_rejected_by_the_lift() {
    // a plane solves Δε = 0, not the H-surface equation
    let geom = GridGeom::new(Domain::new(0.0, 1.0, 0.0, 1.0), 33, 33).unwrap();
    let plane = Grid2::from_fn(geom, |i, j| ImQuat::new(geom.u(i), geom.v(j), 0.0));
    let e = CMCInput::new(geom, true, plane.data).unwrap();
    assert!(matches!(
        lift_from_cmc(&e, Quaternion::ONE, Quaternion::ONE),
        Err(Error::ResidualTooLarge { .. })
    ));
    // a scaled sphere has the wrong mean curvature
    let sphere = nks_core::wente::sphere_cmc(129, 129).unwrap();
    let big = CMCInput::new(*sphere.geom(), false, sphere.points.data.iter().map(|x| x.scale(1.2)).collect()).unwrap();
    assert!(lift_from_cmc(&big, Quaternion::ONE, Quaternion::ONE).is_err());
}

#[test]
fn non_isothermal_input_is_rejected() {
    let geom = GridGeom::new(Domain::new(0.0, 1.0, 0.0, 1.0), 33, 33).unwrap();
    let stretched = Grid2::from_fn(geom, |i, j| ImQuat::new(2.0 * geom.u(i), geom.v(j), 0.0));
    assert!(matches!(CMCInput::new(geom, true, stretched.data), Err(Error::NotIsothermal(_))));
}

#[test]
fn non_unit_start_is_rejected() {
    let c = cylinder(33);
    let bad = Quaternion::new(1.1, 0.0, 0.0, 0.0);
    assert!(matches!(lift_from_cmc(&c, bad, Quaternion::ONE), Err(Error::NotUnit(_))));
}

#[test]
fn torus_is_not_totally_real_in_the_p_sense() {
    // on the flat torus Λ stays away from zero while w is constant
    let s = example1_torus_isothermal().with_grid(32, 33).unwrap();
    let l = lambda_differential(&s).unwrap();
    assert!(l.lambda.data.iter().all(|z| z.norm() > 0.5));
    let w0 = Complex64::new(-2.0 / 3f64.sqrt(), 2.0 / 3.0);
    assert!(l.w.data.iter().all(|w| (w - w0).norm() < 1e-10));
}

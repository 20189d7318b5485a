use std::f64::consts::PI;
use std::sync::Arc;

use geomcert::fibration::*;
use geomcert::globalint::{volume, Atlas, QuadratureGrid};
use geomcert::jet::Jet;
use geomcert::sampling::interior_points;
use geomcert::tensorcore::{catalog, curvature_at, MapFn};
use geomcert::GeomError;
use proptest::prelude::*;

/// Poincaré disk with a = 2λ(x dy − y dx)/(1−|x|²), so ω = λ·dA.
fn hyperbolic_area_form(lambda: f64, eps: f64) -> ConnectionData<f64> {
    let pot: MapFn<f64> = Arc::new(move |x: &[Jet<f64>]| {
        let s = (x[0].square() + x[1].square()).rsub(1.0).recip().scale(2.0 * lambda);
        vec![-(&x[1] * &s), &x[0] * &s]
    });
    ConnectionData::new(catalog::hyperbolic_ball(2), pot, eps).unwrap()
}

/// (base, λ, Sc of the base) for the three area-form families.
fn families(lambda: f64, eps: f64) -> Vec<(ConnectionData<f64>, f64)> {
    vec![
        (ConnectionData::flat_plane(lambda, eps).unwrap(), 0.0),
        (ConnectionData::sphere_area_form(lambda, eps).unwrap(), 2.0),
        (hyperbolic_area_form(lambda, eps), -2.0),
    ]
}

fn base_points(data: &ConnectionData<f64>, count: usize) -> Vec<Vec<f64>> {
    let mut d = data.base.domain().clone();
    if d.upper[0] > 100.0 {
        d = geomcert::tensorcore::Domain::cube(2, -2.0, 2.0);
    }
    interior_points(&d, count, 41, 0.1)
}

#[test]
fn trivial_potential_gives_product() {
    let base = catalog::sphere_polar::<f64>(2, 1.0).unwrap();
    let data = ConnectionData::trivial(base.clone(), 0.7).unwrap();
    let total = connection_metric(&data).unwrap();
    let x = [1.1, 2.0, 0.5];
    let g = total.metric_at(&x).unwrap();
    let gb = base.metric_at(&x[..2]).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert_eq!(g[i * 3 + j], gb[i * 2 + j]);
        }
        assert_eq!(g[i * 3 + 2], 0.0);
    }
    assert!((g[8] - 0.49).abs() < 1e-15);
    assert_eq!(omega_hs_norm(&data, &x[..2]).unwrap(), 0.0);
    let flat = ConnectionData::<f64>::trivial(catalog::euclidean(2), 1.3).unwrap();
    assert!(oneill_residual(&flat, &[0.2, -0.4, 1.0]).unwrap() < 1e-14);
    assert!(curvature_at(&connection_metric(&flat).unwrap(), &[0.2, -0.4, 1.0]).unwrap().scalar.abs() < 1e-14);
    assert!(ConnectionData::trivial(catalog::euclidean::<f64>(2), 0.0).is_err());
    assert!(ConnectionData::trivial(catalog::euclidean::<f64>(1), 1.0).is_err());
}

#[test]
fn curvature_forms_by_hand() {
    let x = [0.3, -0.8];
    let w = ConnectionData::<f64>::flat_plane(1.7, 0.5).unwrap().omega(&x).unwrap();
    assert!((w[1] - 1.7).abs() < 1e-14 && (w[2] + 1.7).abs() < 1e-14 && w[0] == 0.0);
    let s = ConnectionData::<f64>::sphere_area_form(1.2, 0.5).unwrap();
    let th: f64 = 0.9;
    let w = s.omega(&[th, 2.0]).unwrap();
    assert!((w[1] - 1.2 * th.sin()).abs() < 1e-14);
    let h = hyperbolic_area_form(0.8, 0.5);
    let y = [0.2, 0.3];
    let r2: f64 = 0.13;
    assert!((h.omega(&y).unwrap()[1] - 0.8 * 4.0 / (1.0 - r2).powi(2)).abs() < 1e-12);
}

#[test]
fn area_form_norm_is_two_lambda_squared() {
    for lambda in [0.0, 0.5, 1.3] {
        for (data, _) in families(lambda, 0.4) {
            for x in base_points(&data, 10) {
                let n2 = omega_hs_norm(&data, &x).unwrap();
                assert!((n2 - 2.0 * lambda * lambda).abs() < 1e-10 * (1.0 + lambda * lambda), "{}", data.base.name());
            }
        }
    }
}

#[test]
fn closedness_of_omega() {
    let pot: MapFn<f64> = Arc::new(|x: &[Jet<f64>]| vec![&x[1] * &x[2], x[0].square(), x[0].sin() + x[1].cos()]);
    let data = ConnectionData::new(catalog::euclidean(3), pot, 0.5).unwrap();
    for x in interior_points(&geomcert::tensorcore::Domain::cube(3, -1.0, 1.0), 10, 2, 0.0) {
        assert!(data.d_omega_residual(&x).unwrap() <= 1e-10);
        let mut p = x.clone();
        p.push(1.0);
        assert!(oneill_residual(&data, &p).unwrap() <= 1e-8);
    }
}

#[test]
fn scalar_curvature_matches_submersion_formula() {
    for eps in [0.1, 0.5, 1.3] {
        for lambda in [0.6, 1.5] {
            for (data, sb) in families(lambda, eps) {
                for x in base_points(&data, 8) {
                    let p = [x[0], x[1], 2.5];
                    assert!(oneill_residual(&data, &p).unwrap() <= 1e-8);
                    let sc = curvature_at(&connection_metric(&data).unwrap(), &p).unwrap().scalar;
                    let want = sb - eps * eps * lambda * lambda / 2.0;
                    assert!((sc - want).abs() <= 1e-8, "{} {sc} vs {want}", data.base.name());
                }
            }
        }
    }
    let torus = ConnectionData::new(catalog::flat_torus(2), ConnectionData::flat_plane(0.9, 0.3).unwrap().potential, 0.3).unwrap();
    assert!(oneill_residual(&torus, &[0.4, 0.7, 0.0]).unwrap() <= 1e-10);
    assert!(matches!(oneill_residual(&torus, &[0.4, 0.7]), Err(GeomError::DimensionMismatch { .. })));
}

#[test]
fn epsilon_squared_slope() {
    for (data, sb) in families(1.1, 1.0) {
        for x in base_points(&data, 3) {
            let p = [x[0], x[1], 0.0];
            let (slope, intercept) = epsilon_slope(&data.base, &data.potential, &[0.1, 0.2, 0.4], &p).unwrap();
            let want = -omega_hs_norm(&data, &x).unwrap() / 4.0;
            assert!((slope - want).abs() <= 1e-6, "{slope} vs {want}");
            assert!((intercept - sb).abs() <= 1e-8);
        }
    }
}

#[test]
fn fibers_are_geodesics() {
    for (data, _) in families(1.4, 0.6) {
        for x in base_points(&data, 6) {
            assert!(fiber_geodesic_residual(&data, &[x[0], x[1], 1.0]).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn a_tensor_examples() {
    let zero = ConnectionData::trivial(catalog::euclidean::<f64>(2), 0.8).unwrap();
    let a = a_tensor_check(&zero, &[1.0, 0.0], &[0.0, 1.0], &[0.1, 0.2, 0.0]).unwrap();
    assert!(a.computed_norm < 1e-14 && a.residual < 1e-14);
    for (eps, lambda) in [(0.5f64, 1.0f64), (1.2, 0.3)] {
        let data = ConnectionData::flat_plane(lambda, eps).unwrap();
        let a = a_tensor_check(&data, &[1.0, 0.0], &[0.0, 1.0], &[0.4, -0.3, 1.0]).unwrap();
        assert!((a.computed_norm - eps * lambda / 2.0).abs() < 1e-12);
        assert!(a.residual <= 1e-8);
    }
    for (data, _) in families(0.9, 0.7) {
        for x in base_points(&data, 5) {
            let r = a_tensor_check(&data, &[0.3, 1.0], &[-0.7, 0.2], &[x[0], x[1], 3.0]).unwrap();
            assert!(r.residual <= 1e-8, "{}", data.base.name());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn a_tensor_is_rotation_invariant(angle in 0.0f64..(2.0 * PI), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let data = ConnectionData::flat_plane(1.3, 0.6).unwrap();
        let p = [x, y, 0.5];
        let r0 = a_tensor_check(&data, &[1.0, 0.0], &[0.0, 1.0], &p).unwrap();
        let (c, s) = (angle.cos(), angle.sin());
        let r1 = a_tensor_check(&data, &[c, s], &[-s, c], &p).unwrap();
        prop_assert!((r0.computed_norm - r1.computed_norm).abs() < 1e-12);
        prop_assert!(r1.residual <= 1e-8);
    }

    #[test]
    fn gauge_shift_preserves_scalar_curvature(k in 0.1f64..2.0, x in -1.0f64..1.0, y in -1.0f64..1.0, t in 0.0f64..6.0) {
        let data = ConnectionData::flat_plane(0.8, 0.5).unwrap();
        // dχ for χ = sin(kx)cos(ky)
        let dchi: MapFn<f64> = Arc::new(move |v: &[Jet<f64>]| {
            let (a, b) = (v[0].scale(k), v[1].scale(k));
            vec![(a.cos() * b.cos()).scale(k), -(a.sin() * b.sin()).scale(k)]
        });
        let shifted = data.gauge_shift(dchi);
        let chi = (k * x).sin() * (k * y).cos();
        let s0 = curvature_at(&connection_metric(&data).unwrap(), &[x, y, t]).unwrap().scalar;
        let s1 = curvature_at(&connection_metric(&shifted).unwrap(), &[x, y, (t - chi).rem_euclid(2.0 * PI)]).unwrap().scalar;
        prop_assert!((s0 - s1).abs() <= 1e-9);
        let w0 = data.omega(&[x, y]).unwrap();
        let w1 = shifted.omega(&[x, y]).unwrap();
        for (a, b) in w0.iter().zip(&w1) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn total_space_volume() {
    for eps in [0.3, 1.7] {
        let base = ConnectionData::new(catalog::flat_torus(2), ConnectionData::flat_plane(0.9, eps).unwrap().potential, eps).unwrap();
        let atlas = Atlas::single(connection_metric(&base).unwrap(), true);
        let v = volume(&atlas, &QuadratureGrid::uniform(3, 6)).unwrap();
        assert!((v / (2.0 * PI * eps) - 1.0).abs() <= 1e-8, "{v}");
        let s = ConnectionData::sphere_area_form(1.0, eps).unwrap();
        let atlas = Atlas::single(connection_metric(&s).unwrap(), true);
        let v = volume(&atlas, &QuadratureGrid::new(vec![16, 4, 4], vec![1; 3]).unwrap()).unwrap();
        assert!((v / (8.0 * PI * PI * eps) - 1.0).abs() <= 1e-8, "{v}");
    }
}

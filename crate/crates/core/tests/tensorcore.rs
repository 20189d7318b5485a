use std::f64::consts::{FRAC_PI_4, PI};

use geomcert::jet::Jet;
use geomcert::sampling::interior_points;
use geomcert::tensorcore::catalog::{self, ModelMetric};
use geomcert::tensorcore::*;
use geomcert::{Chart, GeomError};

fn h2s2() -> Chart {
    catalog::product(&catalog::hyperbolic_ball(2), &catalog::sphere_polar(2, 1.0).unwrap())
}

fn s2s2() -> Chart {
    let s = catalog::sphere_polar::<f64>(2, 1.0).unwrap();
    catalog::product(&s, &s)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn metric_jet_examples() {
    let e = catalog::euclidean::<f64>(3);
    let g = e.metric_jet(&[0.1, 0.2, 0.3], 2).unwrap();
    for (k, j) in g.iter().enumerate() {
        assert_eq!(j.value(), if k % 4 == 0 { 1.0 } else { 0.0 });
        assert!(j.coeffs()[1..].iter().all(|&c| c == 0.0));
    }
    let h = catalog::hyperbolic_ball::<f64>(4);
    let g = h.metric_at(&[0.0; 4]).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert!((g[i * 4 + j] - if i == j { 4.0 } else { 0.0 }).abs() < 1e-15);
        }
    }
    let s = catalog::sphere_polar::<f64>(2, 1.0).unwrap();
    let g = s.metric_jet(&[FRAC_PI_4, 0.0], 1).unwrap();
    let oracle = 2.0 * FRAC_PI_4.sin() * FRAC_PI_4.cos();
    assert!((g[3].partial(&[0]) - oracle).abs() < 1e-14);
}

#[test]
fn metric_jet_errors() {
    let h = catalog::hyperbolic_ball::<f64>(2);
    assert!(matches!(h.metric_jet(&[5.0, 0.0], 1), Err(GeomError::OutsideDomain { .. })));
    assert!(matches!(h.metric_jet(&[0.0, 0.0], 5), Err(GeomError::OrderTooHigh { .. })));
}

#[test]
fn hyperbolic_identity_values() {
    let h = catalog::hyperbolic_ball::<f64>(4);
    for x in interior_points(h.domain(), 10, 3, 0.05) {
        let cp = curvature_at(&h, &x).unwrap();
        assert!(close(cp.scalar, -12.0, 1e-10));
        assert!(close(cp.norms.rm2, 24.0, 1e-10));
        assert!(close(cp.norms.ric2, 36.0, 1e-10));
        assert!((-3.0 * cp.norms.rm2 + 8.0 * cp.norms.ric2 - 216.0).abs() < 1e-8);
        assert!(cp.norms.w2.abs() < 1e-9);
    }
}

#[test]
fn sphere_scalar_is_positive() {
    for n in 2..=6 {
        let s = catalog::sphere_polar::<f64>(n, 1.0).unwrap();
        let x: Vec<f64> = (0..n).map(|i| if i + 1 == n { 1.0 } else { 0.9 + 0.1 * i as f64 }).collect();
        let cp = curvature_at(&s, &x).unwrap();
        assert!(close(cp.scalar, (n * (n - 1)) as f64, 1e-11), "n={n}: {}", cp.scalar);
        let st = catalog::sphere_stereographic::<f64>(n, 2.0).unwrap();
        let cp = curvature_at(&st, &vec![0.3; n]).unwrap();
        assert!(close(cp.scalar, (n * (n - 1)) as f64 / 4.0, 1e-11));
    }
}

#[test]
fn riemann_sign_on_unit_sphere() {
    // R_ijkl = g_il g_jk − g_ik g_jl for curvature +1.
    let s = catalog::sphere_stereographic::<f64>(3, 1.0).unwrap();
    let cp = curvature_at(&s, &[0.2, -0.4, 0.1]).unwrap();
    let g = &cp.metric;
    let n = 3;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let want = g[i * n + l] * g[j * n + k] - g[i * n + k] * g[j * n + l];
                    let got = cp.riemann_low[((i * n + j) * n + k) * n + l];
                    assert!((got - want).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn product_s2s2_values() {
    let m = s2s2();
    let cp = curvature_at(&m, &[1.0, 2.0, 0.7, 4.0]).unwrap();
    assert!(close(cp.scalar, 4.0, 1e-12));
    assert!(cp.norms.ring2.abs() < 1e-11);
    assert!(close(cp.norms.w2, 16.0 / 3.0, 1e-11));
    assert!(close(cp.norms.rm2, 8.0, 1e-11));
    let (p, q) = weyl_pm_norms(&m, &cp.point, 1.0).unwrap();
    assert!(close(p, 8.0 / 3.0, 1e-10) && close(q, 8.0 / 3.0, 1e-10));
    let (r1, r2) = decomposition_residuals(&cp);
    assert!(r1 < 1e-9 && r2 < 1e-9);
    assert!(kulkarni_lcf_residual(&m, &cp.point).unwrap() >= 0.1);
}

#[test]
fn weyl_pm_examples_and_orientation() {
    let h = catalog::hyperbolic_ball::<f64>(4);
    let (p, q) = weyl_pm_norms(&h, &[0.1, 0.0, -0.2, 0.05], 1.0).unwrap();
    assert!(p.abs() < 1e-9 && q.abs() < 1e-9);
    let m = h2s2();
    let (p, q) = weyl_pm_norms(&m, &[0.1, 0.2, 1.0, 0.5], 1.0).unwrap();
    assert!(p.abs() < 1e-9 && q.abs() < 1e-9);
    // A non-symmetric metric with W⁺ ≠ W⁻: orientation reversal swaps them.
    let c = ConformalTestMetric::build();
    let x = [0.1, -0.2, 0.3, 0.15];
    let (p, q) = weyl_pm_norms(&c, &x, 1.0).unwrap();
    let (p2, q2) = weyl_pm_norms(&c, &x, -1.0).unwrap();
    assert!((p - q2).abs() < 1e-12 && (q - p2).abs() < 1e-12);
    let w2 = curvature_at(&c, &x).unwrap().norms.w2;
    assert!((p + q - w2).abs() < 1e-9 * (1.0 + w2));
    assert!(weyl_pm_norms(&catalog::euclidean::<f64>(3), &[0.0; 3], 1.0).is_err());
}

/// Generic 4-metric with off-diagonal terms, used where no symmetry is wanted.
struct ConformalTestMetric;

impl ConformalTestMetric {
    fn build() -> Chart {
        use std::sync::Arc;
        let metric: MetricFn<f64> = Arc::new(|x: &[Jet<f64>]| {
            let one = x[0].constant_like(1.0);
            let mut g = vec![x[0].zero_like(); 16];
            for i in 0..4 {
                g[i * 4 + i] = &one + &(&x[i] * &x[(i + 1) % 4]).scale(0.3) + (&x[i] * &x[i]).scale(0.2);
            }
            let a = (&x[0] * &x[2]).sin().scale(0.2);
            let b = (&x[1] + &x[3].square()).scale(0.15);
            g[1] = a.clone();
            g[4] = a;
            g[2 * 4 + 3] = b.clone();
            g[3 * 4 + 2] = b;
            g
        });
        MetricChart::new("test4", Domain::cube(4, -0.5, 0.5), metric)
    }
}

#[test]
fn sectional_examples() {
    let s4 = catalog::sphere_stereographic::<f64>(4, 1.0).unwrap();
    let p = TangentPlane::new(vec![0.3, -0.1, 0.2, 0.0], vec![1.0, 0.5, 0.0, 0.2], vec![0.0, 1.0, -1.0, 0.3]);
    assert!(close(sectional(&s4, &p).unwrap(), 1.0, 1e-11));
    assert!(close(biorthogonal(&s4, &p).unwrap(), 1.0, 1e-11));
    let h = catalog::hyperbolic_ball::<f64>(4);
    let p = TangentPlane::new(vec![0.1, 0.1, 0.0, 0.2], vec![1.0, 0.0, 0.0, 0.0], vec![0.3, 1.0, 2.0, 0.0]);
    assert!(close(sectional(&h, &p).unwrap(), -1.0, 1e-11));
    let m = s2s2();
    let x = vec![1.0, 0.5, 1.2, 2.0];
    let mixed = TangentPlane::new(x.clone(), vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]);
    assert!(sectional(&m, &mixed).unwrap().abs() < 1e-12);
    assert!(biorthogonal(&m, &mixed).unwrap().abs() < 1e-12);
    let factor = TangentPlane::new(x.clone(), vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]);
    assert!(close(biorthogonal(&m, &factor).unwrap(), 1.0, 1e-12));
    let hs = h2s2();
    let factor = TangentPlane::new(vec![0.1, -0.2, 1.0, 3.0], vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]);
    assert!(biorthogonal(&hs, &factor).unwrap().abs() < 1e-11);
    let flat = TangentPlane::new(x, vec![1.0, 0.0, 0.0, 0.0], vec![2.0, 0.0, 0.0, 0.0]);
    assert!(matches!(sectional(&m, &flat), Err(GeomError::DegeneratePlane(_))));
}

#[test]
fn biorthogonal_symmetric_under_complement() {
    let c = ConformalTestMetric::build();
    let x = vec![0.2, 0.1, -0.3, 0.05];
    let cp = curvature_at(&c, &x).unwrap();
    let p = TangentPlane::new(x, vec![1.0, 0.2, 0.0, -0.1], vec![0.1, 0.0, 1.0, 0.3]);
    let q = complement_plane(&cp, &p).unwrap();
    let a = biorthogonal_at(&cp, &p).unwrap();
    let b = biorthogonal_at(&cp, &q).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn kulkarni_examples() {
    let h = catalog::hyperbolic_ball::<f64>(4);
    assert!(kulkarni_lcf_residual(&h, &[0.1, 0.0, 0.2, -0.1]).unwrap() < 1e-9);
    assert!(kulkarni_lcf_residual(&h2s2(), &[0.1, 0.0, 1.2, 0.4]).unwrap() < 1e-9);
    assert!(kulkarni_lcf_residual(&catalog::euclidean::<f64>(3), &[0.0; 3]).is_err());
}

#[test]
fn laplacian_examples() {
    let e = catalog::euclidean::<f64>(3);
    let cst = scalar_fn(|x: &[Jet<f64>]| x[0].constant_like(2.5));
    assert_eq!(scalar_laplacian(&e, &cst, &[0.1, 0.2, 0.3]).unwrap(), 0.0);
    let sq = scalar_fn(|x: &[Jet<f64>]| x[0].square());
    assert!((scalar_laplacian(&e, &sq, &[0.4, 0.0, 1.0]).unwrap() + 2.0).abs() < 1e-14);
    let s2 = catalog::sphere_polar::<f64>(2, 1.0).unwrap();
    let harm = scalar_fn(|x: &[Jet<f64>]| x[0].cos());
    for th in [0.3, 1.0, 2.5] {
        let got = scalar_laplacian(&s2, &harm, &[th, 1.0]).unwrap();
        assert!((got - 2.0 * th.cos()).abs() < 1e-13);
    }
}

#[test]
fn laplacian_sign_at_maximum() {
    // Bump with an interior maximum at the origin: the positive-spectrum Laplacian is ≥ 0 there.
    let e = catalog::euclidean::<f64>(2);
    let bump = scalar_fn(|x: &[Jet<f64>]| (x[0].square() + x[1].square()).scale(-1.0).exp());
    assert!(scalar_laplacian(&e, &bump, &[0.0, 0.0]).unwrap() > 0.0);
    let h = catalog::hyperbolic_ball::<f64>(2);
    assert!(scalar_laplacian(&h, &bump, &[0.0, 0.0]).unwrap() > 0.0);
}

#[test]
fn weighted_scalar_examples() {
    let e = catalog::euclidean::<f64>(3);
    let sq = scalar_fn(|x: &[Jet<f64>]| x[0].square());
    assert!((weighted_scalar(&e, &sq, 1.0, 1.0, &[1.0, 0.0, 0.0]).unwrap() + 6.0).abs() < 1e-13);
    let s4 = catalog::sphere_stereographic::<f64>(4, 1.0).unwrap();
    let zero = scalar_fn(|x: &[Jet<f64>]| x[0].zero_like());
    assert!(close(weighted_scalar(&s4, &zero, 0.7, 0.3, &[0.1, 0.2, 0.3, 0.4]).unwrap(), 12.0, 1e-11));
    let f = scalar_fn(|x: &[Jet<f64>]| (&x[0] * &x[1]).sin());
    let x = [0.2, 0.5, -0.1, 0.3];
    let base = weighted_scalar(&s4, &f, 0.0, 0.0, &x).unwrap();
    let w1 = weighted_scalar(&s4, &f, 1.0, 0.5, &x).unwrap() - base;
    let w2 = weighted_scalar(&s4, &f, 2.0, 0.5, &x).unwrap() - base;
    let w3 = weighted_scalar(&s4, &f, 3.0, 0.5, &x).unwrap() - base;
    assert!((w3 - 2.0 * w2 + w1).abs() < 1e-10);
}

#[test]
fn decomposition_examples() {
    let h = catalog::hyperbolic_ball::<f64>(4);
    let (a, b) = rm_decomposition_residuals(&h, &[0.1, 0.2, 0.0, 0.0]).unwrap();
    assert!(a < 1e-9 && b < 1e-9);
    let t = catalog::flat_torus::<f64>(4);
    assert_eq!(rm_decomposition_residuals(&t, &[0.1, 0.2, 0.3, 0.4]).unwrap(), (0.0, 0.0));
    assert!(rm_decomposition_residuals(&catalog::euclidean::<f64>(2), &[0.0, 0.0]).is_err());
}

#[test]
fn model_metric_catalog_scalars() {
    let names = [
        "euclidean(3)",
        "flat_torus(4)",
        "sphere_polar(4,1)",
        "sphere_polar(3,2)",
        "sphere_stereographic(4,1.5)",
        "hyperbolic_ball(4)",
        "hyperbolic_halfspace(3)",
        "product(hyperbolic_ball(2),sphere_polar(2,1))",
        "product(sphere_polar(2,1),sphere_polar(2,1))",
        "berger(0.5,1.2)",
        "nil3",
    ];
    for name in names {
        let spec: ModelMetric = name.parse().unwrap();
        assert_eq!(spec.to_string().parse::<ModelMetric>().unwrap(), spec);
        let chart = model_metric::<f64>(&spec).unwrap();
        assert_eq!(chart.dim(), spec.dim());
        let pts = interior_points(chart.domain(), 20, 11, 0.1);
        chart.check_invariants(&pts).unwrap();
        for x in &pts {
            let sc = curvature_at(&chart, x).unwrap().scalar;
            assert!(close(sc, spec.scalar_curvature(), 1e-9), "{name} at {x:?}: {sc}");
        }
    }
    assert!("sphere_polar(4,-1)".parse::<ModelMetric>().and_then(|m| m.build::<f64>()).is_err());
    assert!("berger(0,1)".parse::<ModelMetric>().and_then(|m| m.build::<f64>()).is_err());
    assert!("torus(3)".parse::<ModelMetric>().is_err());
}

#[test]
fn chart_independence_sphere() {
    // Polar (θ1, θ2, θ3, φ) and stereographic charts of the unit S⁴ at the same point.
    let polar = catalog::sphere_polar::<f64>(4, 1.0).unwrap();
    let stereo = catalog::sphere_stereographic::<f64>(4, 1.0).unwrap();
    let x = [1.1, 0.8, 2.0, 0.6];
    let y = polar.embed(&x).unwrap();
    // Stereographic from the north pole (last ambient axis).
    let s: Vec<f64> = (0..4).map(|i| y[i] / (1.0 - y[4])).collect();
    assert!((stereo.embed(&s).unwrap().iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)) < 1e-12);
    let a = curvature_at(&polar, &x).unwrap();
    let b = curvature_at(&stereo, &s).unwrap();
    for (u, v) in [
        (a.scalar, b.scalar),
        (a.norms.rm2, b.norms.rm2),
        (a.norms.w2, b.norms.w2),
        (a.norms.ring2, b.norms.ring2),
    ] {
        assert!((u - v).abs() < 1e-8);
    }
}

#[test]
fn homothety_scaling() {
    for chart in [s2s2(), catalog::hyperbolic_ball(4), h2s2()] {
        let x = [0.1, 0.2, 0.4, 0.3];
        let a = curvature_at(&chart, &x).unwrap();
        let k = 2.25;
        let b = curvature_at(&chart.scaled(k), &x).unwrap();
        assert!((b.scalar - a.scalar / k).abs() < 1e-11);
        assert!((b.norms.rm2 - a.norms.rm2 / (k * k)).abs() < 1e-11);
        let ra = kulkarni_lcf_residual(&chart, &x).unwrap() < 1e-8;
        let rb = kulkarni_lcf_residual(&chart.scaled(k), &x).unwrap() < 1e-8;
        assert_eq!(ra, rb);
    }
}

#[test]
fn contracted_bianchi() {
    let c = ConformalTestMetric::build();
    assert!(contracted_bianchi_residual(&c, &[0.1, 0.2, -0.1, 0.3]).unwrap() < 1e-7);
    let n = catalog::nil3::<f64>();
    assert!(contracted_bianchi_residual(&n, &[0.3, 0.2, 0.1]).unwrap() < 1e-7);
}

#[test]
fn jets_match_richardson_differences() {
    let charts: Vec<Chart> = vec![
        catalog::sphere_polar(3, 1.0).unwrap(),
        catalog::hyperbolic_ball(3),
        catalog::nil3(),
        catalog::berger(0.7, 1.3).unwrap(),
        ConformalTestMetric::build(),
    ];
    for chart in charts {
        let n = chart.dim();
        let x: Vec<f64> = (0..n).map(|i| 0.21 + 0.07 * i as f64).collect();
        let jets = chart.metric_jet(&x, 2).unwrap();
        let g = |y: &[f64]| chart.metric_at(y).unwrap();
        for a in 0..n {
            let d = |h: f64| {
                let mut p = x.clone();
                let mut m = x.clone();
                p[a] += h;
                m[a] -= h;
                let (gp, gm) = (g(&p), g(&m));
                gp.iter().zip(&gm).map(|(u, v)| (u - v) / (2.0 * h)).collect::<Vec<_>>()
            };
            let (d1, d2) = (d(1e-3), d(5e-4));
            for k in 0..n * n {
                let rich = (4.0 * d2[k] - d1[k]) / 3.0;
                let exact = jets[k].partial(&[a]);
                assert!((rich - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "{} d{a} g[{k}]", chart.name());
            }
        }
    }
}

#[test]
fn weyl_tracefree_on_generic_metric() {
    let c = ConformalTestMetric::build();
    let cp = curvature_at(&c, &[0.3, -0.1, 0.2, 0.0]).unwrap();
    let n = 4;
    for j in 0..n {
        for k in 0..n {
            let mut t = 0.0;
            for i in 0..n {
                for l in 0..n {
                    t += cp.metric_inv[i * n + l] * cp.weyl_low[((i * n + j) * n + k) * n + l];
                }
            }
            assert!(t.abs() < 1e-9);
        }
    }
    assert!(cp.norms.w2 > 1e-6);
}

#[test]
fn periodic_domain_normalizes() {
    let t = catalog::flat_torus::<f64>(2);
    assert_eq!(t.domain().normalize(&[1.25, -0.5]).unwrap(), vec![0.25, 0.5]);
    let s = catalog::sphere_polar::<f64>(2, 1.0).unwrap();
    let a = curvature_at(&s, &[1.0, 0.3]).unwrap().scalar;
    let b = curvature_at(&s, &[1.0, 0.3 + 2.0 * PI]).unwrap().scalar;
    assert!((a - b).abs() < 1e-12);
}

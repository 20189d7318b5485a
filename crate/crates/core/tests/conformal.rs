use std::f64::consts::PI;
use std::sync::Arc;

use geomcert::conformal::*;
use geomcert::globalint::{Atlas, QuadratureGrid};
use geomcert::jet::Jet;
use geomcert::sampling::interior_points;
use geomcert::tensorcore::catalog::{self, Pole};
use geomcert::tensorcore::*;
use geomcert::{Chart, GeomError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn master_charts() -> Vec<Chart> {
    vec![
        catalog::sphere_polar(4, 1.0).unwrap(),
        catalog::hyperbolic_ball(4),
        catalog::product(&catalog::sphere_polar(2, 1.0).unwrap(), &catalog::sphere_polar(2, 1.0).unwrap()),
        catalog::berger(0.6, 1.5).unwrap(),
        catalog::nil3(),
    ]
}

/// a₀ + Σ aᵢ sin(bᵢxᵢ + cᵢ) + d·x₀x_{n−1}.
fn random_f(rng: &mut ChaCha8Rng, n: usize) -> ScalarFn<f64> {
    let a0 = rng.random_range(-0.5..0.5);
    let terms: Vec<(f64, f64, f64)> =
        (0..n).map(|_| (rng.random_range(-0.4..0.4), rng.random_range(0.5..2.0), rng.random_range(0.0..2.0 * PI))).collect();
    let d = rng.random_range(-0.3..0.3);
    scalar_fn(move |x: &[Jet<f64>]| {
        let mut s = x[0].constant_like(a0);
        for (i, (a, b, c)) in terms.iter().enumerate() {
            s = s + (x[i].scale(*b) + *c).sin().scale(*a);
        }
        s + (&x[0] * &x[n - 1]).scale(d)
    })
}

fn constant(v: f64) -> ScalarFn<f64> {
    scalar_fn(move |x: &[Jet<f64>]| x[0].constant_like(v))
}

fn value(f: &ScalarFn<f64>, x: &[f64]) -> f64 {
    f(&Jet::variables(x, 0).unwrap()).value()
}

#[test]
fn master_property_on_catalog() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for chart in master_charts() {
        let pts = interior_points(chart.domain(), 50, 3, 0.1);
        for x in &pts {
            let f = random_f(&mut rng, chart.dim());
            let r = conformal_formula_residual(&chart, &f, x).unwrap();
            assert!(r <= 1e-8, "{}: residual {r:e} at {x:?}", chart.name());
        }
    }
}

#[test]
fn constant_rescaling_of_the_sphere() {
    let s4 = catalog::sphere_polar(4, 1.0).unwrap();
    let x = [1.0, 0.7, 2.0, 0.4];
    for cst in [-0.7f64, 0.0, 0.3, 1.1] {
        let g: Chart = conformal_scale(&s4, &ConformalFactor::constant(cst, 4)).unwrap();
        let sc = curvature_at(&g, &x).unwrap().scalar;
        assert!((sc - 12.0 * (-2.0 * cst).exp()).abs() < 1e-11 * sc.abs().max(1.0));
    }
}

#[test]
fn unit_power_factor_is_the_identity() {
    for chart in master_charts() {
        let u = ConformalFactor::power(constant(1.0), chart.dim()).unwrap();
        let g = conformal_scale(&chart, &u).unwrap();
        for x in interior_points(chart.domain(), 5, 1, 0.1) {
            assert_eq!(g.metric_at(&x).unwrap(), chart.metric_at(&x).unwrap());
        }
    }
}

#[test]
fn poincare_ball_from_euclidean() {
    for n in [3usize, 4] {
        let f = scalar_fn(|x: &[Jet<f64>]| {
            let mut s = x[0].zero_like();
            for v in x {
                s += &v.square();
            }
            (s.rsub(1.0).recip() * 2.0).ln()
        });
        let g = exp_scale(&catalog::euclidean(n), &f);
        let ball = catalog::hyperbolic_ball::<f64>(n);
        for x in interior_points(ball.domain(), 10, 2, 0.05) {
            let sc = curvature_at(&g, &x).unwrap().scalar;
            let want = -((n * (n - 1)) as f64);
            assert!((sc - want).abs() < 1e-9 * want.abs());
            let (a, b) = (g.metric_at(&x).unwrap(), ball.metric_at(&x).unwrap());
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-12 * q.abs().max(1.0));
            }
        }
    }
}

#[test]
fn factor_validation() {
    let e3 = catalog::euclidean::<f64>(3);
    let u = ConformalFactor::power(scalar_fn(|x: &[Jet<f64>]| x[0].clone()), 3).unwrap();
    assert!(matches!(conformal_scale(&e3, &u), Err(GeomError::NonPositiveFactor { .. })));
    let f = ConformalFactor::constant(0.1, 4);
    assert!(matches!(conformal_scale(&e3, &f), Err(GeomError::DimensionMismatch { .. })));
    assert!(ConformalFactor::power(constant(1.0), 2).is_err());
}

#[test]
fn weyl_covariance() {
    let charts = [
        catalog::sphere_polar(4, 1.0).unwrap(),
        catalog::hyperbolic_ball(4),
        catalog::product(&catalog::sphere_polar(2, 1.0).unwrap(), &catalog::sphere_polar(2, 1.0).unwrap()),
        catalog::product(&catalog::hyperbolic_ball(2), &catalog::sphere_polar(2, 1.0).unwrap()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for chart in &charts {
        for x in interior_points(chart.domain(), 6, 9, 0.1) {
            let f = random_f(&mut rng, 4);
            let scaled = exp_scale(chart, &f);
            let w = curvature_at(chart, &x).unwrap().norms.w2;
            let w2 = curvature_at(&scaled, &x).unwrap().norms.w2;
            let want = (-4.0 * value(&f, &x)).exp() * w;
            assert!((w2 - want).abs() < 1e-8 * (1.0 + want.abs()), "{}: {w2} vs {want}", chart.name());
            let lcf = kulkarni_lcf_residual(chart, &x).unwrap() < 1e-8;
            let lcf2 = kulkarni_lcf_residual(&scaled, &x).unwrap() < 1e-8;
            assert_eq!(lcf, lcf2, "{}", chart.name());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn power_and_exponential_round_trip(seed in 0u64..10_000, n in 3usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_f(&mut rng, n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e = ConformalFactor::exponential(f.clone(), n);
        let back = e.to_power().unwrap().to_exponential().unwrap();
        let (a, b) = (e.value_at(&x).unwrap(), back.value_at(&x).unwrap());
        prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        let u = e.to_power().unwrap().value_at(&x).unwrap();
        prop_assert!((u - (0.5 * (n as f64 - 2.0) * a).exp()).abs() < 1e-12 * u);
    }

    #[test]
    fn yamabe_residual_vanishes_on_direct_scalar(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let charts = master_charts();
        let chart = &charts[(seed % 5) as usize];
        let n = chart.dim();
        let f = random_f(&mut rng, n);
        let u = ConformalFactor::exponential(f, n).to_power().unwrap();
        let g = conformal_scale(chart, &u).unwrap();
        let x = interior_points(chart.domain(), 1, seed, 0.1).remove(0);
        let sc = curvature_at(&g, &x).unwrap().scalar;
        let r = yamabe_residual(chart, &u, &constant(sc), &x).unwrap();
        let scale = sc.abs().max(1.0) * u.value_at(&x).unwrap().powf((n as f64 + 2.0) / (n as f64 - 2.0));
        prop_assert!(r.abs() <= 1e-8 * scale.max(1.0), "{} {r:e}", chart.name());
    }
}

#[test]
fn yamabe_trivial_cases() {
    let one = ConformalFactor::power(constant(1.0), 4).unwrap();
    let s4 = catalog::sphere_polar(4, 1.0).unwrap();
    let x = [0.8, 1.9, 1.2, 5.0];
    assert!(yamabe_residual(&s4, &one, &constant(12.0), &x).unwrap().abs() < 1e-12);
    let nil = catalog::nil3::<f64>();
    let one3 = ConformalFactor::power(constant(1.0), 3).unwrap();
    let y = [0.4, 0.3, 0.9];
    let sc = curvature_at(&nil, &y).unwrap().scalar;
    assert!(yamabe_residual(&nil, &one3, &constant(sc), &y).unwrap().abs() < 1e-12);
    let s2 = catalog::sphere_polar(2, 1.0).unwrap();
    let u2 = ConformalFactor::exponential(constant(0.0), 2);
    assert!(yamabe_residual(&s2, &u2, &constant(2.0), &[1.0, 1.0]).is_err());
}

#[test]
fn yamabe_bubble_on_the_round_sphere() {
    // dilation x ↦ λx of the stereographic chart pulls the round metric back to v²g
    let chart = catalog::sphere_stereographic::<f64>(4, 1.0).unwrap();
    for lam in [0.5, 1.7, 3.0] {
        let v = scalar_fn(move |x: &[Jet<f64>]| {
            let mut s = x[0].zero_like();
            for t in x {
                s += &t.square();
            }
            (&s + 1.0) * (s.scale(lam * lam) + 1.0).recip() * lam
        });
        let u = ConformalFactor::power(v, 4).unwrap();
        for x in interior_points(&geomcert::tensorcore::Domain::cube(4, -2.0, 2.0), 20, 4, 0.0) {
            let r = yamabe_residual(&chart, &u, &constant(12.0), &x).unwrap();
            assert!(r.abs() <= 1e-7, "λ={lam}: {r:e}");
        }
    }
}

#[test]
fn inequality_on_nil3() {
    let nil = catalog::nil3::<f64>();
    let x = [0.5, 0.2, 0.7];
    let zero = inequality1_check(&nil, &constant(0.0), 0.5, &x).unwrap();
    assert!(zero.slack.abs() < 1e-14 && zero.direct_margin.abs() < 1e-12);
    let up = inequality1_check(&nil, &constant(0.1), 0.5, &x).unwrap();
    assert!((up.slack - (0.2f64.exp() - 1.0) / 8.0).abs() < 1e-14);
    assert!((up.direct_margin - (0.5 - 0.5 * (-0.2f64).exp())).abs() < 1e-12);
    assert!(up.direct_margin > 0.0 && up.equivalence < 1e-8);
    let down = inequality1_check(&nil, &constant(-0.1), 0.5, &x).unwrap();
    assert!(down.slack < 0.0 && down.direct_margin < 0.0 && down.equivalence < 1e-8);
}

#[test]
fn inequality_sign_matches_direct_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let charts = [(catalog::nil3::<f64>(), 0.5), (catalog::hyperbolic_ball(4), 12.0)];
    for (chart, r) in &charts {
        for x in interior_points(chart.domain(), 20, 7, 0.1) {
            let f = random_f(&mut rng, chart.dim());
            let q = inequality1_check(chart, &f, *r, &x).unwrap();
            assert!(q.equivalence < 1e-8 * (1.0 + q.direct_margin.abs()));
            if q.slack.abs() > 1e-9 {
                assert_eq!(q.slack > 0.0, q.direct_margin > 0.0);
            }
        }
    }
    let s4 = catalog::sphere_polar(4, 1.0).unwrap();
    assert!(matches!(inequality1_check(&s4, &constant(0.0), 12.0, &[1.0; 4]), Err(GeomError::Precondition(_))));
    assert!(inequality1_check(&catalog::nil3(), &constant(0.0), -0.5, &[0.5; 3]).is_err());
}

/// Embedding of the unit polar sphere, written out independently.
fn polar_embed(x: &[f64]) -> Vec<f64> {
    let m = x.len();
    let mut out = Vec::new();
    let mut p = 1.0;
    for t in &x[..m - 1] {
        out.push(p * t.cos());
        p *= t.sin();
    }
    out.push(p * x[m - 1].cos());
    out.push(p * x[m - 1].sin());
    out
}

#[test]
fn stereographic_examples() {
    for m in [2usize, 3, 4] {
        let sigma = stereographic_map::<f64>(m, 1.0, Pole::North).unwrap();
        let mut x = vec![0.9; m];
        x[m - 1] = 0.0;
        let p = sigma.apply(&x).unwrap();
        assert!((p.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((sigma.factor_at(&x).unwrap() - 1.0).abs() < 1e-14);
        let mut near = vec![PI / 2.0; m];
        near[m - 1] = PI / 2.0 - 1e-3;
        let y = polar_embed(&near);
        let want: Vec<f64> = y[..m].iter().map(|v| v / (1.0 - y[m])).collect();
        let r2: f64 = want.iter().map(|v| v * v).sum();
        let got = sigma.apply(&near).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9 * r2.sqrt());
        }
        assert!(r2 > 1e6);
        let lam = sigma.factor_at(&near).unwrap();
        assert!((lam - (1.0 + r2) / 2.0).abs() < 1e-9 * lam);
        assert!((lam / (r2 / 2.0) - 1.0).abs() < 1e-5);
    }
}

#[test]
fn stereographic_pullback() {
    for (m, radius) in [(2usize, 1.0), (4, 1.0), (4, 2.5), (5, 0.7)] {
        for pole in [Pole::North, Pole::South] {
            let sigma = stereographic_map::<f64>(m, radius, pole).unwrap();
            let pts = interior_points(sigma.source.domain(), 100, 13, 0.05);
            let r = sigma.max_pullback_residual(&pts).unwrap();
            assert!(r <= 1e-10, "m={m} R={radius} {pole:?}: {r:e}");
        }
    }
    let sigma = stereographic_map::<f64>(3, 1.0, Pole::North).unwrap();
    assert!(matches!(sigma.apply(&[PI / 2.0, PI / 2.0, PI / 2.0]), Err(GeomError::RemovedSet(_))));
    let south = stereographic_map::<f64>(3, 1.0, Pole::South).unwrap();
    assert!(south.apply(&[PI / 2.0, PI / 2.0, PI / 2.0]).is_ok());
}

#[test]
fn sphere_minus_circle_to_h2_times_s2() {
    let f = sphere_minus_subsphere::<f64>(4, 1).unwrap();
    let pts = interior_points(f.source.domain(), 1000, 17, 0.02);
    assert!(f.max_pullback_residual(&pts).unwrap() <= 1e-9);
    for x in pts.iter().take(200) {
        let y = polar_embed(x);
        let p: Vec<f64> = y[..4].iter().map(|v| v / (1.0 - y[4])).collect();
        let r2: f64 = p.iter().map(|v| v * v).sum();
        let rho = p[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let lam = f.factor_at(x).unwrap();
        let want = (1.0 + r2) / (2.0 * rho);
        assert!((lam * lam - want * want).abs() <= 1e-10 * want * want);
        let img = f.apply(x).unwrap();
        assert!((img[0] - p[0]).abs() < 1e-10 * (1.0 + p[0].abs()));
        assert!((img[1] - rho).abs() < 1e-10 * (1.0 + rho));
    }
}

#[test]
fn factor_composes_stereographic_and_rho_rescaling() {
    for (m, k) in [(4usize, 1usize), (3, 1), (6, 2), (5, 2)] {
        let f = sphere_minus_subsphere::<f64>(m, k).unwrap();
        let sigma = stereographic_map::<f64>(m, 1.0, Pole::North).unwrap();
        for x in interior_points(f.source.domain(), 50, 23, 0.05) {
            let p = sigma.apply(&x).unwrap();
            let rho = p[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
            let want = sigma.factor_at(&x).unwrap() / rho;
            assert!((f.factor_at(&x).unwrap() - want).abs() <= 1e-10 * want);
        }
    }
}

#[test]
fn even_dimensional_family() {
    for n in [2usize, 3] {
        let f = sphere_minus_subsphere::<f64>(2 * n, n - 1).unwrap();
        let pts = interior_points(f.source.domain(), 100, 29, 0.05);
        let r = f.max_pullback_residual(&pts).unwrap();
        assert!(r <= 1e-9, "m={}: {r:e}", 2 * n);
    }
}

#[test]
fn removed_subsphere_is_rejected() {
    let f = sphere_minus_subsphere::<f64>(4, 1).unwrap();
    let h = PI / 2.0;
    for x in [[0.7, h, h, h], [2.1, h, h, h], [0.7, h + 1e-10, h, h - 1e-10]] {
        assert!(matches!(f.apply(&x), Err(GeomError::RemovedSet(_))), "{x:?}");
        assert!(f.pullback_residual(&x).is_err());
    }
    assert!(f.apply(&[0.7, h + 1e-3, h, h]).is_ok());
    assert!(sphere_minus_subsphere::<f64>(4, 3).is_err());
    assert!(sphere_minus_subsphere::<f64>(2, 1).is_err());
    assert!(sphere_minus_subsphere::<f64>(4, 0).is_err());
}

#[test]
fn liouville_examples() {
    let inv = ConformalMap::<f64>::inversion(4);
    for x in interior_points(inv.source.domain(), 30, 31, 0.02) {
        if x.iter().map(|v| v * v).sum::<f64>() < 0.01 {
            continue;
        }
        assert!(inv.pullback_residual(&x).unwrap() < 1e-12);
        assert!(liouville_phi_residual(&inv, &x).unwrap() <= 1e-8);
    }
    assert!(matches!(inv.apply(&[0.0; 4]), Err(GeomError::RemovedSet(_))));
    let dilation = ConformalMap {
        name: "dilation".into(),
        source: catalog::euclidean::<f64>(4),
        target: catalog::euclidean(4),
        map: Arc::new(|x: &[Jet<f64>]| x.iter().map(|v| v.scale(2.0)).collect()),
        factor: constant(2.0),
        guard: None,
    };
    let x = [0.3, -0.2, 0.5, 0.1];
    assert!(dilation.pullback_residual(&x).unwrap() < 1e-15);
    assert!(liouville_phi_residual(&dilation, &x).unwrap() < 1e-14);
    let h2s2 = catalog::product(&catalog::hyperbolic_ball(2), &catalog::sphere_polar(2, 1.0).unwrap());
    let id = ConformalMap::identity(h2s2);
    assert!(liouville_phi_residual(&id, &[0.1, -0.2, 1.0, 2.0]).unwrap() < 1e-14);
    let s4 = ConformalMap::identity(catalog::sphere_polar(4, 1.0).unwrap());
    assert!(matches!(liouville_phi_residual(&s4, &[1.0; 4]), Err(GeomError::Precondition(_))));
}

#[test]
fn integration_identity_on_torus() {
    let t3 = Atlas::<f64>::flat_torus(3);
    let grid = QuadratureGrid::uniform(3, 8);
    let (l, r) = integration_identity_check(&t3, &constant(2.5), &grid).unwrap();
    assert!(l.abs() < 1e-14 && r.abs() < 1e-14);
    let u = scalar_fn(|x: &[Jet<f64>]| x[0].scale(2.0 * PI).sin());
    let (l, r) = integration_identity_check(&t3, &u, &grid).unwrap();
    let want = 2.0 * PI * PI;
    assert!((l - want).abs() < 1e-8 * want && (r - want).abs() < 1e-8 * want, "{l} {r}");
    let open = Atlas::single(catalog::euclidean::<f64>(3), false);
    assert!(matches!(integration_identity_check(&open, &u, &grid), Err(GeomError::NotClosed)));
}

#[test]
fn integration_identity_on_s4() {
    // first harmonic: Δu = 4u and ∫u² = Vol/5
    let atlas = Atlas::<f64>::cubed_sphere(4, 1.0).unwrap();
    let u = scalar_fn(|y: &[Jet<f64>]| y[4].clone());
    let (l, r) = integration_identity_check(&atlas, &u, &QuadratureGrid::uniform(4, 8)).unwrap();
    let want = 4.0 * (8.0 * PI * PI / 3.0) / 5.0;
    assert!((l - want).abs() < 5e-5 * want, "{l} vs {want}");
    assert!((r - want).abs() < 5e-5 * want, "{r} vs {want}");
    assert!((l - r).abs() < 5e-5 * want);
}

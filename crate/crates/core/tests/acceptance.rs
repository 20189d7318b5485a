//! Acceptance criteria at full tolerance. Each criterion prints one
//! PASS/FAIL line; the test fails if any criterion fails.

use std::f64::consts::PI;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use geomcert::conformal;
use geomcert::fibration::{self, ConnectionData};
use geomcert::geodesy::{self, PolarOptions};
use geomcert::globalint::{self, Atlas, DescentOptions, QuadratureGrid};
use geomcert::jet::Jet;
use geomcert::kleinian::{self, ExponentMethod, GroupSpec};
use geomcert::sampling::interior_points;
use geomcert::tensorcore::catalog::{self, ModelMetric};
use geomcert::tensorcore::*;
use geomcert::{Chart, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn model(name: &str) -> Chart {
    name.parse::<ModelMetric>().unwrap().build().unwrap()
}

fn ix(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

fn c1_gbc4_sphere() -> Result<Outcome> {
    let atlas = Atlas::<f64>::stereographic_pair(4, 1.0)?;
    let b = globalint::gbc4(&atlas, &QuadratureGrid::default_for(4))?;
    let want = 64.0 * PI * PI;
    let vol = 8.0 * PI * PI / 3.0;
    let (e, ev) = ((b.total - want).abs() / want, (b.volume - vol).abs() / vol);
    outcome(e <= 1e-5, format!("total {:.10} vs 64π², rel {e:.2e}; volume rel {ev:.2e}", b.total))
}

fn c2_gbc4_product() -> Result<Outcome> {
    let s2 = Atlas::<f64>::polar_sphere(2, 1.0)?;
    let b = globalint::gbc4(&Atlas::product(&s2, &s2)?, &QuadratureGrid::uniform(4, 8))?;
    let w = b.weyl_term / b.volume;
    let chi = b.chi_estimate.round();
    // Vol(S²×S²) = 16π²
    let vol_ok = (b.volume - 16.0 * PI * PI).abs() < 1e-6;
    outcome(
        chi == 4.0 && (w - 16.0 / 3.0).abs() <= 1e-4 && vol_ok,
        format!("χ {:.8}, weyl/vol {w:.10}", b.chi_estimate),
    )
}

fn c3_gbc6_sphere() -> Result<Outcome> {
    let atlas = Atlas::<f64>::cubed_sphere(6, 1.0)?;
    let b = globalint::gbc6(&atlas, &QuadratureGrid::default_for(6))?;
    let want = 128.0 * PI.powi(3);
    let vol = 16.0 * PI.powi(3) / 15.0;
    let e = (b.total - want).abs() / want;
    outcome(e <= 1e-4, format!("total {:.8} vs 128π³, rel {e:.2e}; volume rel {:.2e}", b.total, (b.volume - vol).abs() / vol))
}

fn c4_hyperbolic_identity() -> Result<Outcome> {
    let h4 = catalog::hyperbolic_ball::<f64>(4);
    let mut worst = 0.0f64;
    for x in interior_points(h4.domain(), 100, 4, 0.02) {
        let nm = curvature_at(&h4, &x)?.norms;
        worst = worst.max((-3.0 * nm.rm2 + 8.0 * nm.ric2 - 216.0).abs());
    }
    outcome(worst <= 1e-8, format!("max |−3|Rm|²+8|Ric|² − 216| = {worst:.2e} over 100 points"))
}

/// e^{2f} g built directly from the metric closure.
fn rescaled(chart: &Chart, f: ScalarFn<f64>) -> Chart {
    let g = chart.metric_fn().clone();
    let metric: MetricFn<f64> = Arc::new(move |x: &[Jet<f64>]| {
        let e = f(x).scale(2.0).exp();
        g(x).into_iter().map(|v| v * &e).collect()
    });
    MetricChart::new("rescaled", chart.domain().clone(), metric)
}

fn c5_conformal_law() -> Result<Outcome> {
    let names = ["sphere_polar(4,1)", "hyperbolic_ball(4)", "product(sphere_polar(2,1),sphere_polar(2,1))", "berger(0.6,1.5)", "nil3"];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for name in names {
        let chart = model(name);
        let n = chart.dim();
        for x in interior_points(chart.domain(), 50, 55, 0.1) {
            let a0: f64 = rng.random_range(-0.5..0.5);
            let terms: Vec<(f64, f64, f64)> =
                (0..n).map(|_| (rng.random_range(-0.4..0.4), rng.random_range(0.5..2.0), rng.random_range(0.0..6.0))).collect();
            let d: f64 = rng.random_range(-0.3..0.3);
            let f: ScalarFn<f64> = Arc::new(move |y: &[Jet<f64>]| {
                let mut s = y[0].constant_like(a0);
                for (i, (a, b, c)) in terms.iter().enumerate() {
                    s = s + (y[i].scale(*b) + *c).sin().scale(*a);
                }
                s + (&y[0] * &y[n - 1]).scale(d)
            });
            let direct = curvature_at(&rescaled(&chart, f.clone()), &x)?.scalar;
            let cp = curvature_at(&chart, &x)?;
            let fj = f(&Jet::variables(&x, 2)?);
            let gi = &cp.metric_inv;
            let (mut lap, mut grad2) = (0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let mut hess = fj.partial(&[i, j]);
                    for k in 0..n {
                        hess -= cp.christoffel[(k * n + i) * n + j] * fj.partial(&[k]);
                    }
                    lap -= gi[i * n + j] * hess;
                    grad2 += gi[i * n + j] * fj.partial(&[i]) * fj.partial(&[j]);
                }
            }
            let nf = n as f64;
            let formula = (-2.0 * fj.value()).exp() * (cp.scalar + 2.0 * (nf - 1.0) * lap - (nf - 2.0) * (nf - 1.0) * grad2);
            worst = worst.max((direct - formula).abs() / direct.abs().max(1.0));
        }
    }
    outcome(worst <= 1e-8, format!("max residual {worst:.2e} over 5 metrics × 50 functions"))
}

fn hyperbolic_bundle(lambda: f64, eps: f64) -> Result<ConnectionData<f64>> {
    let pot: MapFn<f64> = Arc::new(move |x: &[Jet<f64>]| {
        let s = (x[0].square() + x[1].square()).rsub(1.0).recip().scale(2.0 * lambda);
        vec![-(&x[1] * &s), &x[0] * &s]
    });
    ConnectionData::new(catalog::hyperbolic_ball(2), pot, eps)
}

fn c6_oneill() -> Result<Outcome> {
    let lambda = 1.1;
    let eps = [0.1, 0.2, 0.4];
    let bases: [(&str, fn(f64, f64) -> Result<ConnectionData<f64>>); 3] =
        [("plane", ConnectionData::flat_plane), ("sphere", ConnectionData::sphere_area_form), ("hyperbolic", hyperbolic_bundle)];
    let (mut res, mut slope_err) = (0.0f64, 0.0f64);
    for (_, make) in bases {
        for &e in &eps {
            let data = make(lambda, e)?;
            let d = data.base.domain().clone();
            let d = if d.upper[0] > 100.0 { Domain::cube(2, -2.0, 2.0) } else { d };
            for x in interior_points(&d, 8, 6, 0.1) {
                res = res.max(fibration::oneill_residual(&data, &[x[0], x[1], 1.0])?);
                if e == eps[0] {
                    let (s, _) = fibration::epsilon_slope(&data.base, &data.potential, &eps, &[x[0], x[1], 0.0])?;
                    // ω = λ·dA has ‖ω‖² = 2λ²
                    slope_err = slope_err.max((s + 2.0 * lambda * lambda / 4.0).abs());
                }
            }
        }
    }
    outcome(res <= 1e-8 && slope_err <= 1e-6, format!("max residual {res:.2e}, max slope error {slope_err:.2e}"))
}

fn c7_subsphere() -> Result<Outcome> {
    let f = conformal::sphere_minus_subsphere::<f64>(4, 1)?;
    let pts = interior_points(f.source.domain(), 1000, 7, 0.02);
    let res = f.max_pullback_residual(&pts)?;
    let mut factor = 0.0f64;
    for x in &pts {
        // stereographic image of the embedded point
        let y = f.source.embed(x).unwrap();
        let p: Vec<f64> = y[..4].iter().map(|v| v / (1.0 - y[4])).collect();
        let r2: f64 = p.iter().map(|v| v * v).sum();
        let rho = p[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let want = ((1.0 + r2) / (2.0 * rho)).powi(2);
        factor = factor.max((f.factor_at(x)?.powi(2) - want).abs() / want);
    }
    outcome(res <= 1e-9 && factor <= 1e-10, format!("pullback residual {res:.2e}, factor error {factor:.2e}"))
}

fn c8_gray() -> Result<Outcome> {
    let radii = [0.05, 0.1, 0.2];
    let opts = PolarOptions { radial_nodes: 10, angle_nodes: 4, ..PolarOptions::default() };
    let area = 2.0 * PI * PI;
    // 2/3 − cos r + cos³r/3 and cosh³r/3 − cosh r + 2/3 without cancellation
    let s4 = |r: f64| area * 4.0 * (r / 2.0).sin().powi(4) * (2.0 + r.cos()) / 3.0;
    let h4 = |r: f64| area * 4.0 * (r / 2.0).sinh().powi(4) * (2.0 + r.cosh()) / 3.0;
    let cases: [(&str, Chart, Vec<f64>, &dyn Fn(f64) -> f64); 2] = [
        ("S4", catalog::sphere_polar(4, 1.0)?, vec![PI / 2.0, PI / 2.0, PI / 2.0, PI], &s4),
        ("H4", catalog::hyperbolic_ball(4), vec![0.0; 4], &h4),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (tag, chart, x, exact) in cases {
        let (mut exact_ratio, mut ball_ratio) = (Vec::new(), Vec::new());
        let mut oracle = 0.0f64;
        for row in geodesy::expansion_compare(&chart, &x, &radii, opts)? {
            // remainders relative to the euclidean ball volume π²r⁴/2
            let scale = PI * PI / 2.0 * row.r.powi(4) * row.r.powi(6);
            oracle = oracle.max((row.ball_volume / exact(row.r) - 1.0).abs());
            exact_ratio.push((exact(row.r) - row.gray).abs() / scale);
            ball_ratio.push((row.ball_volume - row.gray).abs() / scale);
        }
        let spread = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
        let (se, sb) = (spread(&exact_ratio), spread(&ball_ratio));
        pass &= se <= 2.0 && sb <= 2.0 && oracle <= 1e-8;
        detail.push(format!("{tag} remainder/(Vol_E r⁶) spread {sb:.4} (oracle {se:.4}), ball vs oracle {oracle:.1e}"));
    }
    outcome(pass, detail.join("; "))
}

fn c9_sobolev() -> Result<Outcome> {
    let atlas = Atlas::<f64>::cubed_sphere(4, 1.0)?;
    let grid = QuadratureGrid::uniform(4, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut min = f64::INFINITY;
    for _ in 0..100 {
        let terms: Vec<(usize, usize, f64)> =
            (0..3).map(|_| (rng.random_range(0..5), rng.random_range(0..5), rng.random_range(-0.3..0.3))).collect();
        let u: ScalarFn<f64> = Arc::new(move |y: &[Jet<f64>]| {
            let mut s = y[0].constant_like(2.0);
            for &(i, j, c) in &terms {
                s = s + (&y[i] * &y[j]).scale(c) + y[i].scale(2.0).sin().scale(0.5 * c);
            }
            s
        });
        min = min.min(globalint::sobolev_check(&atlas, &u, &grid)?.slack);
    }
    let one: ScalarFn<f64> = Arc::new(|y: &[Jet<f64>]| y[0].constant_like(1.0));
    let c = globalint::sobolev_check(&atlas, &one, &grid)?.slack;
    // the inequality holds for every sample; equality only for the constant
    let (holds, strict) = (min >= -1e-9, min > 1e-8);
    outcome(holds && strict && c.abs() <= 1e-8, format!("min slack {min:.3e} over 100 polynomials, constant {c:.1e}"))
}

fn c10_descent() -> Result<Outcome> {
    let atlas = Atlas::<f64>::cubed_sphere(4, 1.0)?;
    let basis: Vec<ScalarFn<f64>> =
        (0..=6).map(|k| Arc::new(move |y: &[Jet<f64>]| y[4].powi(k)) as ScalarFn<f64>).collect();
    let u0: ScalarFn<f64> = Arc::new(|y: &[Jet<f64>]| y[4].scale(0.3) + 1.0);
    let opts = DescentOptions { max_iters: 500, ..DescentOptions::default() };
    let t = globalint::yamabe_descent(&atlas, &QuadratureGrid::uniform(4, 10), &u0, &basis, &opts)?;
    let last = t.last();
    let target = 12.0 * (8.0 * PI * PI / 3.0f64).sqrt();
    let q = (last.quotient / target - 1.0).abs();
    outcome(
        last.scalar_variance <= 1e-4 && q <= 5e-3,
        format!("variance {:.2e}, quotient {:.8} vs 12√(8π²/3) rel {q:.1e}, {} steps", last.scalar_variance, last.quotient, t.steps.len()),
    )
}

fn schottky() -> Result<GroupSpec<f64>> {
    let t1 = kleinian::make_translation(3.0, &[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0])?;
    let t2 = kleinian::make_translation(3.0, &[0.0, 1.0, 0.0], &[0.0, -1.0, 0.0])?;
    GroupSpec::new(vec![t1, t2], true, 10)
}

fn c11_patterson_sullivan() -> Result<Outcome> {
    let spec = schottky()?;
    let g = kleinian::critical_exponent_estimate(&spec, ExponentMethod::GrowthFit)?.delta;
    let k = kleinian::critical_exponent_estimate(&spec, ExponentMethod::SeriesKnee)?.delta;
    let ls = kleinian::limit_set_sample(&spec, 14, 10_000, 1)?;
    let bd = kleinian::box_dimension(&ls.points, &kleinian::scale_ladder(0.3, 0.5, 24))?;
    let b = bd.dimension;
    let worst = (g - k).abs().max((g - b).abs()).max((k - b).abs());
    outcome(
        !bd.elementary && worst <= 0.05,
        format!("growth {g:.4}, knee {k:.4}, box {b:.4}; max pairwise gap {worst:.4}"),
    )
}

fn c12_cyclic() -> Result<Outcome> {
    let t = kleinian::make_translation::<f64>(1.0, &[0.6, 0.8, 0.0], &[-0.6, -0.8, 0.0])?;
    let spec = GroupSpec::new(vec![t], true, 300)?;
    let g = kleinian::critical_exponent_estimate(&spec, ExponentMethod::GrowthFit)?.delta;
    let k = kleinian::critical_exponent_estimate(&spec, ExponentMethod::SeriesKnee)?.delta;
    let d = g.max(k);
    let ls = kleinian::limit_set_sample(&spec, 12, 2000, 5)?;
    let clusters = kleinian::cluster_count(&ls.points, kleinian::CLUSTER_RADIUS);
    // the two fixed points ±(0.6, 0.8, 0) on the boundary sphere
    let near = ls.points.iter().all(|p| {
        let d = |s: f64| ((p[0] - 0.6 * s).powi(2) + (p[1] - 0.8 * s).powi(2) + p[2].powi(2)).sqrt();
        d(1.0).min(d(-1.0)) < 1e-6
    });
    outcome(d <= 0.05 && clusters == 2 && near, format!("δ̂ growth {g:.4}, knee {k:.4}, {clusters} clusters, all at the fixed points: {near}"))
}

/// Largest violation of the algebraic curvature identities, relative to the tensor scale.
fn algebraic_residual(cp: &CurvaturePoint<f64>) -> f64 {
    let n = cp.dim;
    let r = &cp.riemann_low;
    let gi = &cp.metric_inv;
    let scale = 1.0 + r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = r[ix(n, i, j, k, l)];
                    worst = worst
                        .max((v + r[ix(n, j, i, k, l)]).abs())
                        .max((v + r[ix(n, i, j, l, k)]).abs())
                        .max((v - r[ix(n, k, l, i, j)]).abs())
                        .max((v + r[ix(n, i, k, l, j)] + r[ix(n, i, l, j, k)]).abs());
                }
            }
        }
    }
    let tr = |t: &[f64]| (0..n).map(|i| (0..n).map(|j| gi[i * n + j] * t[i * n + j]).sum::<f64>()).sum::<f64>();
    let nm = cp.norms;
    worst = worst
        .max((tr(&cp.ricci) - cp.scalar).abs())
        .max(tr(&cp.traceless_ricci).abs())
        .max((nm.ring2 - (nm.ric2 - cp.scalar * cp.scalar / n as f64)).abs());
    for a in 0..n {
        for b in 0..n {
            let t: f64 = (0..n).map(|s| (0..n).map(|u| gi[s * n + u] * cp.weyl_low[ix(n, s, a, u, b)]).sum::<f64>()).sum();
            worst = worst.max(t.abs());
        }
    }
    if n >= 3 {
        let (r1, r2) = decomposition_residuals(cp);
        worst = worst.max(r1.max(r2) / (1.0 + nm.rm2) * scale);
    }
    worst / scale
}

fn c13_tensor_properties() -> Result<Outcome> {
    let names = [
        "sphere_polar(4,1)",
        "sphere_stereographic(3,1.3)",
        "hyperbolic_ball(4)",
        "hyperbolic_halfspace(4)",
        "product(hyperbolic_ball(2),sphere_polar(2,1))",
        "product(sphere_polar(2,1),sphere_polar(2,1))",
        "berger(0.6,1.5)",
        "nil3",
        "flat_torus(3)",
    ];
    let (mut alg, mut bianchi, mut hom) = (0.0f64, 0.0f64, 0.0f64);
    for name in names {
        let chart = model(name);
        let scaled = chart.scaled(2.25);
        for x in interior_points(chart.domain(), 20, 13, 0.1) {
            let cp = curvature_at(&chart, &x)?;
            alg = alg.max(algebraic_residual(&cp));
            bianchi = bianchi.max(contracted_bianchi_residual(&chart, &x)?);
            let sp = curvature_at(&scaled, &x)?;
            hom = hom.max((sp.scalar * 2.25 - cp.scalar).abs()).max((sp.norms.rm2 * 2.25 * 2.25 - cp.norms.rm2).abs());
        }
    }
    // polar and stereographic charts of S⁴ agree at the same sphere point
    let polar = catalog::sphere_polar::<f64>(4, 1.0)?;
    let stereo = catalog::sphere_stereographic::<f64>(4, 1.0)?;
    let mut chart_gap = 0.0f64;
    for x in interior_points(polar.domain(), 20, 14, 0.1) {
        let y = polar.embed(&x).unwrap();
        if y[4] > 0.9 {
            continue;
        }
        let s: Vec<f64> = (0..4).map(|i| y[i] / (1.0 - y[4])).collect();
        let (a, b) = (curvature_at(&polar, &x)?, curvature_at(&stereo, &s)?);
        chart_gap = chart_gap
            .max((a.scalar - b.scalar).abs())
            .max((a.norms.rm2 - b.norms.rm2).abs())
            .max((a.norms.w2 - b.norms.w2).abs());
    }
    outcome(
        alg <= 1e-9 && bianchi <= 1e-7 && hom <= 1e-10 && chart_gap <= 1e-8,
        format!("algebraic {alg:.1e}, bianchi {bianchi:.1e}, homothety {hom:.1e}, charts {chart_gap:.1e}"),
    )
}

#[test]
fn acceptance() {
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let criteria: [(u32, &str, u64, fn() -> Result<Outcome>); 13] = [
        (1, "gbc4 on S4", 60, c1_gbc4_sphere),
        (2, "gbc4 on S2xS2", 120, c2_gbc4_product),
        (3, "gbc6 on S6", 600, c3_gbc6_sphere),
        (4, "hyperbolic identity", 5, c4_hyperbolic_identity),
        (5, "conformal scalar law", 60, c5_conformal_law),
        (6, "submersion curvature", 30, c6_oneill),
        (7, "sphere minus subsphere", 10, c7_subsphere),
        (8, "volume expansion", 300, c8_gray),
        (9, "sobolev inequality", 120, c9_sobolev),
        (10, "yamabe descent", 300, c10_descent),
        (11, "critical exponent vs dimension", 600, c11_patterson_sullivan),
        (12, "cyclic group", 30, c12_cyclic),
        (13, "tensor invariants", 300, c13_tensor_properties),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (n, name, limit, run) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let t = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(run));
        let secs = t.elapsed();
        let within = secs <= Duration::from_secs(limit);
        let (pass, detail) = match res {
            Ok(Ok(o)) => (o.pass && within, o.detail),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        let verdict = if pass { "PASS" } else { "FAIL" };
        writeln!(err, "{verdict} criterion {n:2} ({name}): {detail} [{:.1}s, limit {limit}s]", secs.as_secs_f64()).unwrap();
        if !pass {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

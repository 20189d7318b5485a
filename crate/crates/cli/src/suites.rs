//! The verification suites. Each check records the module operation it
//! exercises, its reference value and the tolerance it is held to.

use std::f64::consts::PI;
use std::sync::Arc;

use geomcert::conformal::{self, ConformalFactor, ConformalMap};
use geomcert::fibration::{self, ConnectionData};
use geomcert::geodesy::{self, PolarOptions};
use geomcert::globalint::{self, Atlas, DescentOptions, QuadratureGrid};
use geomcert::jet::Jet;
use geomcert::kleinian::{self, ExponentMethod, GroupSpec};
use geomcert::sampling::interior_points;
use geomcert::tensorcore::{self as tc, catalog, scalar_fn, Domain, MapFn, ModelMetric, ScalarFn};
use geomcert::{Chart, Curvature, GeomError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Config, GeneratorConfig, GroupConfig, Suite};
use crate::report::{CheckRecord, Relation, Tolerance};

type Res<T> = geomcert::Result<T>;

/// Metrics covered by the tensor invariants.
pub const TENSOR_CATALOG: [&str; 9] = [
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

/// Metrics for the conformal scalar-curvature law.
pub const CONFORMAL_CATALOG: [&str; 5] =
    ["sphere_polar(4,1)", "hyperbolic_ball(4)", "product(sphere_polar(2,1),sphere_polar(2,1))", "berger(0.6,1.5)", "nil3"];

/// Circle-bundle families: flat plane, round sphere and hyperbolic plane.
pub const BUNDLE_BASES: [&str; 3] = ["plane", "sphere", "hyperbolic"];

/// Every check id a suite can emit.
pub fn check_ids(suite: Suite) -> Vec<String> {
    let each = |prefix: &str, names: &[&str]| names.iter().map(|m| format!("{prefix}/{m}")).collect::<Vec<_>>();
    let fixed = |ids: &[&str]| ids.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match suite {
        Suite::Tensors => {
            let mut v = fixed(&["identity/H4", "chart_independence/S4"]);
            for p in ["symmetries", "bianchi2", "scalar", "homothety"] {
                v.extend(each(p, &TENSOR_CATALOG));
            }
            v.extend(each("decomposition", &TENSOR_CATALOG));
            v
        }
        Suite::Conformal => {
            let mut v = each("master", &CONFORMAL_CATALOG);
            v.extend(each("weyl_covariance", &CONFORMAL_CATALOG[..3]));
            v.extend(fixed(&[
                "inequality1/nil3",
                "inequality1_equivalence/nil3",
                "yamabe/bubble",
                "liouville/inversion",
                "integration_identity/T3",
                "integration_identity/T3-gradient",
            ]));
            v
        }
        Suite::Gbc => fixed(&["volume/S4", "gbc4/S4", "gbc4/S2xS2/chi", "gbc4/S2xS2/weyl", "gbc6/S6"]),
        Suite::Expansion => fixed(&["ball/S4", "ball/H4", "gray/S4", "gray/H4"]),
        Suite::Oneill => {
            let mut v = Vec::new();
            for p in ["oneill", "slope", "fibers", "a_tensor"] {
                v.extend(each(p, &BUNDLE_BASES));
            }
            v
        }
        Suite::Stereographic => fixed(&[
            "stereographic/S4",
            "sphere_minus_subsphere/4,1",
            "factor/4,1",
            "sphere_minus_subsphere/6,2",
            "removed_set/4,1",
        ]),
        Suite::Sobolev => fixed(&["sobolev/min_slack", "sobolev/constant", "sobolev/strict"]),
        Suite::YamabeDescent => fixed(&["descent/variance", "descent/quotient", "descent/monotone"]),
        Suite::Kleinian => fixed(&[
            "agreement/growth-knee",
            "agreement/growth-box",
            "agreement/knee-box",
            "delta/cyclic",
            "clusters/cyclic",
        ]),
    }
}

pub fn known_check(id: &str) -> bool {
    Suite::ALL.iter().any(|s| check_ids(*s).iter().any(|c| c == id))
}

/// Collects the records of one suite.
struct Recorder<'a> {
    suite: Suite,
    cfg: &'a Config,
    records: Vec<CheckRecord>,
}

impl Recorder<'_> {
    fn push(&mut self, id: &str, anchor: &str, rel: Relation, computed: Res<f64>, expected: f64, tol: Tolerance) {
        let name = self.suite.name();
        let mut tol = tol;
        if let Some(o) = self.cfg.tolerances.get(id) {
            tol.abs = o.abs.or(tol.abs);
            tol.rel = o.rel.or(tol.rel);
            if o.abs.is_some() && o.rel.is_none() {
                tol.rel = None;
            }
            if o.rel.is_some() && o.abs.is_none() {
                tol.abs = None;
            }
        }
        let rec = match computed {
            Ok(v) => CheckRecord::new(name, id, anchor, rel, v, expected, tol),
            Err(e) => CheckRecord::failed(name, id, anchor, rel, expected, tol, e.to_string()),
        };
        self.records.push(rec);
    }

    fn eq(&mut self, id: &str, anchor: &str, computed: Res<f64>, expected: f64, tol: Tolerance) {
        self.push(id, anchor, Relation::Eq, computed, expected, tol);
    }

    /// Nonnegative residual held below `tol`.
    fn le(&mut self, id: &str, anchor: &str, computed: Res<f64>, tol: f64) {
        self.push(id, anchor, Relation::Le, computed, 0.0, Tolerance::abs(tol));
    }
}

/// Runs one suite; module errors become failed records.
pub fn run_suite(suite: Suite, cfg: &Config) -> Vec<CheckRecord> {
    let mut r = Recorder { suite, cfg, records: Vec::new() };
    match suite {
        Suite::Tensors => tensors(&mut r),
        Suite::Conformal => conformal_suite(&mut r),
        Suite::Gbc => gbc(&mut r),
        Suite::Expansion => expansion(&mut r),
        Suite::Oneill => oneill(&mut r),
        Suite::Stereographic => stereographic(&mut r),
        Suite::Sobolev => sobolev(&mut r),
        Suite::YamabeDescent => descent(&mut r),
        Suite::Kleinian => kleinian_suite(&mut r),
    }
    r.records
}

fn model(name: &str) -> Res<Chart> {
    name.parse::<ModelMetric>()?.build()
}

fn max_over<I: IntoIterator<Item = Res<f64>>>(it: I) -> Res<f64> {
    let mut m = 0.0f64;
    for v in it {
        let v = v?;
        if v.is_nan() {
            return Ok(f64::NAN);
        }
        m = m.max(v);
    }
    Ok(m)
}

fn constant(v: f64) -> ScalarFn<f64> {
    scalar_fn(move |x: &[Jet<f64>]| x[0].constant_like(v))
}

fn sum_sq(x: &[Jet<f64>]) -> Jet<f64> {
    let mut s = x[0].zero_like();
    for v in x {
        s += &v.square();
    }
    s
}

fn ix(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

/// Largest violation of the algebraic curvature identities at a point,
/// relative to 1 + max|R_ijkl|.
pub fn invariant_residual(cp: &Curvature) -> f64 {
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
    worst = worst.max((tr(&cp.ricci) - cp.scalar).abs()).max(tr(&cp.traceless_ricci).abs());
    let nm = cp.norms;
    worst = worst.max((nm.ring2 - (nm.ric2 - cp.scalar * cp.scalar / n as f64)).abs() / (1.0 + nm.ric2));
    for a in 0..n {
        for b in 0..n {
            let t: f64 = (0..n).map(|s| (0..n).map(|u| gi[s * n + u] * cp.weyl_low[ix(n, s, a, u, b)]).sum::<f64>()).sum();
            worst = worst.max(t.abs());
        }
    }
    if n >= 3 {
        let (r1, r2) = tc::decomposition_residuals(cp);
        worst = worst.max(r1.max(r2) / (1.0 + nm.rm2) * scale);
    }
    worst / scale
}

fn tensors(r: &mut Recorder) {
    let cfg = r.cfg.tensors.clone();
    let seed = r.cfg.seed;
    let h4 = catalog::hyperbolic_ball::<f64>(4);
    let pts = interior_points(h4.domain(), cfg.identity_points, seed, 0.02);
    let identity = (|| {
        let mut worst = 216.0f64;
        for x in &pts {
            let nm = tc::curvature_at(&h4, x)?.norms;
            let v = -3.0 * nm.rm2 + 8.0 * nm.ric2;
            if (v - 216.0).abs() > (worst - 216.0).abs() || v.is_nan() {
                worst = v;
            }
        }
        Ok(worst)
    })();
    r.eq("identity/H4", "hyperbolic-curvature-identity", identity, 216.0, Tolerance::abs(1e-8));

    for name in TENSOR_CATALOG {
        let chart = match model(name) {
            Ok(c) => c,
            Err(e) => {
                for p in ["symmetries", "bianchi2", "scalar", "homothety", "decomposition"] {
                    r.le(&format!("{p}/{name}"), "curvature-tensor", Err(e.clone()), 0.0);
                }
                continue;
            }
        };
        let pts = interior_points(chart.domain(), cfg.points, seed, 0.1);
        let sc_model = name.parse::<ModelMetric>().map(|m| m.scalar_curvature()).unwrap_or(f64::NAN);
        let sym = max_over(pts.iter().map(|x| Ok(invariant_residual(&tc::curvature_at(&chart, x)?))));
        r.push(&format!("symmetries/{name}"), "curvature-symmetries", Relation::Le, sym, 0.0, Tolerance::abs(1e-9));
        let b2 = max_over(pts.iter().map(|x| tc::contracted_bianchi_residual(&chart, x)));
        r.push(&format!("bianchi2/{name}"), "contracted-bianchi", Relation::Le, b2, 0.0, Tolerance::abs(1e-7));
        let sc = max_over(pts.iter().map(|x| Ok((tc::curvature_at(&chart, x)?.scalar - sc_model).abs())));
        r.push(&format!("scalar/{name}"), "model-scalar-curvature", Relation::Le, sc, 0.0, Tolerance::abs(1e-9));
        let k = 2.25;
        let scaled = chart.scaled(k);
        let hom = max_over(pts.iter().map(|x| {
            let a = tc::curvature_at(&chart, x)?;
            let b = tc::curvature_at(&scaled, x)?;
            Ok((b.scalar * k - a.scalar).abs().max((b.norms.rm2 * k * k - a.norms.rm2).abs()))
        }));
        r.push(&format!("homothety/{name}"), "homothety-scaling", Relation::Le, hom, 0.0, Tolerance::abs(1e-10));
        let dec = if chart.dim() >= 3 {
            max_over(pts.iter().map(|x| {
                let (a, b) = tc::rm_decomposition_residuals(&chart, x)?;
                Ok(a.max(b))
            }))
        } else {
            Ok(0.0)
        };
        r.push(&format!("decomposition/{name}"), "rm-decomposition", Relation::Le, dec, 0.0, Tolerance::abs(1e-9));
    }

    let ci = (|| {
        let polar = catalog::sphere_polar::<f64>(4, 1.0)?;
        let stereo = catalog::sphere_stereographic::<f64>(4, 1.0)?;
        let mut worst = 0.0f64;
        for x in interior_points(polar.domain(), cfg.points, seed, 0.1) {
            let y = polar.embed(&x).expect("embedded");
            if y[4] > 0.9 {
                continue;
            }
            let s: Vec<f64> = (0..4).map(|i| y[i] / (1.0 - y[4])).collect();
            let (a, b) = (tc::curvature_at(&polar, &x)?, tc::curvature_at(&stereo, &s)?);
            worst = worst
                .max((a.scalar - b.scalar).abs())
                .max((a.norms.rm2 - b.norms.rm2).abs())
                .max((a.norms.ric2 - b.norms.ric2).abs())
                .max((a.norms.w2 - b.norms.w2).abs());
        }
        Ok(worst)
    })();
    r.push("chart_independence/S4", "chart-independence", Relation::Le, ci, 0.0, Tolerance::abs(1e-8));
}

/// a₀ + Σ aᵢ sin(bᵢxᵢ + cᵢ) + d·x₀x_{n−1} with random coefficients.
pub fn random_smooth(rng: &mut ChaCha8Rng, n: usize) -> ScalarFn<f64> {
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

fn conformal_suite(r: &mut Recorder) {
    let cfg = r.cfg.conformal.clone();
    let seed = r.cfg.seed;
    for (idx, name) in CONFORMAL_CATALOG.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        let res = model(name).and_then(|chart| {
            let pts = interior_points(chart.domain(), cfg.functions, seed, 0.1);
            max_over(pts.iter().map(|x| conformal::conformal_formula_residual(&chart, &random_smooth(&mut rng, chart.dim()), x)))
        });
        r.le(&format!("master/{name}"), "conformal-scalar-law", res, 1e-8);
    }
    for (idx, name) in CONFORMAL_CATALOG[..3].iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(100 + idx as u64));
        let res = model(name).and_then(|chart| {
            let pts = interior_points(chart.domain(), cfg.functions.div_ceil(5), seed, 0.1);
            max_over(pts.iter().map(|x| {
                let f = random_smooth(&mut rng, 4);
                let fv = f(&Jet::variables(x, 0)?).value();
                let w = tc::curvature_at(&chart, x)?.norms.w2;
                let w2 = tc::curvature_at(&conformal::exp_scale(&chart, &f), x)?.norms.w2;
                let want = (-4.0 * fv).exp() * w;
                Ok((w2 - want).abs() / (1.0 + want.abs()))
            }))
        });
        r.le(&format!("weyl_covariance/{name}"), "weyl-conformal-covariance", res, 1e-8);
    }

    let nil = catalog::nil3::<f64>();
    let x = [0.5, 0.2, 0.7];
    let q = conformal::inequality1_check(&nil, &constant(0.1), 0.5, &x);
    r.eq(
        "inequality1/nil3",
        "conformal-inequality",
        q.as_ref().map(|q| q.slack).map_err(Clone::clone),
        (0.2f64.exp() - 1.0) / 8.0,
        Tolerance::abs(1e-12),
    );
    r.le("inequality1_equivalence/nil3", "conformal-inequality", q.map(|q| q.equivalence), 1e-8);

    let bubble = (|| {
        let chart = catalog::sphere_stereographic::<f64>(4, 1.0)?;
        let lam = 1.7;
        let v = scalar_fn(move |x: &[Jet<f64>]| {
            let s = sum_sq(x);
            (&s + 1.0) * (s.scale(lam * lam) + 1.0).recip() * lam
        });
        let u = ConformalFactor::power(v, 4)?;
        max_over(
            interior_points(&Domain::cube(4, -2.0, 2.0), 20, seed, 0.0)
                .iter()
                .map(|x| conformal::yamabe_residual(&chart, &u, &constant(12.0), x).map(f64::abs)),
        )
    })();
    r.le("yamabe/bubble", "yamabe-equation", bubble, 1e-7);

    let inv = ConformalMap::<f64>::inversion(4);
    let pts: Vec<Vec<f64>> = interior_points(inv.source.domain(), 30, seed, 0.02)
        .into_iter()
        .filter(|x| x.iter().map(|v| v * v).sum::<f64>() > 0.01)
        .collect();
    r.le("liouville/inversion", "liouville-factor-equation", max_over(pts.iter().map(|x| conformal::liouville_phi_residual(&inv, x))), 1e-8);

    let t3 = Atlas::<f64>::flat_torus(3);
    let u = scalar_fn(|x: &[Jet<f64>]| x[0].scale(2.0 * PI).sin());
    let lr = conformal::integration_identity_check(&t3, &u, &QuadratureGrid::uniform(3, cfg.torus_nodes));
    let want = 2.0 * PI * PI;
    r.eq("integration_identity/T3", "integration-by-parts", lr.as_ref().map(|p| p.0).map_err(Clone::clone), want, Tolerance::rel(1e-8));
    r.eq("integration_identity/T3-gradient", "integration-by-parts", lr.map(|p| p.1), want, Tolerance::rel(1e-8));
}

fn gbc(r: &mut Recorder) {
    let cfg = r.cfg.gbc.clone();
    let pi2 = PI * PI;
    let pair = Atlas::<f64>::stereographic_pair(4, 1.0);
    let g4 = QuadratureGrid::uniform(4, cfg.s4_nodes);
    let s4 = pair.clone().and_then(|a| globalint::gbc4(&a, &g4));
    r.eq("volume/S4", "sphere-volume", s4.as_ref().map(|b| b.volume).map_err(Clone::clone), 8.0 * pi2 / 3.0, Tolerance::rel(1e-5));
    r.eq("gbc4/S4", "gauss-bonnet-chern-4d", s4.map(|b| b.total), 64.0 * pi2, Tolerance::rel(1e-5));

    let prod = (|| {
        let s2 = Atlas::polar_sphere(2, 1.0)?;
        globalint::gbc4(&Atlas::product(&s2, &s2)?, &QuadratureGrid::uniform(4, cfg.product_nodes))
    })();
    r.eq("gbc4/S2xS2/chi", "gauss-bonnet-chern-4d", prod.as_ref().map(|b| b.chi_estimate).map_err(Clone::clone), 4.0, Tolerance::abs(1e-6));
    r.eq("gbc4/S2xS2/weyl", "weyl-energy", prod.map(|b| b.weyl_term / b.volume), 16.0 / 3.0, Tolerance::abs(1e-4));

    if cfg.run_s6 {
        let s6 = Atlas::<f64>::cubed_sphere(6, 1.0).and_then(|a| globalint::gbc6(&a, &QuadratureGrid::uniform(6, cfg.s6_nodes)));
        r.eq("gbc6/S6", "gauss-bonnet-chern-6d", s6.map(|b| b.total), 128.0 * PI.powi(3), Tolerance::rel(1e-4));
    }
}

/// Vol B_r in S⁴ and H⁴ from the radial integrals of sin³ and sinh³,
/// written as 4 sin⁴(r/2)(2 + cos r)/3 to avoid cancellation.
pub fn model_ball_volume(curvature: f64, r: f64) -> f64 {
    let area = 2.0 * PI * PI;
    if curvature > 0.0 {
        area * 4.0 * (r / 2.0).sin().powi(4) * (2.0 + r.cos()) / 3.0
    } else {
        area * 4.0 * (r / 2.0).sinh().powi(4) * (2.0 + r.cosh()) / 3.0
    }
}

fn expansion(r: &mut Recorder) {
    let cfg = r.cfg.expansion.clone();
    let opts = PolarOptions { radial_nodes: cfg.radial_nodes, angle_nodes: cfg.angle_nodes, ..PolarOptions::default() };
    let cases: [(&str, Res<Chart>, Vec<f64>, f64); 2] = [
        ("S4", catalog::sphere_polar(4, 1.0), vec![PI / 2.0, PI / 2.0, PI / 2.0, PI], 1.0),
        ("H4", Ok(catalog::hyperbolic_ball(4)), vec![0.0; 4], -1.0),
    ];
    for (tag, chart, x, k) in cases {
        let rows = chart.and_then(|c| geodesy::expansion_compare(&c, &x, &cfg.radii, opts));
        let ball = rows.as_ref().map_err(Clone::clone).map(|rows| {
            rows.iter().map(|row| ((row.ball_volume - model_ball_volume(k, row.r)) / model_ball_volume(k, row.r)).abs()).fold(0.0, f64::max)
        });
        r.le(&format!("ball/{tag}"), "geodesic-ball-volume", ball, 1e-8);
        let spread = rows.map(|rows| {
            let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), row| (lo.min(row.ratio), hi.max(row.ratio)));
            hi / lo
        });
        r.push(&format!("gray/{tag}"), "volume-expansion-remainder", Relation::Le, spread, 2.0, Tolerance::abs(0.0));
    }
}

/// ω = λ·dA on the flat plane, the unit sphere or the Poincaré disk.
pub fn bundle(base: &str, lambda: f64, eps: f64) -> Res<ConnectionData<f64>> {
    match base {
        "plane" => ConnectionData::flat_plane(lambda, eps),
        "sphere" => ConnectionData::sphere_area_form(lambda, eps),
        "hyperbolic" => {
            let pot: MapFn<f64> = Arc::new(move |x: &[Jet<f64>]| {
                let s = (x[0].square() + x[1].square()).rsub(1.0).recip().scale(2.0 * lambda);
                vec![-(&x[1] * &s), &x[0] * &s]
            });
            ConnectionData::new(catalog::hyperbolic_ball(2), pot, eps)
        }
        _ => Err(GeomError::InvalidParameter(format!("unknown bundle base '{base}'"))),
    }
}

fn bundle_points(data: &ConnectionData<f64>, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = data.base.domain();
    let d = if d.upper[0] > 100.0 { Domain::cube(2, -2.0, 2.0) } else { d.clone() };
    interior_points(&d, count, seed, 0.1)
}

fn oneill(r: &mut Recorder) {
    let cfg = r.cfg.oneill.clone();
    let seed = r.cfg.seed;
    for base in BUNDLE_BASES {
        let res = max_over(cfg.eps.iter().map(|&e| {
            let data = bundle(base, cfg.lambda, e)?;
            max_over(bundle_points(&data, cfg.points, seed).iter().map(|x| fibration::oneill_residual(&data, &[x[0], x[1], 1.0])))
        }));
        r.le(&format!("oneill/{base}"), "submersion-scalar-curvature", res, 1e-8);

        let slope = (|| {
            let data = bundle(base, cfg.lambda, 1.0)?;
            let want = -cfg.lambda * cfg.lambda / 2.0;
            let mut worst = want;
            for x in bundle_points(&data, cfg.points.min(3), seed) {
                let (s, _) = fibration::epsilon_slope(&data.base, &data.potential, &cfg.eps, &[x[0], x[1], 0.0])?;
                if (s - want).abs() >= (worst - want).abs() {
                    worst = s;
                }
            }
            Ok(worst)
        })();
        r.eq(&format!("slope/{base}"), "submersion-scalar-curvature", slope, -cfg.lambda * cfg.lambda / 2.0, Tolerance::abs(1e-6));

        let data = bundle(base, cfg.lambda, cfg.eps[cfg.eps.len() / 2]);
        let fibers = data.as_ref().map_err(Clone::clone).and_then(|d| {
            max_over(bundle_points(d, cfg.points, seed).iter().map(|x| fibration::fiber_geodesic_residual(d, &[x[0], x[1], 1.0])))
        });
        r.le(&format!("fibers/{base}"), "geodesic-fibers", fibers, 1e-9);
        let a = data.and_then(|d| {
            max_over(
                bundle_points(&d, cfg.points, seed)
                    .iter()
                    .map(|x| fibration::a_tensor_check(&d, &[0.3, 1.0], &[-0.7, 0.2], &[x[0], x[1], 3.0]).map(|c| c.residual)),
            )
        });
        r.le(&format!("a_tensor/{base}"), "submersion-a-tensor", a, 1e-8);
    }
}

fn stereographic(r: &mut Recorder) {
    let cfg = r.cfg.stereographic.clone();
    let seed = r.cfg.seed;
    let s = conformal::stereographic_map::<f64>(4, 1.0, tc::Pole::North)
        .and_then(|m| m.max_pullback_residual(&interior_points(m.source.domain(), cfg.sphere_points, seed, 0.05)));
    r.le("stereographic/S4", "stereographic-projection", s, 1e-10);

    let f = conformal::sphere_minus_subsphere::<f64>(4, 1);
    let res = f.as_ref().map_err(Clone::clone).and_then(|f| {
        f.max_pullback_residual(&interior_points(f.source.domain(), cfg.subsphere_points, seed, 0.02))
    });
    r.le("sphere_minus_subsphere/4,1", "sphere-minus-subsphere", res, 1e-9);
    let factor = f.as_ref().map_err(Clone::clone).and_then(|f| {
        let src = &f.source;
        max_over(interior_points(src.domain(), cfg.subsphere_points, seed, 0.02).iter().map(|x| {
            let y = src.embed(x).expect("embedded");
            let p: Vec<f64> = y[..4].iter().map(|v| v / (1.0 - y[4])).collect();
            let r2: f64 = p.iter().map(|v| v * v).sum();
            let rho = p[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            let want = ((1.0 + r2) / (2.0 * rho)).powi(2);
            Ok((f.factor_at(x)?.powi(2) - want).abs() / want)
        }))
    });
    r.le("factor/4,1", "sphere-minus-subsphere", factor, 1e-10);
    let h = PI / 2.0;
    let removed = f.map(|f| if matches!(f.apply(&[0.7, h, h, h]), Err(GeomError::RemovedSet(_))) { 1.0 } else { 0.0 });
    r.eq("removed_set/4,1", "sphere-minus-subsphere", removed, 1.0, Tolerance::abs(0.0));
    let f62 = conformal::sphere_minus_subsphere::<f64>(6, 2)
        .and_then(|f| f.max_pullback_residual(&interior_points(f.source.domain(), cfg.sphere_points, seed, 0.05)));
    r.le("sphere_minus_subsphere/6,2", "sphere-minus-subsphere", f62, 1e-9);
}

/// 2 + Σ c(yᵢyⱼ + ½ sin 2yᵢ) over three random terms; positive on S⁴.
pub fn random_trig_poly(rng: &mut ChaCha8Rng) -> ScalarFn<f64> {
    let terms: Vec<(usize, usize, f64)> =
        (0..3).map(|_| (rng.random_range(0..5), rng.random_range(0..5), rng.random_range(-0.3..0.3))).collect();
    scalar_fn(move |y: &[Jet<f64>]| {
        let mut s = y[0].constant_like(2.0);
        for &(i, j, c) in &terms {
            s = s + (&y[i] * &y[j]).scale(c) + y[i].scale(2.0).sin().scale(0.5 * c);
        }
        s
    })
}

fn sobolev(r: &mut Recorder) {
    let cfg = r.cfg.sobolev.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(r.cfg.seed);
    let atlas = Atlas::<f64>::cubed_sphere(4, 1.0);
    let grid = QuadratureGrid::uniform(4, cfg.nodes);
    let slacks: Res<Vec<f64>> = atlas.as_ref().map_err(Clone::clone).and_then(|a| {
        (0..cfg.polynomials).map(|_| globalint::sobolev_check(a, &random_trig_poly(&mut rng), &grid).map(|s| s.slack)).collect()
    });
    let min = slacks.map(|s| s.into_iter().fold(f64::INFINITY, f64::min));
    r.push("sobolev/min_slack", "sharp-sobolev", Relation::Ge, min.clone(), 0.0, Tolerance::abs(1e-9));
    let c = atlas.and_then(|a| globalint::sobolev_check(&a, &constant(1.0), &grid).map(|s| s.slack));
    r.eq("sobolev/constant", "sharp-sobolev-equality", c, 0.0, Tolerance::abs(1e-8));
    r.push("sobolev/strict", "sharp-sobolev-equality", Relation::Ge, min, 1e-8, Tolerance::abs(0.0));
}

fn descent(r: &mut Recorder) {
    let cfg = r.cfg.yamabe_descent.clone();
    let target = 12.0 * (8.0 * PI * PI / 3.0f64).sqrt();
    let run = (|| {
        let atlas = Atlas::<f64>::cubed_sphere(4, 1.0)?;
        let basis: Vec<ScalarFn<f64>> =
            (0..=cfg.degree).map(|k| scalar_fn(move |y: &[Jet<f64>]| y[4].powi(k as i32))).collect();
        let amp = cfg.amplitude;
        let u0 = scalar_fn(move |y: &[Jet<f64>]| y[4].scale(amp) + 1.0);
        let opts = DescentOptions { max_iters: cfg.max_iters, ..DescentOptions::default() };
        globalint::yamabe_descent(&atlas, &QuadratureGrid::uniform(4, cfg.nodes), &u0, &basis, &opts)
    })();
    r.le("descent/variance", "yamabe-descent", run.as_ref().map(|t| t.last().scalar_variance).map_err(Clone::clone), 1e-4);
    r.eq("descent/quotient", "yamabe-descent", run.as_ref().map(|t| t.last().quotient).map_err(Clone::clone), target, Tolerance::rel(5e-3));
    let mono = run.map(|t| t.steps.windows(2).map(|w| (w[1].quotient - w[0].quotient) / w[0].quotient.abs()).fold(0.0, f64::max));
    r.le("descent/monotone", "yamabe-descent", mono, 1e-12);
}

/// Group from its config description.
pub fn build_group(g: &GroupConfig) -> Res<GroupSpec<f64>> {
    let gens = g
        .generators
        .iter()
        .map(|gen| match gen {
            GeneratorConfig::Translation { length, attracting, repelling } => {
                kleinian::make_translation(*length, attracting, repelling)
            }
            GeneratorConfig::Rotation { dim, angle, plane } => {
                if *dim < 2 {
                    return Err(GeomError::InvalidParameter(format!("rotation needs dimension ≥ 2, got {dim}")));
                }
                kleinian::make_rotation(dim - 1, *angle, plane[0], plane[1])
            }
        })
        .collect::<Res<Vec<_>>>()?;
    let mut spec = GroupSpec::new(gens, g.free, g.word_length)?;
    if !g.basepoint.is_empty() {
        spec = spec.with_basepoint(kleinian::ball_to_hyperboloid(&g.basepoint)?)?;
    }
    if let Some(b) = g.memory_budget {
        spec = spec.with_memory_budget(b);
    }
    Ok(spec)
}

fn kleinian_suite(r: &mut Recorder) {
    let cfg = r.cfg.kleinian.clone();
    let schottky = build_group(&cfg.schottky);
    let est = |m| schottky.as_ref().map_err(Clone::clone).and_then(|s| kleinian::critical_exponent_estimate(s, m).map(|e| e.delta));
    let growth = est(ExponentMethod::GrowthFit);
    let knee = est(ExponentMethod::SeriesKnee);
    let boxd = schottky.as_ref().map_err(Clone::clone).and_then(|s| {
        let ls = kleinian::limit_set_sample(s, cfg.limit_word_length, cfg.limit_points, cfg.schottky.seed)?;
        let bd = kleinian::box_dimension(&ls.points, &kleinian::scale_ladder(cfg.box_first, cfg.box_ratio, cfg.box_scales))?;
        if bd.elementary {
            Err(GeomError::Precondition("limit set is elementary".into()))
        } else {
            Ok(bd.dimension)
        }
    });
    let anchor = "critical-exponent-equals-dimension";
    let pair = |a: &Res<f64>, b: &Res<f64>| -> (Res<f64>, f64) {
        match (a, b) {
            (Ok(x), Ok(y)) => (Ok(*x), *y),
            (Err(e), _) | (_, Err(e)) => (Err(e.clone()), f64::NAN),
        }
    };
    let (c, e) = pair(&growth, &knee);
    r.eq("agreement/growth-knee", anchor, c, e, Tolerance::abs(0.05));
    let (c, e) = pair(&growth, &boxd);
    r.eq("agreement/growth-box", anchor, c, e, Tolerance::abs(0.05));
    let (c, e) = pair(&knee, &boxd);
    r.eq("agreement/knee-box", anchor, c, e, Tolerance::abs(0.05));

    let cyclic = build_group(&cfg.cyclic);
    let delta = cyclic.as_ref().map_err(Clone::clone).and_then(|s| kleinian::critical_exponent_estimate(s, ExponentMethod::GrowthFit).map(|e| e.delta));
    r.eq("delta/cyclic", "elementary-group", delta, 0.0, Tolerance::abs(0.05));
    let clusters = cyclic.and_then(|s| {
        let ls = kleinian::limit_set_sample(&s, 12, 2000, cfg.cyclic.seed)?;
        Ok(kleinian::cluster_count(&ls.points, kleinian::CLUSTER_RADIUS) as f64)
    });
    r.eq("clusters/cyclic", "elementary-group", clusters, 2.0, Tolerance::abs(0.0));
}

//! Model metrics.
//!
//! | model | dim | Sc |
//! |---|---|---|
//! | `euclidean(n)` | n | 0 |
//! | `sphere_polar(n, R)`, `sphere_stereographic(n, R)`, `sphere_gnomonic` | n | n(n−1)/R² |
//! | `hyperbolic_ball(n)`, `hyperbolic_halfspace(n)` | n | −n(n−1) |
//! | `product(A, B)` | a+b | Sc_A + Sc_B |
//! | `berger(ε, λ)` | 3 | 2 − ε²λ²/2 |
//! | `nil3` | 3 | −1/2 |
//! | `flat_torus(n)` | n | 0 |

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::chart::{Domain, MapFn, MetricChart, MetricFn};
use crate::error::{GeomError, Result};
use crate::jet::Jet;
use crate::scalar::{c, Real};

fn zero_of<T: Real>(x: &[Jet<T>]) -> Jet<T> {
    x[0].zero_like()
}

fn sum_sq<T: Real>(x: &[Jet<T>]) -> Jet<T> {
    let mut s = zero_of(x);
    for v in x {
        s += &v.square();
    }
    s
}

/// Diagonal metric `φ(x)·δ` from a conformal factor.
fn conformally_flat<T: Real>(n: usize, phi: impl Fn(&[Jet<T>]) -> Jet<T> + Send + Sync + 'static) -> MetricFn<T> {
    Arc::new(move |x| {
        let p = phi(x);
        let z = p.zero_like();
        let mut g = vec![z; n * n];
        for i in 0..n {
            g[i * n + i] = p.clone();
        }
        g
    })
}

pub fn euclidean<T: Real>(n: usize) -> MetricChart<T> {
    MetricChart::new(
        format!("euclidean({n})"),
        Domain::cube(n, c(-1.0e3), c(1.0e3)),
        conformally_flat(n, |x| x[0].constant_like(T::one())),
    )
}

pub fn flat_torus<T: Real>(n: usize) -> MetricChart<T> {
    MetricChart::new(
        format!("flat_torus({n})"),
        Domain::new(vec![T::zero(); n], vec![T::one(); n], vec![true; n]),
        conformally_flat(n, |x| x[0].constant_like(T::one())),
    )
    .with_injectivity_guard(c(0.5))
}

fn check_radius<T: Real>(radius: T) -> Result<()> {
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(GeomError::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    Ok(())
}

/// Round sphere in hyperspherical coordinates (θ₁, …, θ_{n−1}, φ), φ periodic.
pub fn sphere_polar<T: Real>(n: usize, radius: T) -> Result<MetricChart<T>> {
    check_radius(radius)?;
    if n == 0 {
        return Err(GeomError::InvalidParameter("sphere dimension must be positive".into()));
    }
    let r2 = radius * radius;
    let metric: MetricFn<T> = Arc::new(move |x| {
        let z = zero_of(x);
        let mut g = vec![z.clone(); n * n];
        let mut w = x[0].constant_like(r2);
        for i in 0..n {
            g[i * n + i] = w.clone();
            if i + 1 < n {
                w = w * x[i].sin().square();
            }
        }
        g
    });
    let embed: MapFn<T> = Arc::new(move |x| {
        let mut out = Vec::with_capacity(n + 1);
        let mut prod = x[0].constant_like(radius);
        for i in 0..n - 1 {
            out.push(&prod * x[i].cos());
            prod = prod * x[i].sin();
        }
        out.push(&prod * x[n - 1].cos());
        out.push(prod * x[n - 1].sin());
        out
    });
    let pi = T::PI();
    let mut lower = vec![T::zero(); n];
    let mut upper = vec![pi; n];
    let mut periodic = vec![false; n];
    upper[n - 1] = pi + pi;
    periodic[n - 1] = true;
    lower[n - 1] = T::zero();
    Ok(MetricChart::new(format!("sphere_polar({n},{radius})"), Domain::new(lower, upper, periodic), metric)
        .with_embedding(n + 1, embed)
        .with_injectivity_guard(pi * radius))
}

/// Which pole a stereographic chart projects from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pole {
    /// Projection from +e_{n+1}; the origin maps to the south pole.
    North,
    /// Projection from −e_{n+1}; the origin maps to the north pole.
    South,
}

/// Round sphere in stereographic coordinates: g = 4R²(1+|x|²)⁻² δ.
pub fn sphere_stereographic<T: Real>(n: usize, radius: T) -> Result<MetricChart<T>> {
    stereographic_chart(n, radius, Pole::North, c(10.0))
}

pub fn stereographic_chart<T: Real>(n: usize, radius: T, pole: Pole, half_width: T) -> Result<MetricChart<T>> {
    check_radius(radius)?;
    let four_r2 = c::<T>(4.0) * radius * radius;
    let metric = conformally_flat(n, move |x| (sum_sq(x) + T::one()).powi(-2) * four_r2);
    let sign = match pole {
        Pole::North => T::one(),
        Pole::South => -T::one(),
    };
    let embed: MapFn<T> = Arc::new(move |x| {
        let s = sum_sq(x);
        let inv = (&s + T::one()).recip() * radius;
        let mut out: Vec<Jet<T>> = x.iter().map(|v| v * &inv * c::<T>(2.0)).collect();
        out.push((s - T::one()) * inv * sign);
        out
    });
    let tag = match pole {
        Pole::North => "N",
        Pole::South => "S",
    };
    Ok(MetricChart::new(
        format!("sphere_stereographic({n},{radius},{tag})"),
        Domain::cube(n, -half_width, half_width),
        metric,
    )
    .with_embedding(n + 1, embed)
    .with_injectivity_guard(T::PI() * radius))
}

/// Gnomonic (central-projection) chart on the cube face `sign·e_axis` of the
/// sphere: g = R²(δ/(1+|x|²) − x xᵀ/(1+|x|²)²) on [−1, 1]ⁿ.
pub fn sphere_gnomonic<T: Real>(n: usize, radius: T, axis: usize, positive: bool) -> Result<MetricChart<T>> {
    check_radius(radius)?;
    if axis > n {
        return Err(GeomError::InvalidParameter(format!("face axis {axis} out of range")));
    }
    let r2 = radius * radius;
    let metric: MetricFn<T> = Arc::new(move |x| {
        let q = sum_sq(x) + T::one();
        let a = q.recip() * r2;
        let b = q.powi(-2) * r2;
        let mut g = vec![zero_of(x); n * n];
        for i in 0..n {
            for j in i..n {
                let mut v = &x[i] * &x[j] * &b;
                v = -v;
                if i == j {
                    v += &a;
                }
                g[j * n + i] = v.clone();
                g[i * n + j] = v;
            }
        }
        g
    });
    let sign = if positive { T::one() } else { -T::one() };
    let embed: MapFn<T> = Arc::new(move |x| {
        let inv = (sum_sq(x) + T::one()).powf(c(-0.5)) * radius;
        let mut out = Vec::with_capacity(n + 1);
        let mut k = 0;
        for a in 0..=n {
            if a == axis {
                out.push(&inv * sign);
            } else {
                out.push(&x[k] * &inv);
                k += 1;
            }
        }
        out
    });
    let tag = if positive { '+' } else { '-' };
    Ok(MetricChart::new(
        format!("sphere_gnomonic({n},{radius},{tag}{axis})"),
        Domain::cube(n, -T::one(), T::one()),
        metric,
    )
    .with_embedding(n + 1, embed)
    .with_injectivity_guard(T::PI() * radius))
}

/// Poincaré ball g = 4(1−|x|²)⁻² δ on the box [−a, a]ⁿ with a = 0.9/√n.
pub fn hyperbolic_ball<T: Real>(n: usize) -> MetricChart<T> {
    let a = c::<T>(0.9) / c::<T>(n as f64).sqrt();
    MetricChart::new(
        format!("hyperbolic_ball({n})"),
        Domain::cube(n, -a, a),
        conformally_flat(n, |x| sum_sq(x).rsub(T::one()).powi(-2) * c::<T>(4.0)),
    )
}

/// Upper half-space g = y⁻² δ with y the last coordinate.
pub fn hyperbolic_halfspace<T: Real>(n: usize) -> MetricChart<T> {
    let mut lower = vec![c::<T>(-10.0); n];
    let mut upper = vec![c::<T>(10.0); n];
    lower[n - 1] = c(0.01);
    upper[n - 1] = c(100.0);
    MetricChart::new(
        format!("hyperbolic_halfspace({n})"),
        Domain::new(lower, upper, vec![false; n]),
        conformally_flat(n, move |x| x[n - 1].powi(-2)),
    )
}

/// Riemannian product A × B on concatenated coordinates.
pub fn product<T: Real>(a: &MetricChart<T>, b: &MetricChart<T>) -> MetricChart<T> {
    let (na, nb) = (a.dim(), b.dim());
    let n = na + nb;
    let (fa, fb) = (a.metric_fn().clone(), b.metric_fn().clone());
    let metric: MetricFn<T> = Arc::new(move |x| {
        let ga = fa(&x[..na]);
        let gb = fb(&x[na..]);
        let mut g = vec![zero_of(x); n * n];
        for i in 0..na {
            for j in 0..na {
                g[i * n + j] = ga[i * na + j].clone();
            }
        }
        for i in 0..nb {
            for j in 0..nb {
                g[(na + i) * n + na + j] = gb[i * nb + j].clone();
            }
        }
        g
    });
    let da = a.domain();
    let db = b.domain();
    let domain = Domain::new(
        [da.lower.clone(), db.lower.clone()].concat(),
        [da.upper.clone(), db.upper.clone()].concat(),
        [da.periodic.clone(), db.periodic.clone()].concat(),
    );
    let mut chart = MetricChart::new(format!("{}x{}", a.name(), b.name()), domain, metric)
        .with_injectivity_guard(a.injectivity_guard().min(b.injectivity_guard()));
    if let (Some(ea), Some(eb)) = (a.embedding(), b.embedding()) {
        let (ma, mb) = (ea.map.clone(), eb.map.clone());
        let map: MapFn<T> = Arc::new(move |x| {
            let mut out = ma(&x[..na]);
            out.extend(mb(&x[na..]));
            out
        });
        chart = chart.with_embedding(ea.ambient_dim + eb.ambient_dim, map);
    }
    chart
}

/// Heisenberg metric dx² + dy² + (dz − x dy)² on [0,1]³, y and z periodic.
pub fn nil3<T: Real>() -> MetricChart<T> {
    let metric: MetricFn<T> = Arc::new(|x| {
        let one = x[0].constant_like(T::one());
        let z = zero_of(x);
        let xx = &x[0];
        vec![
            one.clone(),
            z.clone(),
            z.clone(),
            z.clone(),
            xx.square() + T::one(),
            -xx,
            z,
            -xx,
            one,
        ]
    });
    MetricChart::new(
        "nil3",
        Domain::new(vec![T::zero(); 3], vec![T::one(); 3], vec![false, true, true]),
        metric,
    )
    .with_injectivity_guard(c(0.25))
}

/// Berger-type circle bundle over the unit S² with potential a = λ(1 − cos θ)dφ.
pub fn berger<T: Real>(eps: T, lambda: T) -> Result<MetricChart<T>> {
    let data = crate::fibration::ConnectionData::sphere_area_form(lambda, eps)?;
    Ok(crate::fibration::connection_metric(&data)?.with_name(format!("berger({eps},{lambda})")))
}

/// Named catalog entry with parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelMetric {
    Euclidean { n: usize },
    SpherePolar { n: usize, radius: f64 },
    SphereStereographic { n: usize, radius: f64 },
    HyperbolicBall { n: usize },
    HyperbolicHalfspace { n: usize },
    Product(Box<ModelMetric>, Box<ModelMetric>),
    Berger { eps: f64, lambda: f64 },
    Nil3,
    FlatTorus { n: usize },
}

impl ModelMetric {
    pub fn build<T: Real>(&self) -> Result<MetricChart<T>> {
        let dim_ok = |n: usize| {
            if n == 0 || n > crate::jet::MAX_VARS {
                Err(GeomError::InvalidParameter(format!("dimension {n} unsupported")))
            } else {
                Ok(())
            }
        };
        match self {
            ModelMetric::Euclidean { n } => dim_ok(*n).map(|_| euclidean(*n)),
            ModelMetric::SpherePolar { n, radius } => {
                dim_ok(*n)?;
                sphere_polar(*n, c(*radius))
            }
            ModelMetric::SphereStereographic { n, radius } => {
                dim_ok(*n)?;
                sphere_stereographic(*n, c(*radius))
            }
            ModelMetric::HyperbolicBall { n } => dim_ok(*n).map(|_| hyperbolic_ball(*n)),
            ModelMetric::HyperbolicHalfspace { n } => dim_ok(*n).map(|_| hyperbolic_halfspace(*n)),
            ModelMetric::Product(a, b) => {
                let (ca, cb) = (a.build::<T>()?, b.build::<T>()?);
                dim_ok(ca.dim() + cb.dim())?;
                Ok(product(&ca, &cb))
            }
            ModelMetric::Berger { eps, lambda } => berger(c(*eps), c(*lambda)),
            ModelMetric::Nil3 => Ok(nil3()),
            ModelMetric::FlatTorus { n } => dim_ok(*n).map(|_| flat_torus(*n)),
        }
    }

    /// Documented constant scalar curvature of the model.
    pub fn scalar_curvature(&self) -> f64 {
        match self {
            ModelMetric::Euclidean { .. } | ModelMetric::FlatTorus { .. } => 0.0,
            ModelMetric::SpherePolar { n, radius } | ModelMetric::SphereStereographic { n, radius } => {
                (n * (n - 1)) as f64 / (radius * radius)
            }
            ModelMetric::HyperbolicBall { n } | ModelMetric::HyperbolicHalfspace { n } => -((n * (n - 1)) as f64),
            ModelMetric::Product(a, b) => a.scalar_curvature() + b.scalar_curvature(),
            ModelMetric::Berger { eps, lambda } => 2.0 - eps * eps * lambda * lambda / 2.0,
            ModelMetric::Nil3 => -0.5,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelMetric::Euclidean { n }
            | ModelMetric::SpherePolar { n, .. }
            | ModelMetric::SphereStereographic { n, .. }
            | ModelMetric::HyperbolicBall { n }
            | ModelMetric::HyperbolicHalfspace { n }
            | ModelMetric::FlatTorus { n } => *n,
            ModelMetric::Product(a, b) => a.dim() + b.dim(),
            ModelMetric::Berger { .. } | ModelMetric::Nil3 => 3,
        }
    }
}

/// Builds a catalog chart from its enum description.
pub fn model_metric<T: Real>(spec: &ModelMetric) -> Result<MetricChart<T>> {
    spec.build()
}

impl fmt::Display for ModelMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelMetric::Euclidean { n } => write!(f, "euclidean({n})"),
            ModelMetric::SpherePolar { n, radius } => write!(f, "sphere_polar({n},{radius})"),
            ModelMetric::SphereStereographic { n, radius } => write!(f, "sphere_stereographic({n},{radius})"),
            ModelMetric::HyperbolicBall { n } => write!(f, "hyperbolic_ball({n})"),
            ModelMetric::HyperbolicHalfspace { n } => write!(f, "hyperbolic_halfspace({n})"),
            ModelMetric::Product(a, b) => write!(f, "product({a},{b})"),
            ModelMetric::Berger { eps, lambda } => write!(f, "berger({eps},{lambda})"),
            ModelMetric::Nil3 => write!(f, "nil3"),
            ModelMetric::FlatTorus { n } => write!(f, "flat_torus({n})"),
        }
    }
}

impl FromStr for ModelMetric {
    type Err = GeomError;

    /// Parses names such as `sphere_polar(4,1)` or `product(hyperbolic_ball(2),sphere_polar(2,1))`.
    fn from_str(s: &str) -> Result<ModelMetric> {
        let s = s.trim();
        let bad = || GeomError::InvalidParameter(format!("cannot parse metric '{s}'"));
        let (name, args) = match s.find('(') {
            Some(p) if s.ends_with(')') => (&s[..p], split_args(&s[p + 1..s.len() - 1])),
            None => (s, Vec::new()),
            _ => return Err(bad()),
        };
        let uint = |i: usize| -> Result<usize> { args.get(i).ok_or_else(bad)?.trim().parse().map_err(|_| bad()) };
        let real = |i: usize, default: f64| -> Result<f64> {
            match args.get(i) {
                Some(a) => a.trim().parse().map_err(|_| bad()),
                None => Ok(default),
            }
        };
        let m = match name.trim() {
            "euclidean" => ModelMetric::Euclidean { n: uint(0)? },
            "sphere_polar" => ModelMetric::SpherePolar { n: uint(0)?, radius: real(1, 1.0)? },
            "sphere_stereographic" => ModelMetric::SphereStereographic { n: uint(0)?, radius: real(1, 1.0)? },
            "hyperbolic_ball" => ModelMetric::HyperbolicBall { n: uint(0)? },
            "hyperbolic_halfspace" => ModelMetric::HyperbolicHalfspace { n: uint(0)? },
            "product" => {
                if args.len() != 2 {
                    return Err(bad());
                }
                ModelMetric::Product(Box::new(args[0].parse()?), Box::new(args[1].parse()?))
            }
            "berger" => ModelMetric::Berger { eps: real(0, 1.0)?, lambda: real(1, 1.0)? },
            "nil3" => ModelMetric::Nil3,
            "flat_torus" => ModelMetric::FlatTorus { n: uint(0)? },
            _ => return Err(bad()),
        };
        match &m {
            ModelMetric::SpherePolar { radius, .. } | ModelMetric::SphereStereographic { radius, .. }
                if !(*radius > 0.0) =>
            {
                Err(GeomError::InvalidParameter(format!("radius must be positive in '{s}'")))
            }
            ModelMetric::Berger { eps, .. } if !(*eps > 0.0) => {
                Err(GeomError::InvalidParameter(format!("eps must be positive in '{s}'")))
            }
            _ => Ok(m),
        }
    }
}

fn split_args(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
            }
            _ => cur.push(ch),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out
}

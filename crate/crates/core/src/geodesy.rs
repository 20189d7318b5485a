//! Geodesics, the exponential map and volumes of small geodesic balls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{GeomError, Result};
use crate::globalint::{gauss_gegenbauer, gauss_legendre, volume_element};
use crate::linalg;
use crate::scalar::{c, cn, to_f64, Real};
use crate::tensorcore::{curvature_at, pipeline, scalar_curvature_laplacian, MetricChart};

/// Default absolute and relative tolerance of the geodesic integrator.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicState<T> {
    pub position: Vec<T>,
    pub velocity: Vec<T>,
    pub t: T,
    pub steps: usize,
    pub rejected: usize,
    /// Largest accepted normalized local error estimate.
    pub max_error: T,
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

struct Stepper<T> {
    tol: T,
    h: T,
    steps: usize,
    rejected: usize,
    max_error: T,
}

impl<T: Real> Stepper<T> {
    fn new(tol: T, h: T) -> Stepper<T> {
        Stepper { tol, h, steps: 0, rejected: 0, max_error: T::zero() }
    }

    /// Advances the autonomous system y' = f(y) from t to t_end.
    fn run<F>(&mut self, f: &F, y: &mut Vec<T>, t: &mut T, t_end: T) -> Result<()>
    where
        F: Fn(&[T]) -> Result<Vec<T>>,
    {
        let m = y.len();
        let mut k1 = f(y)?;
        while *t < t_end {
            let mut h = self.h.min(t_end - *t);
            if h < c::<T>(1e-14) * t.abs().max(T::one()) && t_end - *t > h {
                return Err(GeomError::StepUnderflow(to_f64(*t)));
            }
            let last = h >= t_end - *t;
            if last {
                h = t_end - *t;
            }
            let mut ks = vec![k1.clone()];
            let mut stage_err = None;
            for row in A.iter() {
                let yi: Vec<T> = (0..m)
                    .map(|i| {
                        let mut s = y[i];
                        for (j, kj) in ks.iter().enumerate() {
                            if row[j] != 0.0 {
                                s += h * c::<T>(row[j]) * kj[i];
                            }
                        }
                        s
                    })
                    .collect();
                match f(&yi) {
                    Ok(k) => ks.push(k),
                    Err(e @ GeomError::DomainExit { .. }) => {
                        // A trial stage left the domain: retry with a smaller step.
                        stage_err = Some(e);
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if let Some(e) = stage_err {
                self.h = h * c(0.25);
                self.rejected += 1;
                if self.h < c::<T>(1e-14) * t.abs().max(T::one()) {
                    return Err(e);
                }
                continue;
            }
            // ks[6] is f at the 5th-order solution (FSAL).
            let y5: Vec<T> = (0..m)
                .map(|i| y[i] + h * (0..6).map(|j| c::<T>(B5[j]) * ks[j][i]).fold(T::zero(), |a, b| a + b))
                .collect();
            let mut err = T::zero();
            for i in 0..m {
                let y4 = y[i] + h * (0..7).map(|j| c::<T>(B4[j]) * ks[j][i]).fold(T::zero(), |a, b| a + b);
                let sc = self.tol + self.tol * y[i].abs().max(y5[i].abs());
                err = err.max((y5[i] - y4).abs() / sc);
            }
            let factor = if err == T::zero() { c(5.0) } else { (c::<T>(0.9) * err.powf(c(-0.2))).min(c(5.0)).max(c(0.2)) };
            if err <= T::one() {
                *y = y5;
                *t = if last { t_end } else { *t + h };
                k1 = ks.pop().expect("seven stages");
                self.steps += 1;
                self.max_error = self.max_error.max(err);
                if !last {
                    self.h = h * factor;
                }
            } else {
                self.rejected += 1;
                self.h = h * factor;
            }
        }
        Ok(())
    }
}

fn domain_exit<T: Real>(x: &[T], t: T) -> GeomError {
    GeomError::DomainExit { point: x.iter().map(|v| to_f64(*v)).collect(), t: to_f64(t) }
}

fn geodesic_rhs<T: Real>(chart: &MetricChart<T>, y: &[T]) -> Result<Vec<T>> {
    let n = chart.dim();
    let (x, v) = y.split_at(n);
    if !chart.domain().contains(x) {
        return Err(domain_exit(x, T::nan()));
    }
    let (_, _, gamma) = crate::tensorcore::christoffel_at(chart, x)?;
    let mut out = v.to_vec();
    for k in 0..n {
        let mut a = T::zero();
        for i in 0..n {
            for j in 0..n {
                a += gamma[(k * n + i) * n + j] * v[i] * v[j];
            }
        }
        out.push(-a);
    }
    Ok(out)
}

/// Integrates γ'' + Γ(γ', γ') = 0 from (x, v) over [0, t] with DoPri5(4).
pub fn geodesic_shoot<T: Real>(chart: &MetricChart<T>, x: &[T], v: &[T], t: T, tol: T) -> Result<GeodesicState<T>> {
    let n = chart.dim();
    if v.len() != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: v.len() });
    }
    chart.domain().normalize(x)?;
    let mut y: Vec<T> = x.iter().chain(v).copied().collect();
    let mut s = T::zero();
    let speed = v.iter().map(|a| *a * *a).fold(T::zero(), |a, b| a + b).sqrt().max(c(1e-3));
    let mut st = Stepper::new(tol, c::<T>(0.05) / speed);
    st.run(&|y: &[T]| geodesic_rhs(chart, y), &mut y, &mut s, t).map_err(|e| match e {
        GeomError::DomainExit { point, .. } => GeomError::DomainExit { point, t: to_f64(s) },
        e => e,
    })?;
    let position = chart.domain().normalize(&y[..n]).map_err(|_| domain_exit(&y[..n], s))?;
    Ok(GeodesicState {
        position,
        velocity: y[n..].to_vec(),
        t: s,
        steps: st.steps,
        rejected: st.rejected,
        max_error: st.max_error,
    })
}

/// g(v, v) at x.
pub fn speed2<T: Real>(chart: &MetricChart<T>, x: &[T], v: &[T]) -> Result<T> {
    let g = chart.metric_at(x)?;
    Ok(linalg::inner(&g, chart.dim(), v, v))
}

/// Γ and ∂_m Γ^k_ij at x, the latter at `((m*n + k)*n + i)*n + j`.
fn christoffel_with_derivative<T: Real>(chart: &MetricChart<T>, x: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let n = chart.dim();
    let d = pipeline::derivs_from_jets(&chart.metric_jet(x, 2)?, n)?;
    let ginv = pipeline::invert::<T, T>(&d.g, n)?;
    let dg = |a: usize, i: usize, j: usize| d.dg[(a * n + i) * n + j];
    let ddg = |a: usize, b: usize, i: usize, j: usize| d.ddg[((a * n + b) * n + i) * n + j];
    // Γ_lij and ∂_m Γ_lij
    let mut low = vec![T::zero(); n * n * n];
    let mut dlow = vec![T::zero(); n * n * n * n];
    let half = c::<T>(0.5);
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                low[(l * n + i) * n + j] = half * (dg(i, l, j) + dg(j, l, i) - dg(l, i, j));
                for m in 0..n {
                    dlow[((m * n + l) * n + i) * n + j] = half * (ddg(m, i, l, j) + ddg(m, j, l, i) - ddg(m, l, i, j));
                }
            }
        }
    }
    // ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}
    let mut dginv = vec![T::zero(); n * n * n];
    for m in 0..n {
        for k in 0..n {
            for l in 0..n {
                let mut s = T::zero();
                for a in 0..n {
                    for b in 0..n {
                        s += ginv[k * n + a] * dg(m, a, b) * ginv[b * n + l];
                    }
                }
                dginv[(m * n + k) * n + l] = -s;
            }
        }
    }
    let mut gamma = vec![T::zero(); n * n * n];
    let mut dgamma = vec![T::zero(); n * n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for l in 0..n {
                    s += ginv[k * n + l] * low[(l * n + i) * n + j];
                }
                gamma[(k * n + i) * n + j] = s;
                for m in 0..n {
                    let mut s = T::zero();
                    for l in 0..n {
                        s += dginv[(m * n + k) * n + l] * low[(l * n + i) * n + j]
                            + ginv[k * n + l] * dlow[((m * n + l) * n + i) * n + j];
                    }
                    dgamma[((m * n + k) * n + i) * n + j] = s;
                }
            }
        }
    }
    Ok((gamma, dgamma))
}

/// Geodesic with Jacobi fields: state (x, v, J, J'), J and J' row-major n×n
/// with column c the field started from J(0) = 0, J'(0) = e_c.
fn jacobi_rhs<T: Real>(chart: &MetricChart<T>, y: &[T]) -> Result<Vec<T>> {
    let n = chart.dim();
    let x = &y[..n];
    let v = &y[n..2 * n];
    let jm = &y[2 * n..2 * n + n * n];
    let jp = &y[2 * n + n * n..];
    if !chart.domain().contains(x) {
        return Err(domain_exit(x, T::nan()));
    }
    let (gamma, dgamma) = christoffel_with_derivative(chart, x)?;
    let mut out = Vec::with_capacity(y.len());
    out.extend_from_slice(v);
    for k in 0..n {
        let mut a = T::zero();
        for i in 0..n {
            for j in 0..n {
                a += gamma[(k * n + i) * n + j] * v[i] * v[j];
            }
        }
        out.push(-a);
    }
    out.extend_from_slice(jp);
    // J'' = −∂_m Γ^k_ij v^i v^j J^m − 2 Γ^k_ij v^i J'^j
    let mut dgvv = vec![T::zero(); n * n];
    let mut gv = vec![T::zero(); n * n];
    for k in 0..n {
        for m in 0..n {
            let mut s = T::zero();
            for i in 0..n {
                for j in 0..n {
                    s += dgamma[((m * n + k) * n + i) * n + j] * v[i] * v[j];
                }
            }
            dgvv[k * n + m] = s;
        }
        for j in 0..n {
            let mut s = T::zero();
            for i in 0..n {
                s += gamma[(k * n + i) * n + j] * v[i];
            }
            gv[k * n + j] = s;
        }
    }
    for k in 0..n {
        for col in 0..n {
            let mut s = T::zero();
            for m in 0..n {
                s += dgvv[k * n + m] * jm[m * n + col] + c::<T>(2.0) * gv[k * n + m] * jp[m * n + col];
            }
            out.push(-s);
        }
    }
    Ok(out)
}

/// Options of the polar ball-volume quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarOptions {
    pub radial_nodes: usize,
    /// Gauss nodes per polar angle; the circle uses twice as many trapezoid nodes.
    pub angle_nodes: usize,
    pub tol: f64,
}

impl Default for PolarOptions {
    fn default() -> Self {
        PolarOptions { radial_nodes: 10, angle_nodes: 4, tol: 1e-14 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BallMethod {
    Polar(PolarOptions),
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallVolume<T> {
    pub value: T,
    /// Standard error for Monte Carlo; 0 for the polar rule.
    pub std_error: T,
}

/// Volume of the Euclidean unit n-ball.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Orthonormal frame at x as columns of a row-major n×n matrix.
fn frame_at<T: Real>(chart: &MetricChart<T>, x: &[T]) -> Result<Vec<T>> {
    let n = chart.dim();
    let g = chart.metric_at(x)?;
    Ok(linalg::orthonormal_frame(&g, n))
}

/// Volume density of exp_x along the unit ray in direction `dir` (frame
/// coordinates) at the radii `rho` (increasing): √det g(γ(ρ))·|det J(ρ)|.
fn ray_densities<T: Real>(chart: &MetricChart<T>, x: &[T], frame: &[T], dir: &[T], rho: &[T], tol: T) -> Result<Vec<T>> {
    let n = chart.dim();
    let mut y = Vec::with_capacity(2 * n + 2 * n * n);
    y.extend_from_slice(x);
    for k in 0..n {
        y.push((0..n).map(|a| frame[k * n + a] * dir[a]).fold(T::zero(), |s, v| s + v));
    }
    y.extend(std::iter::repeat_n(T::zero(), n * n));
    y.extend_from_slice(frame);
    let mut t = T::zero();
    let mut st = Stepper::new(tol, c(0.02));
    let f = |y: &[T]| jacobi_rhs(chart, y);
    let mut out = Vec::with_capacity(rho.len());
    for &r in rho {
        st.run(&f, &mut y, &mut t, r).map_err(|e| match e {
            GeomError::DomainExit { point, .. } => GeomError::DomainExit { point, t: to_f64(t) },
            e => e,
        })?;
        let vol = volume_element(&chart.metric_at(&y[..n])?, n)?;
        out.push(vol * linalg::determinant(&y[2 * n..2 * n + n * n], n).abs());
    }
    Ok(out)
}

/// Unit directions on S^{n−1} in frame coordinates with quadrature weights:
/// nested Gauss rules in t = cos θ for the weights (1 − t²)^{(d−3)/2} and a
/// 2k-point trapezoid on the circle. Exact for polynomials of degree < 2k.
fn sphere_directions<T: Real>(n: usize, k: usize) -> Vec<(Vec<T>, T)> {
    if n == 1 {
        return vec![(vec![T::one()], T::one()), (vec![-T::one()], T::one())];
    }
    if n == 2 {
        let m = 2 * k;
        let h = 2.0 * std::f64::consts::PI / m as f64;
        return (0..m)
            .map(|i| {
                let a = h * i as f64;
                (vec![c::<T>(a.cos()), c::<T>(a.sin())], c::<T>(h))
            })
            .collect();
    }
    let (ts, ws) = gauss_gegenbauer(k, (n as f64 - 3.0) / 2.0);
    let inner = sphere_directions::<T>(n - 1, k);
    let mut out = Vec::with_capacity(k * inner.len());
    for (t, w) in ts.iter().zip(&ws) {
        let s = c::<T>((1.0 - t * t).sqrt());
        for (d, wi) in &inner {
            let mut dir = Vec::with_capacity(n);
            dir.push(c::<T>(*t));
            dir.extend(d.iter().map(|v| *v * s));
            out.push((dir, *wi * c::<T>(*w)));
        }
    }
    out
}

fn check_radius<T: Real>(chart: &MetricChart<T>, r: T) -> Result<()> {
    if !(r > T::zero()) {
        return Err(GeomError::InvalidParameter(format!("radius must be positive, got {}", to_f64(r))));
    }
    if r >= chart.injectivity_guard() {
        return Err(GeomError::InvalidParameter(format!(
            "radius {} exceeds the injectivity guard {} of {}",
            to_f64(r),
            to_f64(chart.injectivity_guard()),
            chart.name()
        )));
    }
    Ok(())
}

/// Vol(B_r(x)) by integrating the Jacobian of exp_x in polar coordinates or by
/// Monte Carlo over the tangent ball.
pub fn ball_volume<T: Real>(chart: &MetricChart<T>, x: &[T], r: T, method: BallMethod) -> Result<BallVolume<T>> {
    check_radius(chart, r)?;
    let n = chart.dim();
    let frame = frame_at(chart, x)?;
    match method {
        BallMethod::Polar(o) => {
            let (gx, gw) = gauss_legendre(o.radial_nodes);
            let half = r * c(0.5);
            let rho: Vec<T> = gx.iter().map(|a| half * (T::one() + c(*a))).collect();
            let dirs = sphere_directions::<T>(n, o.angle_nodes);
            let tol = c::<T>(o.tol);
            let per: Vec<Result<T>> = dirs
                .par_iter()
                .map(|(d, w)| {
                    let dens = ray_densities(chart, x, &frame, d, &rho, tol)?;
                    let s = dens.iter().zip(&rho).zip(&gw).fold(T::zero(), |s, ((v, p), q)| s + *v / *p * c::<T>(*q));
                    Ok(*w * s * half)
                })
                .collect();
            let mut total = T::zero();
            for v in per {
                total += v?;
            }
            Ok(BallVolume { value: total, std_error: T::zero() })
        }
        BallMethod::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(GeomError::InvalidParameter("need at least 2 samples".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draws: Vec<(Vec<T>, T)> = (0..samples)
                .map(|_| {
                    let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let u: f64 = rng.random::<f64>();
                    let rad = to_f64(r) * u.powf(1.0 / n as f64);
                    (g.iter().map(|v| c::<T>(v / norm)).collect(), c::<T>(rad.max(1e-12)))
                })
                .collect();
            let tol = c::<T>(1e-12);
            let vals: Vec<Result<T>> = draws
                .par_iter()
                .map(|(d, rad)| {
                    let dens = ray_densities(chart, x, &frame, d, &[*rad], tol)?[0];
                    Ok(dens / rad.powi(n as i32))
                })
                .collect();
            let mut v = Vec::with_capacity(samples);
            for a in vals {
                v.push(a?);
            }
            let nn = cn::<T>(samples);
            let mean = v.iter().fold(T::zero(), |s, a| s + *a) / nn;
            let var = v.iter().fold(T::zero(), |s, a| s + (*a - mean) * (*a - mean)) / (nn - T::one());
            let ve = c::<T>(unit_ball_volume(n)) * r.powi(n as i32);
            Ok(BallVolume { value: ve * mean, std_error: ve * (var / nn).sqrt() })
        }
    }
}

/// Coefficients (c₂, c₄) with Vol(B_r) ≈ Vol_E(B_r)(1 + c₂r² + c₄r⁴):
/// c₂ = −Sc/(6(n+2)), c₄ = (−3|Rm|² + 8|Ric|² + 5Sc² − 18ΔSc)/(360(n+2)(n+4)).
pub fn gray_coefficients<T: Real>(chart: &MetricChart<T>, x: &[T]) -> Result<(T, T)> {
    let n = chart.dim() as f64;
    let cp = curvature_at(chart, x)?;
    let lap = scalar_curvature_laplacian(chart, x)?;
    let sc = cp.scalar;
    let c2 = -sc / c::<T>(6.0 * (n + 2.0));
    let q = -c::<T>(3.0) * cp.norms.rm2 + c::<T>(8.0) * cp.norms.ric2 + c::<T>(5.0) * sc * sc - c::<T>(18.0) * gray_laplacian_sign::<T>() * lap;
    Ok((c2, q / c::<T>(360.0 * (n + 2.0) * (n + 4.0))))
}

/// Sign relating the expansion's ΔSc to the positive Laplacian used here.
fn gray_laplacian_sign<T: Real>() -> T {
    -T::one()
}

/// Two-correction truncation of the small-ball volume expansion.
pub fn gray_expansion<T: Real>(chart: &MetricChart<T>, x: &[T], r: T) -> Result<T> {
    let (c2, c4) = gray_coefficients(chart, x)?;
    let r2 = r * r;
    Ok(c::<T>(unit_ball_volume(chart.dim())) * r.powi(chart.dim() as i32) * (T::one() + c2 * r2 + c4 * r2 * r2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionRow<T> {
    pub r: T,
    pub ball_volume: T,
    pub gray: T,
    pub euclidean: T,
    /// |ball − gray| / (Vol_E(B_r) r⁶)
    pub ratio: T,
}

/// Ball volume against the truncated expansion at each radius.
pub fn expansion_compare<T: Real>(chart: &MetricChart<T>, x: &[T], radii: &[T], opts: PolarOptions) -> Result<Vec<ExpansionRow<T>>> {
    let n = chart.dim();
    radii
        .iter()
        .map(|&r| {
            let ball = ball_volume(chart, x, r, BallMethod::Polar(opts))?.value;
            let gray = gray_expansion(chart, x, r)?;
            let euclidean = c::<T>(unit_ball_volume(n)) * r.powi(n as i32);
            Ok(ExpansionRow { r, ball_volume: ball, gray, euclidean, ratio: (ball - gray).abs() / (euclidean * r.powi(6)) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_weights_cover_the_sphere() {
        for n in 2..6 {
            let area = 2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / libm_gamma(n as f64 / 2.0);
            let s: f64 = sphere_directions::<f64>(n, 6).iter().map(|(_, w)| w).sum();
            assert!((s - area).abs() < 1e-10 * area, "n={n}");
            for (d, _) in sphere_directions::<f64>(n, 3) {
                assert!((d.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    fn libm_gamma(x: f64) -> f64 {
        // Γ at integers and half-integers.
        if (x - x.round()).abs() < 1e-12 {
            (1..x.round() as u64).map(|k| k as f64).product()
        } else {
            let mut v = std::f64::consts::PI.sqrt();
            let mut a = 0.5;
            while a < x - 1e-9 {
                v *= a;
                a += 1.0;
            }
            v
        }
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
    }
}

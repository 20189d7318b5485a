//! Normalized curvature functionals, sharp Sobolev and Hölder checks.

use super::{eval_plain, integrate, require_closed, Atlas, QuadratureGrid};
use crate::conformal::exp_scale;
use crate::error::{GeomError, Result};
use crate::scalar::{c, cn, to_f64, Real};
use crate::tensorcore::{curvature_at, gradient_norm2, ScalarFn};

fn pulled<T: Real>(atlas: &Atlas<T>, f: &ScalarFn<T>) -> Vec<ScalarFn<T>> {
    (0..atlas.charts.len()).map(|i| atlas.field_on(i, f)).collect()
}

fn positive<T: Real>(value: T, x: &[T]) -> Result<T> {
    if value > T::zero() {
        Ok(value)
    } else {
        Err(GeomError::NonPositiveFactor { value: to_f64(value), point: x.iter().map(|v| to_f64(*v)).collect() })
    }
}

fn need_dim3<T: Real>(atlas: &Atlas<T>) -> Result<usize> {
    let n = atlas.dim();
    if n < 3 {
        return Err(GeomError::InvalidParameter(format!("dimension {n} < 3")));
    }
    Ok(n)
}

/// S(g) = ∫Sc dμ / Vol^{(n−2)/n}.
pub fn hilbert_einstein<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid) -> Result<T> {
    require_closed(atlas)?;
    let n = cn::<T>(atlas.dim());
    let v = integrate(atlas, grid, 2, |node| Ok(vec![curvature_at(&node.atlas_chart.chart, &node.x)?.scalar, T::one()]))?;
    Ok(v[0] / v[1].powf((n - c(2.0)) / n))
}

/// ∫ (u, |∇u|², Sc·u², u^p, u²) for p = 2n/(n−2).
fn quotient_terms<T: Real>(atlas: &Atlas<T>, u: &ScalarFn<T>, grid: &QuadratureGrid) -> Result<[T; 4]> {
    let n = need_dim3(atlas)?;
    let p = c::<T>(2.0 * n as f64 / (n as f64 - 2.0));
    let fs = pulled(atlas, u);
    let v = integrate(atlas, grid, 4, |node| {
        let chart = &node.atlas_chart.chart;
        let f = &fs[node.chart];
        let val = positive(eval_plain(f, &node.x)?, &node.x)?;
        let g2 = gradient_norm2(chart, f, &node.x)?;
        let sc = curvature_at(chart, &node.x)?.scalar;
        Ok(vec![g2, sc * val * val, val.powf(p), val * val])
    })?;
    Ok([v[0], v[1], v[2], v[3]])
}

/// (a∫|∇u|² + ∫Sc u²) / (∫u^p)^{2/p}, a = 4(n−1)/(n−2), p = 2n/(n−2).
pub fn yamabe_quotient<T: Real>(atlas: &Atlas<T>, u: &ScalarFn<T>, grid: &QuadratureGrid) -> Result<T> {
    require_closed(atlas)?;
    let n = need_dim3(atlas)? as f64;
    let a = c::<T>(4.0 * (n - 1.0) / (n - 2.0));
    let p = c::<T>(2.0 * n / (n - 2.0));
    let [g2, scu2, up, _] = quotient_terms(atlas, u, grid)?;
    Ok((a * g2 + scu2) / up.powf(c::<T>(2.0) / p))
}

/// ∫(Sc u² + 4|∇u|²) / ∫u².
pub fn rayleigh_lambda<T: Real>(atlas: &Atlas<T>, u: &ScalarFn<T>, grid: &QuadratureGrid) -> Result<T> {
    require_closed(atlas)?;
    let fs = pulled(atlas, u);
    let v = integrate(atlas, grid, 2, |node| {
        let chart = &node.atlas_chart.chart;
        let f = &fs[node.chart];
        let val = positive(eval_plain(f, &node.x)?, &node.x)?;
        let g2 = gradient_norm2(chart, f, &node.x)?;
        let sc = curvature_at(chart, &node.x)?.scalar;
        Ok(vec![sc * val * val + c::<T>(4.0) * g2, val * val])
    })?;
    Ok(v[0] / v[1])
}

/// ∫|Sc|^{n/2} dμ.
pub fn l_halfpower<T: Real>(atlas: &Atlas<T>, grid: &QuadratureGrid) -> Result<T> {
    require_closed(atlas)?;
    let h = cn::<T>(atlas.dim()) * c(0.5);
    Ok(integrate(atlas, grid, 1, |node| Ok(vec![curvature_at(&node.atlas_chart.chart, &node.x)?.scalar.abs().powf(h)]))?[0])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevReport<T> {
    /// (∫|u|^p)^{2/p}
    pub lhs: T,
    /// 4/(n(n−2)Vol^{2/n}) ∫|∇u|² + Vol^{−2/n} ∫u²
    pub rhs: T,
    /// rhs − lhs, divided by ∫u²/Vol^{2/n}.
    pub slack: T,
}

/// Sharp Sobolev inequality on a round sphere atlas; the slack is
/// normalized by the L² term so it does not depend on the scale of u.
pub fn sobolev_check<T: Real>(atlas: &Atlas<T>, u: &ScalarFn<T>, grid: &QuadratureGrid) -> Result<SobolevReport<T>> {
    let n = need_dim3(atlas)? as f64;
    let p = c::<T>(2.0 * n / (n - 2.0));
    let fs = pulled(atlas, u);
    let v = integrate(atlas, grid, 4, |node| {
        let chart = &node.atlas_chart.chart;
        let f = &fs[node.chart];
        let val = eval_plain(f, &node.x)?;
        let g2 = gradient_norm2(chart, f, &node.x)?;
        Ok(vec![g2, val * val, val.abs().powf(p), T::one()])
    })?;
    let vol_pow = v[3].powf(c(2.0 / n));
    let lhs = v[2].powf(c::<T>(2.0) / p);
    let l2 = v[1] / vol_pow;
    let rhs = c::<T>(4.0 / (n * (n - 2.0))) * v[0] / vol_pow + l2;
    Ok(SobolevReport { lhs, rhs, slack: (rhs - lhs) / l2 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderReport<T> {
    /// ∫e^{2f} dμ
    pub lhs: T,
    /// (∫e^{nf})^{2/n} Vol^{(n−2)/n}
    pub rhs: T,
    pub slack: T,
}

/// ∫e^{2f} ≤ (∫e^{nf})^{2/n} Vol^{(n−2)/n}, for arbitrary f.
pub fn holder_check<T: Real>(atlas: &Atlas<T>, f: &ScalarFn<T>, grid: &QuadratureGrid) -> Result<HolderReport<T>> {
    let n = cn::<T>(atlas.dim());
    let fs = pulled(atlas, f);
    let v = integrate(atlas, grid, 3, |node| {
        let fv = eval_plain(&fs[node.chart], &node.x)?;
        Ok(vec![(fv * c(2.0)).exp(), (fv * n).exp(), T::one()])
    })?;
    let lhs = v[0];
    let rhs = v[1].powf(c::<T>(2.0) / n) * v[2].powf((n - c(2.0)) / n);
    Ok(HolderReport { lhs, rhs, slack: rhs - lhs })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConformalVolumeReport<T> {
    pub volume: T,
    /// Vol(e^{2f}g) = ∫e^{nf} dμ.
    pub conformal_volume: T,
    pub exp2f_integral: T,
    /// ∫e^{2f} − Vol(g)
    pub exp2f_slack: T,
    /// Vol(e^{2f}g) − Vol(g)
    pub volume_slack: T,
    /// min over nodes of Sc' + R
    pub min_scalar_margin: T,
    pub holder: HolderReport<T>,
}

/// Certifies ∫e^{2f} ≥ Vol(g) and Vol(e^{2f}g) ≥ Vol(g) given Sc_g ≡ −R and
/// Sc_{e^{2f}g} ≥ −R at every node; both hypotheses are checked.
pub fn conformal_volume_check<T: Real>(
    atlas: &Atlas<T>,
    r: T,
    f: &ScalarFn<T>,
    grid: &QuadratureGrid,
) -> Result<ConformalVolumeReport<T>> {
    require_closed(atlas)?;
    let n = cn::<T>(atlas.dim());
    let fs = pulled(atlas, f);
    let scaled: Vec<_> = atlas.charts.iter().zip(&fs).map(|(ac, f)| exp_scale(&ac.chart, f)).collect();
    let tol = c::<T>(1e-8) * r.abs().max(T::one());
    let (v, worst, _) = super::integrate_tracking(atlas, grid, 3, |node| {
        let sc = curvature_at(&node.atlas_chart.chart, &node.x)?.scalar;
        if (sc + r).abs() > tol {
            return Err(GeomError::Precondition(format!(
                "scalar curvature {:.6e} differs from {:.6e} at {:?}",
                to_f64(sc),
                to_f64(-r),
                node.x.iter().map(|v| to_f64(*v)).collect::<Vec<_>>()
            )));
        }
        let sc2 = curvature_at(&scaled[node.chart], &node.x)?.scalar;
        if sc2 + r < -tol {
            return Err(GeomError::Precondition(format!(
                "conformal scalar curvature {:.6e} below {:.6e} at {:?}",
                to_f64(sc2),
                to_f64(-r),
                node.x.iter().map(|v| to_f64(*v)).collect::<Vec<_>>()
            )));
        }
        let fv = eval_plain(&fs[node.chart], &node.x)?;
        Ok((vec![T::one(), (fv * n).exp(), (fv * c(2.0)).exp()], -(sc2 + r)))
    })?;
    let margin = -worst.0;
    let holder = holder_check(atlas, f, grid)?;
    Ok(ConformalVolumeReport {
        volume: v[0],
        conformal_volume: v[1],
        exp2f_integral: v[2],
        exp2f_slack: v[2] - v[0],
        volume_slack: v[1] - v[0],
        min_scalar_margin: margin,
        holder,
    })
}

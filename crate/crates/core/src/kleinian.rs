//! Isometries of hyperbolic space in the hyperboloid model, orbit growth of
//! Schottky-type groups and estimators of the critical exponent.
//!
//! Points of H^{n+1} are vectors X ∈ R^{n+2} with Q(X) = X₁² + … + X_{n+1}² − X_{n+2}² = −1
//! and X_{n+2} ≥ 1. The ball model is identified through b ↦ (2b, 1 + |b|²)/(1 − |b|²),
//! so that dist(0, tanh(ℓ/2)e₁) = ℓ; null vectors (v, t) project to v/t on Sⁿ.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{GeomError, Result};
use crate::linalg;
use crate::scalar::{c, cn, to_f64, Real};

/// Tolerance of the Lorentz invariant, relative to max(1, max|M_ij|²).
pub const LORENTZ_TOL: f64 = 1e-10;
/// Tolerance of Q(X) = −1 for hyperboloid points, relative to max(1, X_{n+2}²).
pub const SHEET_TOL: f64 = 1e-9;
/// Compositions between two projections back onto O(n+1, 1).
pub const RENORMALIZE_EVERY: usize = 32;
/// Cluster radius below which limit points count as one.
pub const CLUSTER_RADIUS: f64 = 1e-6;
/// Fewest orbit points accepted by the critical-exponent estimators.
pub const MIN_ORBIT: usize = 500;
/// Scales whose occupied boxes exceed points / MIN_POINTS_PER_BOX are
/// undersampled and left out of the box-counting fit.
pub const MIN_POINTS_PER_BOX: usize = 20;
/// Default memory budget of the orbit enumeration in bytes.
pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;

/// Q-inner product ⟨x, y⟩ = Σ_{i<N−1} x_i y_i − x_{N−1} y_{N−1}.
pub fn lorentz_inner<T: Real>(x: &[T], y: &[T]) -> T {
    let n = x.len();
    let mut s = -x[n - 1] * y[n - 1];
    for i in 0..n - 1 {
        s += x[i] * y[i];
    }
    s
}

/// Basepoint (0, …, 0, 1) of H^{n+1} ⊂ R^{n+2}.
pub fn origin<T: Real>(n: usize) -> Vec<T> {
    let mut o = vec![T::zero(); n + 2];
    o[n + 1] = T::one();
    o
}

fn check_sheet<T: Real>(x: &[T]) -> Result<()> {
    let t = x[x.len() - 1];
    let r = lorentz_inner(x, x) + T::one();
    if !(t >= T::one() - c(SHEET_TOL)) || r.abs() > c::<T>(SHEET_TOL) * (t * t).max(T::one()) {
        return Err(GeomError::OffSheet(to_f64(r)));
    }
    Ok(())
}

/// arccosh(−⟨x, y⟩) for points on the upper sheet.
pub fn hyperbolic_distance<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(GeomError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    check_sheet(x)?;
    check_sheet(y)?;
    Ok((-lorentz_inner(x, y)).max(T::one()).acosh())
}

/// Ball-model point b (|b| < 1) on the hyperboloid.
pub fn ball_to_hyperboloid<T: Real>(b: &[T]) -> Result<Vec<T>> {
    let r2 = b.iter().fold(T::zero(), |s, v| s + *v * *v);
    if r2 >= T::one() {
        return Err(GeomError::InvalidParameter(format!("|b|² = {} is not inside the unit ball", to_f64(r2))));
    }
    let d = T::one() - r2;
    let mut x: Vec<T> = b.iter().map(|v| c::<T>(2.0) * *v / d).collect();
    x.push((T::one() + r2) / d);
    Ok(x)
}

/// Inverse of [`ball_to_hyperboloid`].
pub fn hyperboloid_to_ball<T: Real>(x: &[T]) -> Result<Vec<T>> {
    check_sheet(x)?;
    let t = x[x.len() - 1];
    Ok(x[..x.len() - 1].iter().map(|v| *v / (T::one() + t)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LorentzIsometry<T> {
    /// Matrix size n + 2.
    pub size: usize,
    /// Row-major.
    pub matrix: Vec<T>,
}

impl<T: Real> LorentzIsometry<T> {
    pub fn identity(n: usize) -> LorentzIsometry<T> {
        LorentzIsometry { size: n + 2, matrix: linalg::identity(n + 2) }
    }

    /// Validates the invariant and the sheet condition.
    pub fn new(size: usize, matrix: Vec<T>) -> Result<LorentzIsometry<T>> {
        if size < 3 || matrix.len() != size * size {
            return Err(GeomError::DimensionMismatch { expected: size * size, got: matrix.len() });
        }
        let m = LorentzIsometry { size, matrix };
        let d = m.defect();
        if d > c(LORENTZ_TOL) {
            return Err(GeomError::InvalidParameter(format!("matrix violates the Lorentz invariant by {:e}", to_f64(d))));
        }
        if m.matrix[size * size - 1] < T::one() - c(LORENTZ_TOL) {
            return Err(GeomError::InvalidParameter("matrix swaps the two sheets".into()));
        }
        Ok(m)
    }

    /// Hyperbolic dimension n + 1.
    pub fn hyperbolic_dim(&self) -> usize {
        self.size - 1
    }

    fn at(&self, i: usize, j: usize) -> T {
        self.matrix[i * self.size + j]
    }

    /// max|MᵀJM − J| / max(1, max|M_ij|²).
    pub fn defect(&self) -> T {
        let n = self.size;
        let scale = self.matrix.iter().fold(T::one(), |s, v| s.max(v.abs()));
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                let mut s = T::zero();
                for k in 0..n {
                    let jk = if k == n - 1 { -T::one() } else { T::one() };
                    s += self.at(k, i) * jk * self.at(k, j);
                }
                let target = if i != j {
                    T::zero()
                } else if i == n - 1 {
                    -T::one()
                } else {
                    T::one()
                };
                worst = worst.max((s - target).abs());
            }
        }
        worst / (scale * scale)
    }

    pub fn compose(&self, other: &LorentzIsometry<T>) -> LorentzIsometry<T> {
        LorentzIsometry { size: self.size, matrix: linalg::matmul(&self.matrix, &other.matrix, self.size, self.size, self.size) }
    }

    /// J Mᵀ J.
    pub fn inverse(&self) -> LorentzIsometry<T> {
        let n = self.size;
        let mut m = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let s = if (i == n - 1) != (j == n - 1) { -T::one() } else { T::one() };
                m[i * n + j] = s * self.at(j, i);
            }
        }
        LorentzIsometry { size: n, matrix: m }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.size;
        (0..n).map(|i| (0..n).fold(T::zero(), |s, j| s + self.at(i, j) * x[j])).collect()
    }

    /// One step of the iteration M ← M(3I − JMᵀJM)/2, which projects a
    /// nearly-Lorentz matrix back onto O(n+1, 1) to second order. Skipped when
    /// max|M_ij|²·ε > 1e−6, where JMᵀJM is dominated by rounding, and kept
    /// only if it lowers the defect.
    pub fn renormalize(&self) -> LorentzIsometry<T> {
        let scale = self.matrix.iter().fold(T::zero(), |s, v| s.max(v.abs()));
        if !(scale * scale * T::epsilon() <= c(1e-6)) {
            return self.clone();
        }
        let next = self.newton_step();
        let (d0, d1) = (self.defect(), next.defect());
        if d1 < d0 {
            next
        } else {
            self.clone()
        }
    }

    fn newton_step(&self) -> LorentzIsometry<T> {
        let n = self.size;
        let x = self.inverse().compose(self);
        let mut k = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { c::<T>(3.0) } else { T::zero() };
                k[i * n + j] = (id - x.matrix[i * n + j]) * c(0.5);
            }
        }
        LorentzIsometry { size: n, matrix: linalg::matmul(&self.matrix, &k, n, n, n) }
    }

    pub fn power(&self, k: i64) -> LorentzIsometry<T> {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = LorentzIsometry { size: self.size, matrix: linalg::identity(self.size) };
        for i in 0..k.unsigned_abs() {
            out = out.compose(&base);
            if (i + 1) % RENORMALIZE_EVERY as u64 == 0 {
                out = out.renormalize();
            }
        }
        out
    }

    /// Dominant eigenvalue and eigenvector by power iteration from the basepoint.
    fn dominant(&self) -> (T, Vec<T>) {
        let n = self.size;
        let mut v: Vec<T> = (0..n).map(|i| if i == n - 1 { T::one() } else { c::<T>(0.1 / (i + 2) as f64) }).collect();
        let mut lambda = T::one();
        for _ in 0..2000 {
            let w = self.apply(&v);
            let norm = w.iter().fold(T::zero(), |s, a| s + *a * *a).sqrt();
            let next: Vec<T> = w.iter().map(|a| *a / norm).collect();
            let diff = next.iter().zip(&v).fold(T::zero(), |s, (a, b)| s.max((*a - *b).abs()));
            lambda = norm;
            v = next;
            if diff < c::<T>(4.0) * T::epsilon() {
                break;
            }
        }
        (lambda, v)
    }

    /// ln of the spectral radius: the translation length of a loxodromic
    /// element, 0 for elliptic and parabolic ones (up to iteration error).
    pub fn translation_length(&self) -> T {
        self.dominant().0.max(T::one()).ln()
    }

    /// Attracting fixed point on Sⁿ, or `None` for non-loxodromic elements.
    pub fn attracting_fixed_point(&self) -> Option<Vec<T>> {
        let (lambda, v) = self.dominant();
        if lambda < T::one() + c(1e-6) {
            return None;
        }
        let t = v[self.size - 1];
        if t.abs() < T::epsilon() {
            return None;
        }
        Some(v[..self.size - 1].iter().map(|a| *a / t).collect())
    }
}

fn unit_check<T: Real>(p: &[T]) -> Result<()> {
    let r = p.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
    if (r - T::one()).abs() > c(1e-12) {
        return Err(GeomError::InvalidParameter(format!("boundary point has norm {}", to_f64(r))));
    }
    Ok(())
}

/// Loxodromic translation of length ℓ along the geodesic from `repelling` to
/// `attracting` (unit vectors in R^{n+1}): A ↦ e^ℓ A, B ↦ e^{−ℓ} B on the null
/// lines A = (a, 1), B = (b, 1), identity on their Q-orthogonal complement.
pub fn make_translation<T: Real>(length: T, attracting: &[T], repelling: &[T]) -> Result<LorentzIsometry<T>> {
    if !(length > T::zero()) {
        return Err(GeomError::InvalidParameter(format!("translation length must be positive, got {}", to_f64(length))));
    }
    if attracting.len() != repelling.len() || attracting.len() < 2 {
        return Err(GeomError::DimensionMismatch { expected: attracting.len(), got: repelling.len() });
    }
    unit_check(attracting)?;
    unit_check(repelling)?;
    let sep = attracting.iter().zip(repelling).fold(T::zero(), |s, (a, b)| s + (*a - *b) * (*a - *b)).sqrt();
    if sep < c(1e-9) {
        return Err(GeomError::InvalidParameter("axis endpoints coincide".into()));
    }
    let a: Vec<T> = attracting.iter().copied().chain([T::one()]).collect();
    let b: Vec<T> = repelling.iter().copied().chain([T::one()]).collect();
    let n = a.len();
    let ab = lorentz_inner(&a, &b);
    let (ep, em) = (length.exp() - T::one(), (-length).exp() - T::one());
    let mut m = linalg::identity::<T>(n);
    for i in 0..n {
        for j in 0..n {
            let sj = if j == n - 1 { -T::one() } else { T::one() };
            m[i * n + j] += (ep * a[i] * b[j] + em * b[i] * a[j]) * sj / ab;
        }
    }
    Ok(LorentzIsometry { size: n, matrix: m })
}

/// Rotation by `angle` in the plane of spatial axes i, j of R^{n+1}; fixes the basepoint.
pub fn make_rotation<T: Real>(n: usize, angle: T, i: usize, j: usize) -> Result<LorentzIsometry<T>> {
    if i == j || i > n || j > n {
        return Err(GeomError::InvalidParameter(format!("rotation plane ({i}, {j}) invalid for R^{}", n + 1)));
    }
    let s = n + 2;
    let mut m = linalg::identity::<T>(s);
    let (sn, cs) = angle.sin_cos();
    m[i * s + i] = cs;
    m[j * s + j] = cs;
    m[i * s + j] = -sn;
    m[j * s + i] = sn;
    Ok(LorentzIsometry { size: s, matrix: m })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupSpec<T> {
    pub generators: Vec<LorentzIsometry<T>>,
    /// The generators are asserted to generate a free group.
    pub free: bool,
    pub max_word_length: usize,
    pub basepoint: Vec<T>,
    pub memory_budget: usize,
}

impl<T: Real> GroupSpec<T> {
    /// Checks the generators and, for free groups, that no nontrivial reduced
    /// word of length ≤ 4 is the identity.
    pub fn new(generators: Vec<LorentzIsometry<T>>, free: bool, max_word_length: usize) -> Result<GroupSpec<T>> {
        let Some(first) = generators.first() else {
            return Err(GeomError::InvalidParameter("at least one generator is required".into()));
        };
        let size = first.size;
        for g in &generators {
            if g.size != size {
                return Err(GeomError::DimensionMismatch { expected: size, got: g.size });
            }
            LorentzIsometry::new(size, g.matrix.clone())?;
        }
        let spec = GroupSpec {
            basepoint: origin(size - 2),
            generators,
            free,
            max_word_length,
            memory_budget: DEFAULT_MEMORY_BUDGET,
        };
        if free {
            let letters = spec.letters();
            let mut bad = None;
            walk(&letters, 4, &mut |word, m| {
                let off = m.matrix.iter().zip(linalg::identity::<T>(size)).fold(T::zero(), |s, (a, b)| s.max((*a - b).abs()));
                if off < c(1e-8) && bad.is_none() {
                    bad = Some(word.to_vec());
                }
            });
            if let Some(w) = bad {
                return Err(GeomError::Precondition(format!("reduced word {w:?} is the identity; the group is not free")));
            }
        }
        Ok(spec)
    }

    pub fn with_basepoint(mut self, basepoint: Vec<T>) -> Result<GroupSpec<T>> {
        if basepoint.len() != self.generators[0].size {
            return Err(GeomError::DimensionMismatch { expected: self.generators[0].size, got: basepoint.len() });
        }
        check_sheet(&basepoint)?;
        self.basepoint = basepoint;
        Ok(self)
    }

    pub fn with_memory_budget(mut self, bytes: usize) -> GroupSpec<T> {
        self.memory_budget = bytes;
        self
    }

    /// Conjugates every generator by h: g ↦ h g h⁻¹.
    pub fn conjugated(&self, h: &LorentzIsometry<T>) -> GroupSpec<T> {
        let hi = h.inverse();
        GroupSpec { generators: self.generators.iter().map(|g| h.compose(g).compose(&hi)).collect(), ..self.clone() }
    }

    /// Subgroup generated by the listed generators.
    pub fn subgroup(&self, keep: &[usize]) -> GroupSpec<T> {
        GroupSpec { generators: keep.iter().map(|&i| self.generators[i].clone()).collect(), ..self.clone() }
    }

    /// Letter 2k is generator k, letter 2k + 1 its inverse.
    fn letters(&self) -> Vec<LorentzIsometry<T>> {
        self.generators.iter().flat_map(|g| [g.clone(), g.inverse()]).collect()
    }

    /// Σ_{k≤L} 2m(2m−1)^{k−1}.
    pub fn word_count(&self, max_len: usize) -> usize {
        let m = 2 * self.generators.len();
        let mut total = 0usize;
        let mut level = m;
        for _ in 0..max_len {
            total = total.saturating_add(level);
            level = level.saturating_mul(m - 1);
        }
        total
    }
}

/// Depth-first walk over reduced words of length 1..=max_len.
fn walk<T: Real, F: FnMut(&[u8], &LorentzIsometry<T>)>(letters: &[LorentzIsometry<T>], max_len: usize, f: &mut F) {
    for a in 0..letters.len() {
        walk_from(letters, &[a as u8], &letters[a], max_len, f);
    }
}

fn walk_from<T: Real, F: FnMut(&[u8], &LorentzIsometry<T>)>(
    letters: &[LorentzIsometry<T>],
    word: &[u8],
    m: &LorentzIsometry<T>,
    max_len: usize,
    f: &mut F,
) {
    f(word, m);
    if word.len() >= max_len {
        return;
    }
    let last = *word.last().expect("nonempty word");
    let mut next = word.to_vec();
    next.push(0);
    for b in 0..letters.len() as u8 {
        if b == last ^ 1 {
            continue;
        }
        *next.last_mut().expect("nonempty") = b;
        let mut p = m.compose(&letters[b as usize]);
        if next.len().is_multiple_of(RENORMALIZE_EVERY) {
            p = p.renormalize();
        }
        walk_from(letters, &next, &p, max_len, f);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitPoint<T> {
    /// Reduced word in letters 2k (generator k) and 2k + 1 (its inverse).
    pub word: Vec<u8>,
    /// dist(o, γo)
    pub distance: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSample<T> {
    /// Sorted by word length, then lexicographically.
    pub points: Vec<OrbitPoint<T>>,
    /// Longest complete word length.
    pub max_word_length: usize,
    pub generators: usize,
    /// The memory budget stopped the enumeration before `max_word_length`.
    pub truncated: bool,
}

impl<T: Real> OrbitSample<T> {
    /// N(R) = #{γ ≠ 1 : dist(o, γo) ≤ R} for each radius.
    pub fn counts(&self, radii: &[T]) -> Vec<usize> {
        let mut d: Vec<T> = self.points.iter().map(|p| p.distance).collect();
        d.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        radii.iter().map(|r| d.partition_point(|v| *v <= *r)).collect()
    }

    /// Σ e^{−s·dist} over the words of exactly length k.
    pub fn shell_sum(&self, k: usize, s: T) -> T {
        self.points.iter().filter(|p| p.word.len() == k).fold(T::zero(), |a, p| a + (-s * p.distance).exp())
    }

    /// Smallest distance among words of length k.
    pub fn shell_min(&self, k: usize) -> Option<T> {
        self.points.iter().filter(|p| p.word.len() == k).map(|p| p.distance).reduce(|a, b| a.min(b))
    }
}

/// All nontrivial reduced words up to the spec's word length with their
/// displacement of the basepoint. Parallel over first letters.
pub fn orbit_enumerate<T: Real>(spec: &GroupSpec<T>) -> Result<OrbitSample<T>> {
    let per_word = std::mem::size_of::<OrbitPoint<T>>() + spec.max_word_length.max(8) + 16;
    let mut len = spec.max_word_length;
    while len > 0 && spec.word_count(len).saturating_mul(per_word) > spec.memory_budget {
        len -= 1;
    }
    let truncated = len < spec.max_word_length;
    let letters = spec.letters();
    let o = &spec.basepoint;
    let shards: Vec<Vec<OrbitPoint<T>>> = (0..letters.len())
        .into_par_iter()
        .map(|a| {
            let mut out = Vec::new();
            walk_from(&letters, &[a as u8], &letters[a], len, &mut |word, m| {
                let v = -lorentz_inner(o, &m.apply(o));
                let d = if v.is_finite() { v.max(T::one()).acosh() } else { T::nan() };
                out.push(OrbitPoint { word: word.to_vec(), distance: d });
            });
            out
        })
        .collect();
    let mut points: Vec<OrbitPoint<T>> = shards.into_iter().flatten().collect();
    if let Some(p) = points.iter().find(|p| !p.distance.is_finite()) {
        return Err(GeomError::InvalidParameter(format!(
            "displacement of word {:?} overflows; shorten the words or the translation lengths",
            p.word
        )));
    }
    points.sort_by(|p, q| p.word.len().cmp(&q.word.len()).then_with(|| p.word.cmp(&q.word)));
    Ok(OrbitSample { points, max_word_length: len, generators: spec.generators.len(), truncated })
}

/// Σ_γ e^{−s·dist(o, γo)} over the sample (identity excluded).
pub fn poincare_partial_sum<T: Real>(sample: &OrbitSample<T>, s: T) -> T {
    let mut terms: Vec<T> = sample.points.iter().map(|p| (-s * p.distance).exp()).collect();
    // smallest first for a stable sum
    terms.sort_by(|a, b| a.partial_cmp(b).expect("finite terms"));
    terms.into_iter().fold(T::zero(), |a, b| a + b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExponentMethod {
    /// Slope of log N(R) against R over the complete radius range.
    GrowthFit,
    /// Root in s of S_L(s) = S_{L−1}(s) for the word-length shell sums S_k.
    SeriesKnee,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentEstimate<T> {
    pub delta: T,
    pub uncertainty: T,
    pub method: ExponentMethod,
    pub orbit_size: usize,
}

/// δ̂ from an enumerated orbit.
pub fn critical_exponent<T: Real>(sample: &OrbitSample<T>, method: ExponentMethod) -> Result<ExponentEstimate<T>> {
    if sample.points.len() < MIN_ORBIT {
        return Err(GeomError::InsufficientData(format!(
            "orbit has {} points, need at least {MIN_ORBIT}; increase the word length",
            sample.points.len()
        )));
    }
    let l = sample.max_word_length;
    if l < 3 {
        return Err(GeomError::InsufficientData("word length must be at least 3".into()));
    }
    let (delta, uncertainty) = match method {
        ExponentMethod::GrowthFit => growth_fit(sample)?,
        ExponentMethod::SeriesKnee => {
            let a = knee(sample, l);
            let b = knee(sample, l - 1);
            (a, (a - b).abs())
        }
    };
    Ok(ExponentEstimate { delta, uncertainty, method, orbit_size: sample.points.len() })
}

fn growth_fit<T: Real>(sample: &OrbitSample<T>) -> Result<(T, T)> {
    // Every element within the complete radius has word length ≤ L.
    let rc = sample.shell_min(sample.max_word_length).expect("nonempty top shell");
    let fit = |lo: T, hi: T| -> Option<(T, T)> {
        let k = 48;
        let radii: Vec<T> = (0..k).map(|i| lo + (hi - lo) * cn::<T>(i) / cn::<T>(k - 1)).collect();
        let counts = sample.counts(&radii);
        let pts: Vec<(T, T)> = radii.iter().zip(&counts).filter(|(_, n)| **n > 0).map(|(r, n)| (*r, cn::<T>(*n).ln())).collect();
        if pts.len() < 4 {
            return None;
        }
        let (x, y): (Vec<T>, Vec<T>) = pts.into_iter().unzip();
        let (_, slope, se) = linalg::linear_fit(&x, &y);
        Some((slope, se))
    };
    let half = rc * c(0.5);
    let (slope, se) = fit(half, rc).ok_or_else(|| GeomError::InsufficientData("complete radius range too short".into()))?;
    let (lower, _) = fit(half, half + (rc - half) * c(0.5)).unwrap_or((slope, se));
    let (upper, _) = fit(half + (rc - half) * c(0.5), rc).unwrap_or((slope, se));
    Ok((slope, se.max((upper - lower).abs() * c(0.5))))
}

fn knee<T: Real>(sample: &OrbitSample<T>, l: usize) -> T {
    let g = |s: T| (sample.shell_sum(l, s) / sample.shell_sum(l - 1, s)).ln();
    if g(T::zero()) <= T::zero() {
        return T::zero();
    }
    let mut hi = T::one();
    while g(hi) > T::zero() && hi < c(64.0) {
        hi = hi * c(2.0);
    }
    let mut lo = T::zero();
    for _ in 0..80 {
        let mid = (lo + hi) * c(0.5);
        if g(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * c(0.5)
}

/// Enumerates the orbit of a free group and estimates δ.
pub fn critical_exponent_estimate<T: Real>(spec: &GroupSpec<T>, method: ExponentMethod) -> Result<ExponentEstimate<T>> {
    if !spec.free {
        return Err(GeomError::Precondition("critical exponent estimators need a free group".into()));
    }
    critical_exponent(&orbit_enumerate(spec)?, method)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitSetSample<T> {
    /// Points on the unit sphere Sⁿ ⊂ R^{n+1}.
    pub points: Vec<Vec<T>>,
    /// Words skipped because they were not loxodromic.
    pub elliptic_skipped: usize,
}

/// Attracting fixed points of `count` uniformly random cyclically reduced
/// words of the given length. Cyclic reduction keeps the two fixed points of
/// each word apart, so the power iteration stays well conditioned.
pub fn limit_set_sample<T: Real>(spec: &GroupSpec<T>, word_length: usize, count: usize, seed: u64) -> Result<LimitSetSample<T>> {
    if !spec.free {
        return Err(GeomError::Precondition("limit set sampling needs a free group".into()));
    }
    if word_length == 0 {
        return Err(GeomError::InvalidParameter("word length must be positive".into()));
    }
    let letters = spec.letters();
    let m = letters.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<Vec<u8>> = (0..count)
        .map(|_| loop {
            let mut w = vec![rng.random_range(0..m) as u8];
            while w.len() < word_length {
                let last = *w.last().expect("nonempty");
                let mut b = rng.random_range(0..m - 1) as u8;
                if b >= (last ^ 1) {
                    b += 1;
                }
                w.push(b);
            }
            if w.len() == 1 || w[w.len() - 1] != w[0] ^ 1 {
                break w;
            }
        })
        .collect();
    let fixed: Vec<Option<Vec<T>>> = words
        .par_iter()
        .map(|w| {
            let mut p = letters[w[0] as usize].clone();
            for (k, &a) in w.iter().enumerate().skip(1) {
                p = p.compose(&letters[a as usize]);
                if (k + 1) % RENORMALIZE_EVERY == 0 {
                    p = p.renormalize();
                }
            }
            p.attracting_fixed_point()
        })
        .collect();
    let elliptic_skipped = fixed.iter().filter(|f| f.is_none()).count();
    Ok(LimitSetSample { points: fixed.into_iter().flatten().collect(), elliptic_skipped })
}

/// Greedy clusters of the points at the given radius.
pub fn cluster_count<T: Real>(points: &[Vec<T>], radius: T) -> usize {
    let mut centers: Vec<&Vec<T>> = Vec::new();
    for p in points {
        let near = centers.iter().any(|q| p.iter().zip(q.iter()).fold(T::zero(), |s, (a, b)| s + (*a - *b) * (*a - *b)).sqrt() <= radius);
        if !near {
            centers.push(p);
        }
    }
    centers.len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxDimension<T> {
    /// 0 when the sample is elementary.
    pub dimension: T,
    /// Standard error of the fitted slope.
    pub fit_error: T,
    /// Occupied boxes per scale, including scales left out of the fit.
    pub counts: Vec<usize>,
    /// At most two clusters at [`CLUSTER_RADIUS`]: no dimension is reported.
    pub elementary: bool,
}

/// Slope of log(occupied boxes) against log(1/ε) over a geometric ladder,
/// fitted on the scales that the sample resolves.
pub fn box_dimension<T: Real>(points: &[Vec<T>], scales: &[T]) -> Result<BoxDimension<T>> {
    if points.len() < 1000 {
        return Err(GeomError::InsufficientData(format!("{} points, need at least 1000", points.len())));
    }
    if scales.len() < 4 || scales.iter().any(|s| !(*s > T::zero())) {
        return Err(GeomError::InvalidParameter("degenerate ladder: need at least 4 positive scales".into()));
    }
    let ratio = scales[1] / scales[0];
    if !(ratio < T::one()) || scales.windows(2).any(|w| ((w[1] / w[0]) / ratio - T::one()).abs() > c(1e-9)) {
        return Err(GeomError::InvalidParameter("degenerate ladder: scales must decrease geometrically".into()));
    }
    if cluster_count(points, c(CLUSTER_RADIUS)) <= 2 {
        return Ok(BoxDimension { dimension: T::zero(), fit_error: T::zero(), counts: Vec::new(), elementary: true });
    }
    let counts: Vec<usize> = scales
        .iter()
        .map(|eps| {
            let boxes: HashSet<Vec<i64>> =
                points.iter().map(|p| p.iter().map(|v| to_f64((*v / *eps).floor()) as i64).collect()).collect();
            boxes.len()
        })
        .collect();
    let cap = points.len() / MIN_POINTS_PER_BOX;
    let used: Vec<(T, T)> = scales.iter().zip(&counts).filter(|(_, n)| **n <= cap).map(|(s, n)| (-s.ln(), cn::<T>(*n).ln())).collect();
    if used.len() < 4 {
        return Err(GeomError::InsufficientData(format!(
            "only {} scales have at most {cap} occupied boxes; use coarser scales or more points",
            used.len()
        )));
    }
    let (x, y): (Vec<T>, Vec<T>) = used.into_iter().unzip();
    let (_, slope, se) = linalg::linear_fit(&x, &y);
    Ok(BoxDimension { dimension: slope, fit_error: se, counts, elementary: false })
}

/// Geometric ladder first·ratio^k, k = 0..len.
pub fn scale_ladder<T: Real>(first: T, ratio: T, len: usize) -> Vec<T> {
    (0..len).map(|k| first * ratio.powi(k as i32)).collect()
}

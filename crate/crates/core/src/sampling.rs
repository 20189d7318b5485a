//! Reproducible sample points: shifted Halton sequences over chart boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::{c, Real};
use crate::tensorcore::Domain;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// `count` points of the `dim`-dimensional Halton sequence in [0,1)^dim,
/// rotated by a seeded Cranley–Patterson shift.
pub fn halton(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "Halton sampler supports up to {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let v = radical_inverse(i, PRIMES[d]) + shift[d];
                    v - v.floor()
                })
                .collect()
        })
        .collect()
}

/// Quasi-random points inside `domain`, keeping a relative `margin` from
/// non-periodic faces.
pub fn interior_points<T: Real>(domain: &Domain<T>, count: usize, seed: u64, margin: f64) -> Vec<Vec<T>> {
    let n = domain.dim();
    halton(n, count, seed)
        .into_iter()
        .map(|u| {
            (0..n)
                .map(|a| {
                    let (lo, w) = (domain.lower[a], domain.width(a));
                    let m = if domain.periodic[a] { 0.0 } else { margin };
                    lo + w * c::<T>(m + (1.0 - 2.0 * m) * u[a])
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_is_deterministic_and_in_range() {
        let a = halton(3, 50, 7);
        let b = halton(3, 50, 7);
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|&v| (0.0..1.0).contains(&v)));
        assert_ne!(halton(3, 5, 8), halton(3, 5, 7));
    }

    #[test]
    fn halton_mean_is_near_half() {
        let pts = halton(2, 4096, 1);
        let m: f64 = pts.iter().map(|p| p[0]).sum::<f64>() / 4096.0;
        assert!((m - 0.5).abs() < 1e-3);
    }
}

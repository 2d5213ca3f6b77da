//! Collatz-Wielandt bounds for monotone, positively homogeneous maps on the orthant.
//!
//! Iterating the shifted map `v -> T(v) + v` keeps every coordinate positive and removes
//! periodicity, so for an irreducible `T` the ratio bounds close in on the cone spectral radius.

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusBounds {
    pub lower: f64,
    pub upper: f64,
    /// Vector attaining `upper`: `T(v) <= upper * v`.
    pub upper_vec: Vec<f64>,
    /// Vector attaining `lower`: `T(v) >= lower * v`.
    pub lower_vec: Vec<f64>,
    pub iterations: usize,
}

pub fn collatz_wielandt<F>(map: F, n: usize, tol: f64, max_iter: usize) -> Result<RadiusBounds>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut v = vec![1.0; n];
    let mut best =
        RadiusBounds { lower: 0.0, upper: f64::INFINITY, upper_vec: v.clone(), lower_vec: v.clone(), iterations: 0 };
    for it in 0..max_iter {
        let t = map(&v)?;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (a, b) in t.iter().zip(&v) {
            let q = a / b;
            lo = lo.min(q);
            hi = hi.max(q);
        }
        if hi < best.upper {
            best.upper = hi;
            best.upper_vec = v.clone();
        }
        if lo > best.lower {
            best.lower = lo;
            best.lower_vec = v.clone();
        }
        best.iterations = it + 1;
        if best.upper - best.lower <= tol * best.upper.max(1.0) {
            break;
        }
        let mut next: Vec<f64> = t.iter().zip(&v).map(|(a, b)| a + b).collect();
        let m = next.iter().cloned().fold(0.0, f64::max);
        for x in &mut next {
            *x /= m;
        }
        if next == v {
            break;
        }
        v = next;
    }
    Ok(best)
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cycle_radius() {
        let a = vec![vec![0.0, 0.9], vec![0.9, 0.0]];
        let b = collatz_wielandt(|v| Ok(mat_vec(&a, v)), 2, 1e-12, 100_000).unwrap();
        assert!((b.lower - 0.9).abs() < 1e-10 && (b.upper - 0.9).abs() < 1e-10);
    }

    #[test]
    fn bounds_bracket_the_radius() {
        let a = vec![vec![0.0, 0.0, 0.9], vec![0.9, 0.0, 0.9], vec![0.0, 0.9, 0.0]];
        let b = collatz_wielandt(|v| Ok(mat_vec(&a, v)), 3, 1e-12, 100_000).unwrap();
        // real root of l^3 - 0.81 l - 0.729
        let p = |l: f64| l * l * l - 0.81 * l - 0.729;
        assert!(p(b.lower) <= 1e-9 && p(b.upper) >= -1e-9);
        assert!((b.upper - 1.1922).abs() < 1e-3);
    }
}

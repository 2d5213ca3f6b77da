//! Geometric sampling grids on (0, inf).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { r_min: 1e-3, r_max: 1e3, points: 121 }
    }
}

impl GridSpec {
    pub fn new(r_min: f64, r_max: f64, points: usize) -> Result<Self> {
        let g = GridSpec { r_min, r_max, points };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return Err(Error::Validation(format!("grid r_min must be positive, got {}", self.r_min)));
        }
        if !(self.r_max > self.r_min && self.r_max.is_finite()) {
            return Err(Error::Validation(format!(
                "grid r_max must exceed r_min, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if self.points < 2 {
            return Err(Error::Validation(format!("grid needs at least 2 points, got {}", self.points)));
        }
        Ok(())
    }

    /// Grid points, endpoints included exactly.
    pub fn values(&self) -> Vec<f64> {
        geometric(self.r_min, self.r_max, self.points)
    }
}

pub fn geometric(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..points).map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp()).collect();
    v[0] = lo;
    v[points - 1] = hi;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_spans_six_decades() {
        let v = GridSpec::default().values();
        assert_eq!(v.len(), 121);
        assert_eq!(v[0], 1e-3);
        assert_eq!(v[120], 1e3);
        assert!((v[60] - 1.0).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(0.0, 1.0, 10).is_err());
        assert!(GridSpec::new(1.0, 1.0, 10).is_err());
        assert!(GridSpec::new(1.0, 2.0, 1).is_err());
    }
}

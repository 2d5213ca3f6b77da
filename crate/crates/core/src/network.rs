//! Gain matrices with mixed sum/max rows and the operators built from them.
//!
//! Edge convention: `gamma[i][j]` is the gain from subsystem `j` into subsystem `i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kfun::{Aggregation, FnClass, ScalarFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainRole {
    Iss,
    Gs,
    Ag,
    Lyapunov,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainNetwork {
    agg: Vec<Aggregation>,
    gamma: Vec<Vec<ScalarFn>>,
    external: Vec<ScalarFn>,
    role: GainRole,
}

impl GainNetwork {
    pub fn new(agg: Vec<Aggregation>, gamma: Vec<Vec<ScalarFn>>, external: Vec<ScalarFn>) -> Result<Self> {
        let n = agg.len();
        if gamma.len() != n {
            return Err(Error::Dimension { expected: n, found: gamma.len() });
        }
        if external.len() != n {
            return Err(Error::Dimension { expected: n, found: external.len() });
        }
        for (i, row) in gamma.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension { expected: n, found: row.len() });
            }
            if !row[i].is_zero() {
                return Err(Error::Validation(format!("diagonal gain {} must be absent", i + 1)));
            }
            for (j, g) in row.iter().enumerate() {
                if !g.is_zero() && g.class() != FnClass::KInf {
                    return Err(Error::Validation(format!("gain ({}, {}) must be K-infinity or zero", i + 1, j + 1)));
                }
            }
        }
        Ok(GainNetwork { agg, gamma, external, role: GainRole::Iss })
    }

    /// Network whose every gain is `slopes[i][j] * r` (zero entries mean no edge).
    pub fn linear(agg: Vec<Aggregation>, slopes: &[Vec<f64>], external: &[f64]) -> Result<Self> {
        let to_fn = |a: f64| if a == 0.0 { Ok(ScalarFn::zero()) } else { ScalarFn::linear(a) };
        let gamma = slopes
            .iter()
            .map(|row| row.iter().map(|&a| to_fn(a)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let ext = external.iter().map(|&a| to_fn(a)).collect::<Result<Vec<_>>>()?;
        Self::new(agg, gamma, ext)
    }

    pub fn with_role(mut self, role: GainRole) -> Self {
        self.role = role;
        self
    }

    pub fn n(&self) -> usize {
        self.agg.len()
    }

    pub fn role(&self) -> GainRole {
        self.role
    }

    pub fn agg(&self) -> &[Aggregation] {
        &self.agg
    }

    pub fn gain(&self, i: usize, j: usize) -> &ScalarFn {
        &self.gamma[i][j]
    }

    pub fn row(&self, i: usize) -> &[ScalarFn] {
        &self.gamma[i]
    }

    pub fn external(&self, i: usize) -> &ScalarFn {
        &self.external[i]
    }

    pub fn has_external(&self) -> bool {
        self.external.iter().any(|g| !g.is_zero())
    }

    pub fn has_sum_rows(&self) -> bool {
        self.agg.contains(&Aggregation::Sum)
    }

    /// Class-tag check of every gain on `grid`.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        for (i, row) in self.gamma.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                g.validate(grid).map_err(|e| Error::Validation(format!("gain ({}, {}): {e}", i + 1, j + 1)))?;
            }
            self.external[i].validate(grid).map_err(|e| Error::Validation(format!("external gain {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    fn check_dim(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), found: s.len() });
        }
        Ok(())
    }

    fn aggregate(&self, i: usize, terms: impl Iterator<Item = Result<f64>>) -> Result<f64> {
        let mut acc = 0.0f64;
        for t in terms {
            let t = t?;
            acc = match self.agg[i] {
                Aggregation::Sum => acc + t,
                Aggregation::Max => acc.max(t),
            };
        }
        Ok(acc)
    }

    /// `Gamma(s)`, or `Gamma_bar(s, u_level)` when an input level is given.
    pub fn apply_gamma(&self, s: &[f64], u_level: Option<f64>) -> Result<Vec<f64>> {
        self.check_dim(s)?;
        (0..self.n())
            .map(|i| {
                let internal = self.gamma[i].iter().zip(s).filter(|(g, _)| !g.is_zero()).map(|(g, &x)| g.eval(x));
                let ext = u_level.filter(|_| !self.external[i].is_zero()).map(|u| self.external[i].eval(u));
                self.aggregate(i, internal.chain(ext))
            })
            .collect()
    }

    /// Row `i` of `Gamma` on its own.
    pub fn apply_row(&self, i: usize, s: &[f64]) -> Result<f64> {
        self.check_dim(s)?;
        self.aggregate(i, self.gamma[i].iter().zip(s).filter(|(g, _)| !g.is_zero()).map(|(g, &x)| g.eval(x)))
    }

    pub fn apply_d(&self, alpha: &ScalarFn, s: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(s)?;
        s.iter()
            .zip(&self.agg)
            .map(|(&x, a)| match a {
                Aggregation::Sum => Ok(x + alpha.eval(x)?),
                Aggregation::Max => Ok(x),
            })
            .collect()
    }

    pub fn apply_d_inverse(&self, alpha: &ScalarFn, s: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(s)?;
        let d = ScalarFn::id_plus(alpha);
        s.iter()
            .zip(&self.agg)
            .map(|(&x, a)| match a {
                Aggregation::Sum => d.eval_inverse(x),
                Aggregation::Max => Ok(x),
            })
            .collect()
    }

    pub fn apply_mu(&self, w: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        self.check_dim(v)?;
        Ok(w.iter()
            .zip(v)
            .zip(&self.agg)
            .map(|((&a, &b), agg)| match agg {
                Aggregation::Sum => a + b,
                Aggregation::Max => a.max(b),
            })
            .collect())
    }

    /// `Gamma o D_alpha`.
    pub fn apply_gamma_d(&self, alpha: &ScalarFn, s: &[f64]) -> Result<Vec<f64>> {
        self.apply_gamma(&self.apply_d(alpha, s)?, None)
    }

    /// `D_alpha o Gamma`.
    pub fn apply_d_gamma(&self, alpha: &ScalarFn, s: &[f64]) -> Result<Vec<f64>> {
        self.apply_d(alpha, &self.apply_gamma(s, None)?)
    }

    /// Nonzero gains as `(target, source)` pairs.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for i in 0..self.n() {
            for j in 0..self.n() {
                if !self.gamma[i][j].is_zero() {
                    e.push((i, j));
                }
            }
        }
        e
    }

    /// Slope matrix when every gain is linear.
    pub fn slope_matrix(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.n())
            .map(|i| {
                (0..self.n())
                    .map(|j| self.gamma[i][j].linear_slope().ok_or(Error::NonLinear { row: i + 1, col: j + 1 }))
                    .collect()
            })
            .collect()
    }

    pub fn is_linear(&self) -> bool {
        self.gamma.iter().flatten().all(|g| g.linear_slope().is_some())
    }

    /// Sub-network on `idx`, dropping gains and externals from outside.
    pub fn restrict(&self, idx: &[usize]) -> Result<GainNetwork> {
        let agg = idx.iter().map(|&i| self.agg[i]).collect();
        let gamma = idx.iter().map(|&i| idx.iter().map(|&j| self.gamma[i][j].clone()).collect()).collect();
        let external = idx.iter().map(|&i| self.external[i].clone()).collect();
        Ok(GainNetwork::new(agg, gamma, external)?.with_role(self.role))
    }

    /// Relabel so that new index `k` is old index `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<GainNetwork> {
        if perm.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), found: perm.len() });
        }
        self.restrict(perm)
    }

    /// Same topology with every gain replaced.
    pub fn map_gains(&self, mut f: impl FnMut(usize, usize, &ScalarFn) -> ScalarFn) -> Result<GainNetwork> {
        let gamma = (0..self.n())
            .map(|i| {
                (0..self.n())
                    .map(|j| if self.gamma[i][j].is_zero() { ScalarFn::zero() } else { f(i, j, &self.gamma[i][j]) })
                    .collect()
            })
            .collect();
        Ok(GainNetwork::new(self.agg.clone(), gamma, self.external.clone())?.with_role(self.role))
    }

    pub fn with_agg(&self, agg: Vec<Aggregation>) -> Result<GainNetwork> {
        Ok(GainNetwork::new(agg, self.gamma.clone(), self.external.clone())?.with_role(self.role))
    }

    pub fn with_external(&self, external: Vec<ScalarFn>) -> Result<GainNetwork> {
        Ok(GainNetwork::new(self.agg.clone(), self.gamma.clone(), external)?.with_role(self.role))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use Aggregation::*;

    /// Raw gains of the three-subsystem worked example.
    pub(crate) fn example_net() -> GainNetwork {
        GainNetwork::linear(
            vec![Sum, Max, Max],
            &[vec![0.0, 0.0, 0.9], vec![0.9, 0.0, 0.9], vec![0.0, 0.9, 0.0]],
            &[1.0, 0.0, 1.0],
        )
        .unwrap()
    }

    fn alpha() -> ScalarFn {
        ScalarFn::linear(0.1).unwrap()
    }

    #[test]
    fn apply_gamma_examples() {
        let net = example_net();
        let v = net.apply_gamma(&[1.0, 1.0, 1.0], None).unwrap();
        assert_eq!(v, vec![0.9, 0.9, 0.9]);
        let v = net.apply_gamma(&[2.0, 0.0, 1.0], None).unwrap();
        assert_eq!(v, vec![0.9, 1.8, 0.0]);
        let zero = GainNetwork::linear(vec![Sum, Max], &[vec![0.0; 2], vec![0.0; 2]], &[0.0, 0.0]).unwrap();
        assert_eq!(zero.apply_gamma(&[3.0, 4.0], None).unwrap(), vec![0.0, 0.0]);
        let v = net.apply_gamma(&[1.0, 1.0, 1.0], Some(2.0)).unwrap();
        assert_eq!(v, vec![2.9, 0.9, 2.0]);
        assert!(net.apply_gamma(&[1.0], None).is_err());
    }

    #[test]
    fn apply_d_examples() {
        let net = example_net();
        assert_eq!(net.apply_d(&alpha(), &[1.0, 1.0, 1.0]).unwrap(), vec![1.1, 1.0, 1.0]);
        let sums = net.with_agg(vec![Sum; 3]).unwrap();
        let v = sums.apply_d(&alpha(), &[1.0, 2.0, 3.0]).unwrap();
        for (a, b) in v.iter().zip([1.1, 2.2, 3.3]) {
            assert!((a - b).abs() < 1e-15);
        }
        let maxes = net.with_agg(vec![Max; 3]).unwrap();
        assert_eq!(maxes.apply_d(&ScalarFn::linear(7.0).unwrap(), &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let back = net.apply_d_inverse(&alpha(), &[1.1, 1.0, 1.0]).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn apply_mu_examples() {
        let net = example_net();
        assert_eq!(net.apply_mu(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap(), vec![2.0, 2.0, 3.0]);
        assert_eq!(net.apply_mu(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_diagonal_and_k_gains() {
        let r = GainNetwork::linear(vec![Max], &[vec![1.0]], &[0.0]);
        assert!(matches!(r, Err(Error::Validation(m)) if m.contains("diagonal")));
        let k = ScalarFn::piecewise(vec![(1.0, 1.0)], 0.0).unwrap();
        let r = GainNetwork::new(
            vec![Max, Max],
            vec![vec![ScalarFn::zero(), k], vec![ScalarFn::zero(); 2]],
            vec![ScalarFn::zero(); 2],
        );
        assert!(r.is_err());
    }

    #[test]
    fn slope_matrix_and_restrict() {
        let net = example_net();
        assert_eq!(net.slope_matrix().unwrap()[1], vec![0.9, 0.0, 0.9]);
        let sub = net.restrict(&[1, 2]).unwrap();
        assert_eq!(sub.slope_matrix().unwrap(), vec![vec![0.0, 0.9], vec![0.9, 0.0]]);
        let p = net.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.gain(1, 0).linear_slope(), Some(0.9));
    }
}

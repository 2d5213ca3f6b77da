//! Composite Lyapunov function `V(x) = max_i sigma_i^{-1}(V_i(x_i))` for scalar subsystems and a
//! sampled check of its decrease along the flow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{flow_step, Source, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::kfun::{Aggregation, ScalarFn};
use crate::network::{GainNetwork, GainRole};
use crate::path::{build_path, external_condition_margin, external_margin, OmegaPath, PathConfig};

pub const TIE_TOL: f64 = 1e-12;
pub const GATE_MARGIN: f64 = 0.05;
pub const RATE_SLACK: f64 = 0.1;
pub const DEFAULT_EPS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "weight")]
pub enum Shape {
    /// `|x|`
    Abs,
    /// `c |x|`
    Scaled(f64),
    /// `w x^2`
    Quadratic(f64),
}

impl Shape {
    pub fn check(&self) -> Result<()> {
        match *self {
            Shape::Abs => Ok(()),
            Shape::Scaled(c) | Shape::Quadratic(c) if c > 0.0 && c.is_finite() => Ok(()),
            _ => Err(Error::Lyapunov(format!("shape weight must be positive, got {self:?}"))),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Shape::Abs => x.abs(),
            Shape::Scaled(c) => c * x.abs(),
            Shape::Quadratic(w) => w * x * x,
        }
    }

    pub fn grad(&self, x: f64) -> f64 {
        match *self {
            Shape::Abs => x.signum(),
            Shape::Scaled(c) => c * x.signum(),
            Shape::Quadratic(w) => 2.0 * w * x,
        }
    }

    /// `|x| -> V`.
    pub fn of_abs(&self) -> Result<ScalarFn> {
        match *self {
            Shape::Abs => Ok(ScalarFn::identity()),
            Shape::Scaled(c) => ScalarFn::linear(c),
            Shape::Quadratic(w) => ScalarFn::power(w, 2.0),
        }
    }

    /// `V -> |x|`.
    pub fn to_abs(&self) -> Result<ScalarFn> {
        match *self {
            Shape::Abs => Ok(ScalarFn::identity()),
            Shape::Scaled(c) => ScalarFn::linear(1.0 / c),
            Shape::Quadratic(w) => ScalarFn::power(w.powf(-0.5), 0.5),
        }
    }

    /// `V'(r) * r`.
    fn radial_slope(&self) -> Result<ScalarFn> {
        match *self {
            Shape::Abs => Ok(ScalarFn::identity()),
            Shape::Scaled(c) => ScalarFn::linear(c),
            Shape::Quadratic(w) => ScalarFn::power(2.0 * w, 2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovFn {
    pub index: usize,
    pub shape: Shape,
    /// `psi_1`, `psi_2` with `psi_1(|x|) <= V <= psi_2(|x|)`.
    pub lower: ScalarFn,
    pub upper: ScalarFn,
    pub agg: Aggregation,
    /// Gains on `V_j`, length `n`.
    pub gains: Vec<ScalarFn>,
    pub external: ScalarFn,
    /// Dissipation rate as a function of `|x_i|`.
    pub rate: ScalarFn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartSpec {
    pub shape: Shape,
    pub eps: f64,
    pub rate: Option<ScalarFn>,
}

impl Default for PartSpec {
    fn default() -> Self {
        Self { shape: Shape::Abs, eps: DEFAULT_EPS, rate: None }
    }
}

/// Lyapunov data read off the dynamics: with `|x_i| >= agg(gamma_ij(|x_j|), gamma_i(|u|)) / (a_i (1 - eps))`
/// the derivative of `|x_i|` is at most `-a_i eps |x_i|`.
pub fn derive_parts(dynamics: &VectorFieldSpec, specs: &[PartSpec]) -> Result<Vec<LyapunovFn>> {
    let n = dynamics.n();
    if specs.len() != n {
        return Err(Error::Dimension { expected: n, found: specs.len() });
    }
    let to_abs: Vec<ScalarFn> = specs.iter().map(|s| s.shape.to_abs()).collect::<Result<_>>()?;
    let mut parts = Vec::with_capacity(n);
    for (i, (row, spec)) in dynamics.rows.iter().zip(specs).enumerate() {
        spec.shape.check()?;
        if !(spec.eps > 0.0 && spec.eps < 1.0) {
            return Err(Error::Lyapunov(format!("row {}: eps must lie in (0, 1)", i + 1)));
        }
        if row.agg == Aggregation::Sum && matches!(spec.shape, Shape::Quadratic(_)) {
            return Err(Error::Lyapunov(format!("row {}: quadratic shape needs a max row", i + 1)));
        }
        let vmap = spec.shape.of_abs()?;
        let slack = ScalarFn::linear(1.0 / (row.decay * (1.0 - spec.eps)))?;
        let mut gains = vec![ScalarFn::zero(); n];
        let mut external = ScalarFn::zero();
        for t in &row.terms {
            match t.source {
                Source::State(j) => {
                    gains[j] = ScalarFn::compose_all(&[vmap.clone(), slack.clone(), t.gain.clone(), to_abs[j].clone()])
                }
                Source::Input => external = ScalarFn::compose_all(&[vmap.clone(), slack.clone(), t.gain.clone()]),
            }
        }
        let rate = match &spec.rate {
            Some(r) => r.clone(),
            None => ScalarFn::compose(&spec.shape.radial_slope()?, &ScalarFn::linear(row.decay * spec.eps)?),
        };
        parts.push(LyapunovFn {
            index: i,
            shape: spec.shape,
            lower: vmap.clone(),
            upper: vmap,
            agg: row.agg,
            gains,
            external,
            rate,
        });
    }
    Ok(parts)
}

pub fn lyapunov_network(parts: &[LyapunovFn]) -> Result<GainNetwork> {
    Ok(GainNetwork::new(
        parts.iter().map(|p| p.agg).collect(),
        parts.iter().map(|p| p.gains.clone()).collect(),
        parts.iter().map(|p| p.external.clone()).collect(),
    )?
    .with_role(GainRole::Lyapunov))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeV {
    pub path: OmegaPath,
    pub parts: Vec<LyapunovFn>,
    sigma_inv: Vec<ScalarFn>,
}

pub fn compose_v(path: OmegaPath, parts: Vec<LyapunovFn>) -> Result<CompositeV> {
    if path.n() != parts.len() {
        return Err(Error::Dimension { expected: parts.len(), found: path.n() });
    }
    let sigma_inv = path.sigma.iter().map(ScalarFn::inverse).collect::<Result<_>>()?;
    Ok(CompositeV { path, parts, sigma_inv })
}

/// Slope of `f` at `y`, the smaller one-sided slope where `f` has a kink.
fn slope_at(f: &ScalarFn, y: f64) -> Result<f64> {
    if let Some(c) = f.linear_slope() {
        return Ok(c);
    }
    let h = 1e-6 * y.max(1e-3);
    let right = (f.eval(y + h)? - f.eval(y)?) / h;
    let left = if y > h { (f.eval(y)? - f.eval(y - h)?) / h } else { right };
    Ok(left.min(right))
}

impl CompositeV {
    pub fn n(&self) -> usize {
        self.parts.len()
    }

    pub fn components(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), found: x.len() });
        }
        self.parts.iter().zip(&self.sigma_inv).zip(x).map(|((p, si), &xi)| si.eval(p.shape.value(xi))).collect()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.components(x)?.into_iter().fold(0.0, f64::max))
    }

    /// Lowest index attaining the maximum, and whether another index is within the tie tolerance.
    pub fn active(&self, x: &[f64]) -> Result<(usize, bool)> {
        let c = self.components(x)?;
        let top = c.iter().cloned().fold(0.0, f64::max);
        let a = c.iter().position(|&v| v == top).unwrap_or(0);
        let tie = c.iter().enumerate().any(|(i, &v)| i != a && top - v <= TIE_TOL * top.max(f64::MIN_POSITIVE));
        Ok((a, tie))
    }

    /// `(min_i sigma_i^{-1} psi1_i(r), max_i sigma_i^{-1} psi2_i(r))` at `r = ||x||_inf`.
    pub fn proper_bounds(&self, r: f64) -> Result<(f64, f64)> {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (p, si) in self.parts.iter().zip(&self.sigma_inv) {
            lo = lo.min(si.eval(p.lower.eval(r)?)?);
            hi = hi.max(si.eval(p.upper.eval(r)?)?);
        }
        Ok((lo, hi))
    }

    /// Active component along the flow, `t -> sigma_a^{-1}(V_a(x_a(t)))`.
    fn active_along(&self, dynamics: &VectorFieldSpec, a: usize, x: &[f64], u: f64, h: f64) -> Result<f64> {
        let y = flow_step(dynamics, x, u, h)?;
        self.sigma_inv[a].eval(self.parts[a].shape.value(y[a]))
    }

    /// Richardson-extrapolated forward difference `2 D(h/2) - D(h)` of the active component.
    pub fn fd_derivative(&self, dynamics: &VectorFieldSpec, a: usize, x: &[f64], u: f64, h: f64) -> Result<f64> {
        let v0 = self.sigma_inv[a].eval(self.parts[a].shape.value(x[a]))?;
        let d1 = (self.active_along(dynamics, a, x, u, h)? - v0) / h;
        let d2 = (self.active_along(dynamics, a, x, u, h / 2.0)? - v0) / (h / 2.0);
        Ok(2.0 * d2 - d1)
    }

    /// Chain rule `(sigma_a^{-1})'(V_a) V_a'(x_a) f_a(x, u)`.
    pub fn analytic_derivative(&self, dynamics: &VectorFieldSpec, a: usize, x: &[f64], u: f64) -> Result<f64> {
        let f = dynamics.eval(x, u)?;
        let p = &self.parts[a];
        Ok(slope_at(&self.sigma_inv[a], p.shape.value(x[a]))? * p.shape.grad(x[a]) * f[a])
    }

    /// Decrease the active component must show: `(sigma_a^{-1})'(V_a) rate_a(|x_a|)`.
    pub fn expected_rate(&self, a: usize, x: &[f64]) -> Result<f64> {
        let p = &self.parts[a];
        Ok(slope_at(&self.sigma_inv[a], p.shape.value(x[a]))? * p.rate.eval(x[a].abs())?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovModel {
    pub network: GainNetwork,
    pub composite: CompositeV,
    pub phi: ScalarFn,
    /// `gamma = phi^{-1}`: the decrease is claimed where `V(x) >= gamma(|u|)`.
    pub gate: ScalarFn,
    pub external_margin: f64,
}

/// Subsystem data, Omega-path of the Lyapunov gain network, external margin `phi` and the
/// composite function.
pub fn build_lyapunov(
    dynamics: &VectorFieldSpec,
    specs: &[PartSpec],
    alpha: &ScalarFn,
    cfg: &PathConfig,
) -> Result<LyapunovModel> {
    let parts = derive_parts(dynamics, specs)?;
    let network = lyapunov_network(&parts)?;
    let path = build_path(&network, alpha, cfg)?;
    let phi = external_margin(&network, alpha, &path, &cfg.grid)?;
    let margin = external_condition_margin(&network, &path, &phi, &cfg.grid)?;
    if !(margin > 0.0) {
        return Err(Error::Lyapunov(format!("external condition fails on the grid, margin {margin:e}")));
    }
    let gate = ScalarFn::inverse(&phi)?;
    let composite = compose_v(path, parts)?;
    Ok(LyapunovModel { network, composite, phi, gate, external_margin: margin })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub samples: usize,
    pub half_width: f64,
    pub inner_radius: f64,
    pub u_level: f64,
    pub h: f64,
    pub seed: u64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self { samples: 10_000, half_width: 10.0, inner_radius: 0.1, u_level: 0.0, h: 1e-6, seed: 0x1a9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecreaseReport {
    pub u_level: f64,
    pub gate_level: f64,
    pub box_half_width: f64,
    pub drawn: usize,
    pub gated: usize,
    pub passed: usize,
    pub skipped_gate: usize,
    pub skipped_tie: usize,
    pub pass_rate: f64,
    /// Smallest ratio of observed to expected decrease; passing needs at least `1 - RATE_SLACK`.
    pub worst_ratio: f64,
    pub worst_state: Vec<f64>,
    pub smooth_checked: usize,
    /// Largest relative gap between the finite difference and the chain rule on smooth samples.
    pub fd_max_rel_err: f64,
}

impl DecreaseReport {
    pub fn ok(&self, required: usize) -> bool {
        self.gated >= required && self.passed == self.gated
    }
}

struct Outcome {
    pass: bool,
    ratio: f64,
    smooth_err: Option<f64>,
}

/// Row `a` of the dynamics is differentiable near `x`: no argument near zero, no near-tie in a max.
fn smooth_at(dynamics: &VectorFieldSpec, a: usize, x: &[f64], u: f64) -> Result<bool> {
    let row = &dynamics.rows[a];
    if x[a].abs() < 1e-3 {
        return Ok(false);
    }
    let mut vals = Vec::with_capacity(row.terms.len());
    for t in &row.terms {
        let arg = match t.source {
            Source::State(j) => x[j].abs(),
            Source::Input => u.abs(),
        };
        if arg < 1e-3 {
            return Ok(false);
        }
        vals.push(t.gain.eval(arg)?);
    }
    if row.agg == Aggregation::Max && vals.len() > 1 {
        vals.sort_by(|p, q| q.total_cmp(p));
        if vals[0] - vals[1] < 1e-3 * vals[0] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Sample states in a box with `||x||_inf >= inner_radius`, keep those passing the gate
/// `V(x) >= (1 + GATE_MARGIN) gamma(|u|)` and away from ties, and compare the decrease of the
/// active component with its expected rate. The box grows with the gate level so the gated
/// region keeps most of its volume.
pub fn check_decrease(model: &LyapunovModel, dynamics: &VectorFieldSpec, spec: &SampleSpec) -> Result<DecreaseReport> {
    let v = &model.composite;
    let n = v.n();
    if dynamics.n() != n {
        return Err(Error::Dimension { expected: n, found: dynamics.n() });
    }
    let gate_level = (1.0 + GATE_MARGIN) * model.gate.eval(spec.u_level.abs())?;
    let mut half = spec.half_width;
    if gate_level > 0.0 {
        for (p, s) in v.parts.iter().zip(&v.path.sigma) {
            half = half.max(2.0 * p.shape.to_abs()?.eval(s.eval(gate_level)?)?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut report = DecreaseReport {
        u_level: spec.u_level,
        gate_level,
        box_half_width: half,
        drawn: 0,
        gated: 0,
        passed: 0,
        skipped_gate: 0,
        skipped_tie: 0,
        pass_rate: 0.0,
        worst_ratio: f64::INFINITY,
        worst_state: Vec::new(),
        smooth_checked: 0,
        fd_max_rel_err: 0.0,
    };
    let max_draws = spec.samples.saturating_mul(100).max(1000);
    let mut batch: Vec<(Vec<f64>, f64, usize)> = Vec::with_capacity(spec.samples);
    while batch.len() < spec.samples && report.drawn < max_draws {
        report.drawn += 1;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-half..=half)).collect();
        let u = if rng.gen_bool(0.5) { spec.u_level } else { -spec.u_level };
        if x.iter().fold(0.0f64, |m, y| m.max(y.abs())) < spec.inner_radius {
            continue;
        }
        if v.value(&x)? < gate_level {
            report.skipped_gate += 1;
            continue;
        }
        let (a, tie) = v.active(&x)?;
        if tie {
            report.skipped_tie += 1;
            continue;
        }
        batch.push((x, u, a));
    }
    let outcomes: Vec<Outcome> = batch
        .par_iter()
        .map(|(x, u, a)| -> Result<Outcome> {
            let fd = v.fd_derivative(dynamics, *a, x, *u, spec.h)?;
            let expected = v.expected_rate(*a, x)?;
            let ratio = -fd / expected;
            let smooth_err = if smooth_at(dynamics, *a, x, *u)? {
                let exact = v.analytic_derivative(dynamics, *a, x, *u)?;
                Some((fd - exact).abs() / exact.abs().max(f64::MIN_POSITIVE))
            } else {
                None
            };
            Ok(Outcome { pass: ratio >= 1.0 - RATE_SLACK, ratio, smooth_err })
        })
        .collect::<Result<_>>()?;
    report.gated = outcomes.len();
    for ((x, _, _), o) in batch.iter().zip(&outcomes) {
        report.passed += o.pass as usize;
        if o.ratio < report.worst_ratio {
            report.worst_ratio = o.ratio;
            report.worst_state = x.clone();
        }
        if let Some(e) = o.smooth_err {
            report.smooth_checked += 1;
            report.fd_max_rel_err = report.fd_max_rel_err.max(e);
        }
    }
    report.pass_rate = if report.gated == 0 { 0.0 } else { report.passed as f64 / report.gated as f64 };
    Ok(report)
}

/// Composite properness on random states: `lower <= V <= upper` with the composed bounds.
pub fn check_proper(v: &CompositeV, samples: usize, half_width: f64, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..v.n()).map(|_| rng.gen_range(-half_width..=half_width)).collect();
        let r = x.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        let (lo, hi) = v.proper_bounds(r)?;
        let val = v.value(&x)?;
        if val < lo * (1.0 - 1e-12) || val > hi * (1.0 + 1e-12) {
            bad += 1;
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::RowDynamics;
    use crate::network::tests::example_net;

    fn lin(a: f64) -> ScalarFn {
        ScalarFn::linear(a).unwrap()
    }

    fn example() -> VectorFieldSpec {
        VectorFieldSpec::from_network(&example_net()).unwrap()
    }

    #[test]
    fn composite_on_hand_path() {
        let parts = derive_parts(&example(), &vec![PartSpec::default(); 3]).unwrap();
        let path = OmegaPath { sigma: vec![lin(0.95), lin(0.95), ScalarFn::identity()], validation: None };
        let v = compose_v(path, parts).unwrap();
        let x = [0.95, -1.9, 1.0];
        assert!((v.value(&x).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(v.active(&x).unwrap(), (1, false));
        assert_eq!(v.value(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(v.active(&[0.0; 3]).unwrap(), (0, true));
        assert_eq!(check_proper(&v, 1000, 10.0, 3).unwrap(), 0);
    }

    #[test]
    fn derived_gains() {
        let parts = derive_parts(&example(), &vec![PartSpec::default(); 3]).unwrap();
        let net = lyapunov_network(&parts).unwrap();
        assert!((net.gain(0, 2).linear_slope().unwrap() - 0.9 / 0.95).abs() < 1e-15);
        assert!((net.external(0).linear_slope().unwrap() - 1.0 / 0.95).abs() < 1e-15);
        assert!((parts[1].rate.linear_slope().unwrap() - 0.05).abs() < 1e-15);
        let quad = vec![PartSpec { shape: Shape::Quadratic(1.0), ..Default::default() }; 3];
        assert!(derive_parts(&example(), &quad).is_err());
    }

    #[test]
    fn scalar_decay() {
        let dyn1 =
            VectorFieldSpec::new(vec![RowDynamics { decay: 1.0, agg: Aggregation::Sum, terms: vec![] }]).unwrap();
        let parts = derive_parts(&dyn1, &[PartSpec::default()]).unwrap();
        let v = compose_v(OmegaPath::identity(1), parts).unwrap();
        for x in [0.5, -2.0, 7.0] {
            let d = v.fd_derivative(&dyn1, 0, &[x], 0.0, 1e-6).unwrap();
            assert!((d + x.abs()).abs() < 1e-8 * x.abs());
            assert_eq!(v.analytic_derivative(&dyn1, 0, &[x], 0.0).unwrap(), -x.abs());
        }
    }

    #[test]
    fn decrease_on_example() {
        let model =
            build_lyapunov(&example(), &vec![PartSpec::default(); 3], &lin(0.1), &PathConfig::default()).unwrap();
        for u in [0.0, 1.0] {
            let spec = SampleSpec { samples: 500, u_level: u, ..Default::default() };
            let rep = check_decrease(&model, &example(), &spec).unwrap();
            assert!(rep.ok(500), "{rep:?}");
            assert!(rep.fd_max_rel_err <= 1e-6, "{rep:?}");
        }
        // the sampling box grows with the gate level
        let spec = SampleSpec { samples: 10, u_level: 1.0, ..Default::default() };
        let rep = check_decrease(&model, &example(), &spec).unwrap();
        assert!(rep.box_half_width > 10.0);
    }
}

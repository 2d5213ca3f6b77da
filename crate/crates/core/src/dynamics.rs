//! Scalar subsystems `x_i' = -a_i x_i + agg_i(gain(|x_j|), ..., gain(|u|))` driven by one shared
//! input, fixed-step RK4 integration and empirical checks of the time-free stability estimates.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kfun::{Aggregation, ScalarFn, OVERFLOW_GUARD};
use crate::network::{GainNetwork, GainRole};
use crate::verify::{self, phi_bound, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "index")]
pub enum Source {
    State(usize),
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub source: Source,
    pub gain: ScalarFn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowDynamics {
    pub decay: f64,
    pub agg: Aggregation,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorFieldSpec {
    pub rows: Vec<RowDynamics>,
}

impl RowDynamics {
    pub fn state_gain(&self, j: usize) -> Option<&ScalarFn> {
        self.terms.iter().find(|t| t.source == Source::State(j)).map(|t| &t.gain)
    }

    pub fn input_gain(&self) -> Option<&ScalarFn> {
        self.terms.iter().find(|t| t.source == Source::Input).map(|t| &t.gain)
    }
}

impl VectorFieldSpec {
    pub fn new(rows: Vec<RowDynamics>) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if !(row.decay > 0.0 && row.decay.is_finite()) {
                return Err(Error::Dynamics(format!("row {}: self slope must be positive", i + 1)));
            }
            let mut seen = Vec::new();
            for t in &row.terms {
                if let Source::State(j) = t.source {
                    if j >= n {
                        return Err(Error::Dynamics(format!("row {}: term references x{}", i + 1, j + 1)));
                    }
                    if j == i {
                        return Err(Error::Dynamics(format!("row {}: self term belongs in the self slope", i + 1)));
                    }
                }
                if seen.contains(&t.source) {
                    return Err(Error::Dynamics(format!("row {}: duplicate term", i + 1)));
                }
                seen.push(t.source);
            }
        }
        Ok(Self { rows })
    }

    /// Dynamics whose gains are the linear slopes of `net` with unit decay.
    pub fn from_network(net: &GainNetwork) -> Result<Self> {
        let rows = (0..net.n())
            .map(|i| {
                let mut terms: Vec<Term> = (0..net.n())
                    .filter(|&j| !net.gain(i, j).is_zero())
                    .map(|j| Term { source: Source::State(j), gain: net.gain(i, j).clone() })
                    .collect();
                if !net.external(i).is_zero() {
                    terms.push(Term { source: Source::Input, gain: net.external(i).clone() });
                }
                RowDynamics { decay: 1.0, agg: net.agg()[i], terms }
            })
            .collect();
        Self::new(rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn eval(&self, x: &[f64], u: f64) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::Dimension { expected: self.n(), found: x.len() });
        }
        self.rows
            .iter()
            .zip(x)
            .map(|(row, &xi)| {
                let mut acc = 0.0f64;
                for t in &row.terms {
                    let arg = match t.source {
                        Source::State(j) => x[j].abs(),
                        Source::Input => u.abs(),
                    };
                    let v = t.gain.eval(arg)?;
                    acc = match row.agg {
                        Aggregation::Sum => acc + v,
                        Aggregation::Max => acc.max(v),
                    };
                }
                Ok(-row.decay * xi + acc)
            })
            .collect()
    }

    /// Time-free gain network: `gamma_ij / a_i` with the row's aggregation and input gains as the
    /// external column.
    pub fn gs_network(&self) -> Result<GainNetwork> {
        let n = self.n();
        let scale = |f: &ScalarFn, a: f64| -> Result<ScalarFn> {
            if a == 1.0 {
                Ok(f.clone())
            } else {
                Ok(ScalarFn::compose(&ScalarFn::linear(1.0 / a)?, f))
            }
        };
        let mut gamma = vec![vec![ScalarFn::zero(); n]; n];
        let mut external = vec![ScalarFn::zero(); n];
        for (i, row) in self.rows.iter().enumerate() {
            for t in &row.terms {
                let g = scale(&t.gain, row.decay)?;
                match t.source {
                    Source::State(j) => gamma[i][j] = g,
                    Source::Input => external[i] = g,
                }
            }
        }
        Ok(GainNetwork::new(self.rows.iter().map(|r| r.agg).collect(), gamma, external)?.with_role(GainRole::Gs))
    }

    /// Largest difference quotient `|f(x) - f(y)| / |x - y|` over random nearby pairs in the box.
    pub fn lipschitz_estimate(&self, half_width: f64, pairs: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..pairs {
            let x: Vec<f64> = (0..self.n()).map(|_| rng.gen_range(-half_width..=half_width)).collect();
            let y: Vec<f64> = x.iter().map(|v| v + rng.gen_range(-1e-3..=1e-3)).collect();
            let (fx, fy) = (self.eval(&x, 0.0)?, self.eval(&y, 0.0)?);
            let num = fx.iter().zip(&fy).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let den = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if den > 0.0 {
                worst = worst.max(num / den);
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum InputSignal {
    Constant { value: f64 },
    Step { value: f64, at: f64 },
    Sinusoid { amplitude: f64, frequency: f64, clamp: f64 },
}

impl InputSignal {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            InputSignal::Constant { value } => value,
            InputSignal::Step { value, at } => {
                if t >= at {
                    value
                } else {
                    0.0
                }
            }
            InputSignal::Sinusoid { amplitude, frequency, clamp } => {
                (amplitude * (2.0 * std::f64::consts::PI * frequency * t).sin()).clamp(-clamp, clamp)
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            InputSignal::Constant { value } | InputSignal::Step { value, .. } => value.abs(),
            InputSignal::Sinusoid { amplitude, clamp, .. } => amplitude.abs().min(clamp.abs()),
        }
    }
}

impl std::str::FromStr for InputSignal {
    type Err = Error;

    /// `const:<v>` or `step:<v>@<t>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("input signal {s:?}: expected const:<v> or step:<v>@<t>"));
        let num = |x: &str| x.trim().parse::<f64>().ok().filter(|v| v.is_finite());
        if let Some(v) = s.strip_prefix("const:") {
            return Ok(InputSignal::Constant { value: num(v).ok_or_else(bad)? });
        }
        if let Some(rest) = s.strip_prefix("step:") {
            let (v, t) = rest.split_once('@').ok_or_else(bad)?;
            return Ok(InputSignal::Step { value: num(v).ok_or_else(bad)?, at: num(t).ok_or_else(bad)? });
        }
        Err(bad())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub input_sup: f64,
}

fn rk4_step(spec: &VectorFieldSpec, x: &[f64], t: f64, dt: f64, u: &InputSignal) -> Result<Vec<f64>> {
    let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, y)| x + s * y).collect() };
    let k1 = spec.eval(x, u.at(t))?;
    let k2 = spec.eval(&axpy(x, &k1, dt / 2.0), u.at(t + dt / 2.0))?;
    let k3 = spec.eval(&axpy(x, &k2, dt / 2.0), u.at(t + dt / 2.0))?;
    let k4 = spec.eval(&axpy(x, &k3, dt), u.at(t + dt))?;
    Ok((0..x.len()).map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

/// One RK4 step of length `h` from `x` under constant input `u`.
pub fn flow_step(spec: &VectorFieldSpec, x: &[f64], u: f64, h: f64) -> Result<Vec<f64>> {
    rk4_step(spec, x, 0.0, h, &InputSignal::Constant { value: u })
}

fn steps_for(t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite() && t_end >= dt) {
        return Err(Error::Dynamics(format!("need dt > 0 and T >= dt, got dt = {dt}, T = {t_end}")));
    }
    Ok((t_end / dt).round() as usize)
}

fn finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite() && v.abs() <= OVERFLOW_GUARD)
}

pub fn integrate(spec: &VectorFieldSpec, x0: &[f64], u: &InputSignal, t_end: f64, dt: f64) -> Result<Trajectory> {
    if x0.len() != spec.n() {
        return Err(Error::Dimension { expected: spec.n(), found: x0.len() });
    }
    let steps = steps_for(t_end, dt)?;
    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        input_sup: u.sup_norm(),
    };
    let mut x = x0.to_vec();
    traj.t.push(0.0);
    traj.x.push(x.clone());
    traj.u.push(u.at(0.0));
    for k in 0..steps {
        let t = k as f64 * dt;
        let next = rk4_step(spec, &x, t, dt, u)?;
        if !finite(&next) {
            return Err(Error::Divergence { t });
        }
        x = next;
        let t1 = (k + 1) as f64 * dt;
        traj.t.push(t1);
        traj.x.push(x.clone());
        traj.u.push(u.at(t1));
    }
    Ok(traj)
}

pub fn endpoint(spec: &VectorFieldSpec, x0: &[f64], u: &InputSignal, t_end: f64, dt: f64) -> Result<Vec<f64>> {
    let steps = steps_for(t_end, dt)?;
    let mut x = x0.to_vec();
    for k in 0..steps {
        x = rk4_step(spec, &x, k as f64 * dt, dt, u)?;
        if !finite(&x) {
            return Err(Error::Divergence { t: k as f64 * dt });
        }
    }
    Ok(x)
}

/// Relative endpoint difference between steps `dt` and `dt / 2`.
pub fn step_halving_error(spec: &VectorFieldSpec, x0: &[f64], u: &InputSignal, t_end: f64, dt: f64) -> Result<f64> {
    let a = endpoint(spec, x0, u, t_end, dt)?;
    let b = endpoint(spec, x0, u, t_end, dt / 2.0)?;
    Ok(max_norm(&a.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>()) / max_norm(&b).max(1e-300))
}

pub fn max_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

impl Trajectory {
    pub fn n(&self) -> usize {
        self.x.first().map_or(0, |x| x.len())
    }

    pub fn last(&self) -> &[f64] {
        self.x.last().expect("trajectory has its initial state")
    }

    pub fn horizon(&self) -> f64 {
        *self.t.last().unwrap_or(&0.0)
    }

    /// Sustained growth: the state ends far above its initial size and input, and the norm
    /// still increases over the final tenth of the horizon.
    pub fn is_growing(&self) -> bool {
        let m = self.t.len();
        if m < 10 {
            return false;
        }
        let scale = 1.0 + max_norm(&self.x[0]) + self.input_sup;
        let end = max_norm(self.last());
        let before = max_norm(&self.x[m - 1 - m / 10]);
        end > 1e3 * scale && end > 1.01 * before
    }

    /// CSV with header `t,x1,..,xn,u1`, 17 significant digits and LF endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = String::from("t");
        for i in 1..=self.n() {
            header.push_str(&format!(",x{i}"));
        }
        header.push_str(",u1\n");
        w.write_all(header.as_bytes())?;
        for k in 0..self.t.len() {
            let mut line = format!("{:.16e}", self.t[k]);
            for v in &self.x[k] {
                line.push_str(&format!(",{v:.16e}"));
            }
            line.push_str(&format!(",{:.16e}\n", self.u[k]));
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundCheck {
    pub holds: bool,
    /// Smallest `bound - observed`.
    pub margin: f64,
    pub bound: f64,
    pub observed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateReport {
    pub applicable: bool,
    pub growing: bool,
    pub gs: Option<BoundCheck>,
    pub ag: Option<BoundCheck>,
    pub ag_settled: bool,
    pub rows: Vec<BoundCheck>,
    pub notes: Vec<String>,
}

impl EstimateReport {
    pub fn passed(&self) -> bool {
        self.applicable
            && self.gs.as_ref().is_some_and(|c| c.holds)
            && self.ag.as_ref().is_some_and(|c| c.holds)
            && self.rows.iter().all(|c| c.holds)
    }
}

/// Tail window for the asymptotic gain check.
pub const TAIL_FRACTION: f64 = 0.2;

/// Compare a trajectory with the time-free bounds of the gain network `net`:
/// `||x_[0,t]|| <= phi(2 ||sigma(|x(0)|)||) + phi(2 ||gamma_hat(||u||)||)` at every `t`,
/// `sup_{tail} ||x|| <= phi(||gamma_hat(||u||)||)` and each row estimate after a settling prefix.
pub fn check_estimates(
    traj: &Trajectory,
    net: &GainNetwork,
    alpha: &ScalarFn,
    sigma: &[ScalarFn],
    gamma_hat: &[ScalarFn],
    decay: &[f64],
) -> Result<EstimateReport> {
    let n = net.n();
    if traj.n() != n || sigma.len() != n || gamma_hat.len() != n || decay.len() != n {
        return Err(Error::Dimension { expected: n, found: traj.n() });
    }
    let growing = traj.is_growing();
    let mut report = EstimateReport {
        applicable: true,
        growing,
        gs: None,
        ag: None,
        ag_settled: true,
        rows: Vec::new(),
        notes: Vec::new(),
    };
    let cfg = verify::AnalysisConfig { alpha: Some(alpha.clone()), ..Default::default() };
    if verify::decide(net, alpha, &cfg)?.status != Status::Verified {
        report.applicable = false;
        report.notes.push("not applicable: small gain fails".into());
        return Ok(report);
    }
    let phi = |r: f64| phi_bound(net, alpha, r).map(|p| p.value);
    let x0 = &traj.x[0];
    let s0 = (0..n).map(|i| sigma[i].eval(x0[i].abs())).collect::<Result<Vec<_>>>()?;
    let us = traj.input_sup;
    let gu = gamma_hat.iter().map(|g| g.eval(us)).collect::<Result<Vec<_>>>()?;
    let gs_bound = phi(2.0 * max_norm(&s0))? + phi(2.0 * max_norm(&gu))?;
    let mut running = 0.0f64;
    let mut gs = BoundCheck { holds: true, margin: f64::INFINITY, bound: gs_bound, observed: 0.0 };
    for x in &traj.x {
        running = running.max(max_norm(x));
        gs.margin = gs.margin.min(gs_bound - running);
    }
    gs.observed = running;
    gs.holds = gs.margin >= 0.0;
    report.gs = Some(gs);

    let horizon = traj.horizon();
    let slowest = decay.iter().cloned().fold(f64::INFINITY, f64::min);
    report.ag_settled = horizon * slowest >= 5.0;
    if !report.ag_settled {
        report.notes.push("ag: unsettled, horizon shorter than five time constants".into());
    }
    let tail_start = horizon * (1.0 - TAIL_FRACTION);
    let tail =
        traj.t.iter().zip(&traj.x).filter(|(t, _)| **t >= tail_start).fold(0.0f64, |m, (_, x)| m.max(max_norm(x)));
    let settle_tol = 1e-2 * max_norm(x0).max(1.0);
    let ag_bound = phi(max_norm(&gu))? + settle_tol;
    report.ag = Some(BoundCheck {
        holds: report.ag_settled && tail <= ag_bound,
        margin: ag_bound - tail,
        bound: ag_bound,
        observed: tail,
    });

    // Row estimates with the transient dropped after ten time constants.
    let mut sup_so_far = vec![0.0f64; n];
    let mut rows: Vec<BoundCheck> =
        (0..n).map(|_| BoundCheck { holds: true, margin: f64::INFINITY, bound: 0.0, observed: 0.0 }).collect();
    let row_tol = 1e-4 * (1.0 + max_norm(x0));
    for (t, x) in traj.t.iter().zip(&traj.x) {
        for j in 0..n {
            sup_so_far[j] = sup_so_far[j].max(x[j].abs());
        }
        for i in 0..n {
            if *t < 10.0 / decay[i] {
                continue;
            }
            let internal = net.apply_row(i, &sup_so_far)?;
            let ext = net.external(i).eval(us)?;
            let est = match net.agg()[i] {
                Aggregation::Sum => internal + ext,
                Aggregation::Max => internal.max(ext),
            } + row_tol;
            let m = est - x[i].abs();
            if m < rows[i].margin {
                rows[i] = BoundCheck { holds: m >= 0.0, margin: m, bound: est, observed: x[i].abs() };
            }
        }
    }
    report.rows = rows;
    report.notes.push("ag checked on the supplied input only".into());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::example_net;

    fn decay_only() -> VectorFieldSpec {
        VectorFieldSpec::new(vec![RowDynamics { decay: 1.0, agg: Aggregation::Sum, terms: vec![] }]).unwrap()
    }

    #[test]
    fn exponential_decay() {
        let x = endpoint(&decay_only(), &[1.0], &InputSignal::Constant { value: 0.0 }, 1.0, 1e-3).unwrap();
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn rk4_order() {
        let spec = decay_only();
        let u = InputSignal::Constant { value: 0.0 };
        let exact = (-1.0f64).exp();
        let e1 = (endpoint(&spec, &[1.0], &u, 1.0, 0.1).unwrap()[0] - exact).abs();
        let e2 = (endpoint(&spec, &[1.0], &u, 1.0, 0.05).unwrap()[0] - exact).abs();
        assert!((e1 / e2 - 16.0).abs() < 1.0, "{}", e1 / e2);
    }

    #[test]
    fn equilibrium_matches_fixed_point() {
        let spec = VectorFieldSpec::from_network(&example_net()).unwrap();
        let x = endpoint(&spec, &[0.0; 3], &InputSignal::Constant { value: 1.0 }, 60.0, 1e-3).unwrap();
        let x1 = 1.0 / 0.271;
        for (a, b) in x.iter().zip([x1, 0.9 * x1, 0.81 * x1]) {
            assert!((a - b).abs() < 1e-2 * b);
        }
    }

    #[test]
    fn gs_network_scales_by_decay() {
        let spec = VectorFieldSpec::new(vec![
            RowDynamics {
                decay: 2.0,
                agg: Aggregation::Sum,
                terms: vec![Term { source: Source::State(1), gain: ScalarFn::linear(0.5).unwrap() }],
            },
            RowDynamics {
                decay: 1.0,
                agg: Aggregation::Max,
                terms: vec![Term { source: Source::Input, gain: ScalarFn::identity() }],
            },
        ])
        .unwrap();
        let net = spec.gs_network().unwrap();
        assert_eq!(net.gain(0, 1).linear_slope(), Some(0.25));
        assert!(net.external(1).is_identity());
        assert!(spec.lipschitz_estimate(5.0, 200, 1).unwrap() <= 2.5 + 1e-9);
    }

    #[test]
    fn rejects_bad_rows() {
        let bad = RowDynamics {
            decay: 1.0,
            agg: Aggregation::Sum,
            terms: vec![Term { source: Source::State(0), gain: ScalarFn::identity() }],
        };
        assert!(VectorFieldSpec::new(vec![bad]).is_err());
        assert!(VectorFieldSpec::new(vec![RowDynamics { decay: 0.0, agg: Aggregation::Sum, terms: vec![] }]).is_err());
    }

    #[test]
    fn input_signals() {
        let s: InputSignal = "step:2@1.5".parse().unwrap();
        assert_eq!((s.at(1.0), s.at(1.5), s.sup_norm()), (0.0, 2.0, 2.0));
        assert_eq!("const:-1".parse::<InputSignal>().unwrap().sup_norm(), 1.0);
        assert!("sine:1".parse::<InputSignal>().is_err());
        let w = InputSignal::Sinusoid { amplitude: 2.0, frequency: 0.25, clamp: 1.0 };
        assert_eq!((w.at(1.0), w.sup_norm()), (1.0, 1.0));
    }

    #[test]
    fn csv_format() {
        let traj = integrate(&decay_only(), &[1.0], &InputSignal::Constant { value: 0.0 }, 2e-3, 1e-3).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,u1");
        assert_eq!(lines[1], "0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0");
        assert_eq!(lines.len(), 4);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn estimates_on_example() {
        let net = example_net();
        let spec = VectorFieldSpec::from_network(&net).unwrap();
        let alpha = ScalarFn::linear(0.1).unwrap();
        let sigma = vec![ScalarFn::identity(); 3];
        let ext: Vec<ScalarFn> = (0..3).map(|i| net.external(i).clone()).collect();
        let traj = integrate(&spec, &[0.0; 3], &InputSignal::Constant { value: 1.0 }, 60.0, 1e-2).unwrap();
        let rep = check_estimates(&traj, &spec.gs_network().unwrap(), &alpha, &sigma, &ext, &[1.0; 3]).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!((rep.gs.as_ref().unwrap().observed - 1.0 / 0.271).abs() < 2e-2);

        let traj = integrate(&spec, &[1.0; 3], &InputSignal::Constant { value: 0.0 }, 60.0, 1e-2).unwrap();
        // equal coordinates decay together at rate 1 - 0.9
        for v in traj.last() {
            assert!((v - (-6.0f64).exp()).abs() < 1e-9);
        }
        let rep = check_estimates(&traj, &net, &alpha, &sigma, &ext, &[1.0; 3]).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!((rep.ag.unwrap().observed - (-4.8f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn destabilized_variant_grows() {
        let net = GainNetwork::linear(
            example_net().agg().to_vec(),
            &[vec![0.0, 0.0, 1.2], vec![1.2, 0.0, 1.2], vec![0.0, 1.2, 0.0]],
            &[1.0, 0.0, 1.0],
        )
        .unwrap();
        let spec = VectorFieldSpec::from_network(&net).unwrap();
        let traj = integrate(&spec, &[0.0; 3], &InputSignal::Constant { value: 1.0 }, 60.0, 1e-2).unwrap();
        assert!(traj.is_growing());
        let ext: Vec<ScalarFn> = (0..3).map(|i| net.external(i).clone()).collect();
        let rep = check_estimates(
            &traj,
            &net,
            &ScalarFn::linear(0.1).unwrap(),
            &vec![ScalarFn::identity(); 3],
            &ext,
            &[1.0; 3],
        )
        .unwrap();
        assert!(!rep.applicable && !rep.passed());
    }
}

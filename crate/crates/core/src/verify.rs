//! Deciding and falsifying the mixed small-gain condition `Gamma o D_alpha (s) >= s` has no
//! nonzero solution.
//!
//! Positive evidence comes from cycle tests on a grid and, for homogeneous gains, from
//! Collatz-Wielandt bounds on the operator radius. Negative evidence is a witness vector that
//! anyone can re-check with `apply_gamma` and `apply_d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{condensation, NetworkGraph};
use crate::grid::{geometric, GridSpec};
use crate::kfun::{less_than_id, Aggregation, ScalarFn, OVERFLOW_GUARD};
use crate::network::GainNetwork;
use crate::spectral::{collatz_wielandt, mat_vec, RadiusBounds};

const RADIUS_TOL: f64 = 1e-12;
const RADIUS_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Verified,
    Falsified,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    Exact,
    GridVerified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleEvidence {
    /// Subsystem indices, 1-based, in flow order.
    pub nodes: Vec<usize>,
    /// Largest `f(r) / r` of the augmented cycle gain on the grid.
    pub margin: f64,
    pub holds: bool,
    pub witness_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evidence {
    pub grid: GridSpec,
    pub cycles: Vec<CycleEvidence>,
    pub spectral_radius: Option<f64>,
    pub operator_radius: Option<[f64; 2]>,
    pub exactness: Option<Exactness>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    pub status: Status,
    pub alpha: Option<ScalarFn>,
    pub witness: Option<Vec<f64>>,
    pub evidence: Evidence,
}

impl Certificate {
    /// Falsified certificates must carry a nonzero `w` with `Gamma o D_alpha (w) >= w`.
    pub fn recheck(&self, net: &GainNetwork, alpha: &ScalarFn) -> Result<bool> {
        match (&self.status, &self.witness) {
            (Status::Falsified, Some(w)) => is_witness(net, alpha, w),
            (Status::Falsified, None) => Ok(false),
            _ => Ok(true),
        }
    }
}

pub fn is_witness(net: &GainNetwork, alpha: &ScalarFn, s: &[f64]) -> Result<bool> {
    if s.iter().all(|&x| x == 0.0) {
        return Ok(false);
    }
    let t = net.apply_gamma_d(alpha, s)?;
    Ok(t.iter().zip(s).all(|(a, b)| a >= b))
}

fn d_fn(net: &GainNetwork, alpha: &ScalarFn, i: usize) -> ScalarFn {
    match net.agg()[i] {
        Aggregation::Sum => ScalarFn::id_plus(alpha),
        Aggregation::Max => ScalarFn::identity(),
    }
}

/// Cycle gain `D o gamma` composed along `cycle`, ending back at `cycle[0]`.
pub fn cycle_gain(net: &GainNetwork, alpha: &ScalarFn, cycle: &[usize]) -> ScalarFn {
    let k = cycle.len();
    let mut g = ScalarFn::identity();
    for m in 1..=k {
        let (src, dst) = (cycle[m - 1], cycle[m % k]);
        let step = ScalarFn::compose(&d_fn(net, alpha, dst), net.gain(dst, src));
        g = ScalarFn::compose(&step, &g);
    }
    g
}

/// Witness for a failing cycle, built in the `Gamma o D` form so that the check is exact.
fn cycle_witness(net: &GainNetwork, alpha: &ScalarFn, cycle: &[usize], grid: &GridSpec) -> Result<Option<Vec<f64>>> {
    let k = cycle.len();
    for r in grid.values() {
        let mut w = vec![0.0; net.n()];
        w[cycle[0]] = r;
        let mut x = r;
        for m in 1..=k {
            let (src, dst) = (cycle[m - 1], cycle[m % k]);
            x = net.gain(dst, src).eval(d_fn(net, alpha, src).eval(x)?)?;
            if m < k {
                w[dst] = x;
            }
        }
        if x >= r && is_witness(net, alpha, &w)? {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

pub fn verify_cycles(net: &GainNetwork, alpha: &ScalarFn, grid: &GridSpec, cap: usize) -> Result<Certificate> {
    grid.check()?;
    let graph = condensation(net);
    let mut evidence = Evidence {
        grid: *grid,
        cycles: Vec::new(),
        spectral_radius: None,
        operator_radius: None,
        exactness: None,
        notes: Vec::new(),
    };
    let cycles = match graph.simple_cycles(cap) {
        Ok(c) => c,
        Err(Error::CycleCap(c)) => {
            evidence.notes.push(format!("cycle enumeration stopped after {c} cycles"));
            return Ok(Certificate { status: Status::Inconclusive, alpha: None, witness: None, evidence });
        }
        Err(e) => return Err(e),
    };
    let mut witness = None;
    for c in &cycles {
        let t = less_than_id(&cycle_gain(net, alpha, c), grid)?;
        if !t.holds && witness.is_none() {
            witness = cycle_witness(net, alpha, c, grid)?;
        }
        evidence.cycles.push(CycleEvidence {
            nodes: c.iter().map(|v| v + 1).collect(),
            margin: t.max_ratio,
            holds: t.holds,
            witness_r: t.witness,
        });
    }
    let all_hold = evidence.cycles.iter().all(|c| c.holds);
    let status = if all_hold {
        Status::Verified
    } else if witness.is_some() {
        Status::Falsified
    } else {
        evidence.notes.push("a cycle test failed but no exact witness was reconstructed".into());
        Status::Inconclusive
    };
    Ok(Certificate { status, alpha: (status == Status::Verified).then(|| alpha.clone()), witness, evidence })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralTest {
    pub rho: f64,
    pub sum_condition: bool,
    pub perron: Vec<f64>,
}

/// Spectral radius of the slope matrix, computed block by block on the condensation.
pub fn verify_linear(net: &GainNetwork) -> Result<SpectralTest> {
    let a = net.slope_matrix()?;
    let graph = condensation(net);
    let mut rho = 0.0;
    let mut perron = vec![0.0; net.n()];
    if net.n() > 0 {
        perron[0] = 1.0;
    }
    for block in graph.scc.iter().filter(|b| b.len() > 1) {
        let sub: Vec<Vec<f64>> = block.iter().map(|&i| block.iter().map(|&j| a[i][j]).collect()).collect();
        let b = collatz_wielandt(|v| Ok(mat_vec(&sub, v)), block.len(), 1e-10, RADIUS_MAX_ITER)?;
        let est = 0.5 * (b.lower + b.upper);
        if est > rho {
            rho = est;
            perron = vec![0.0; net.n()];
            for (k, &i) in block.iter().enumerate() {
                perron[i] = b.upper_vec[k];
            }
        }
    }
    Ok(SpectralTest { rho, sum_condition: rho < 1.0, perron })
}

/// Radius bounds of a homogeneous operator, assembled over the diagonal blocks. The vectors
/// are embedded into the full index set with zeros outside the attaining block.
pub fn block_radius<F>(graph: &NetworkGraph, op: F) -> Result<RadiusBounds>
where
    F: Fn(&[usize], &[f64]) -> Result<Vec<f64>>,
{
    let n = graph.n;
    let mut out =
        RadiusBounds { lower: 0.0, upper: 0.0, upper_vec: vec![1.0; n], lower_vec: vec![1.0; n], iterations: 0 };
    for block in graph.scc.iter().filter(|b| b.len() > 1) {
        let b = collatz_wielandt(|v| op(block, v), block.len(), RADIUS_TOL, RADIUS_MAX_ITER)?;
        out.iterations += b.iterations;
        out.upper = out.upper.max(b.upper);
        if b.lower > out.lower {
            out.lower = b.lower;
            out.lower_vec = vec![0.0; n];
            for (k, &i) in block.iter().enumerate() {
                out.lower_vec[i] = b.lower_vec[k];
            }
        }
    }
    Ok(out)
}

fn gamma_d_radius(net: &GainNetwork, alpha: &ScalarFn) -> Result<RadiusBounds> {
    let graph = condensation(net);
    block_radius(&graph, |block, v| net.restrict(block)?.apply_gamma_d(alpha, v))
}

pub fn is_homogeneous(net: &GainNetwork, alpha: &ScalarFn) -> bool {
    net.is_linear() && alpha.linear_slope().is_some()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub rays: usize,
    pub ray_points: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub seed_scales: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            rays: 256,
            ray_points: 61,
            r_min: 1e-3,
            r_max: 1e3,
            seed_scales: 7,
            iterations: 500,
            seed: 0x15_5eed,
        }
    }
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n];
    let full = rng.gen_bool(0.5);
    loop {
        for x in d.iter_mut() {
            *x = if full || rng.gen_bool(0.5) { 10f64.powf(rng.gen_range(-3.0..0.0)) } else { 0.0 };
        }
        if d.iter().any(|&x| x > 0.0) {
            break;
        }
    }
    let m = d.iter().cloned().fold(0.0, f64::max);
    d.iter().map(|x| x / m).collect()
}

/// Smallest relative excess of `T(s)` over `s` on the support of `s`.
fn excess(t: &[f64], s: &[f64]) -> f64 {
    t.iter().zip(s).filter(|(_, &x)| x > 0.0).map(|(a, b)| (a - b) / b).fold(f64::INFINITY, f64::min)
}

fn ray_search(net: &GainNetwork, alpha: &ScalarFn, d: &[f64], spec: &SearchSpec) -> Option<Vec<f64>> {
    let ts = geometric(spec.r_min, spec.r_max, spec.ray_points.max(2));
    let at = |t: f64| -> Option<(f64, Vec<f64>)> {
        let s: Vec<f64> = d.iter().map(|x| x * t).collect();
        let v = net.apply_gamma_d(alpha, &s).ok()?;
        Some((excess(&v, &s), s))
    };
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (k, &t) in ts.iter().enumerate() {
        let (g, s) = at(t)?;
        if g >= 0.0 && is_witness(net, alpha, &s).ok()? {
            return Some(s);
        }
        if g > best.0 {
            best = (g, k);
        }
    }
    // golden-section refinement in log t around the best grid point
    let k = best.1;
    let (mut a, mut b) = (ts[k.saturating_sub(1)].ln(), ts[(k + 1).min(ts.len() - 1)].ln());
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        let (g1, s1) = at(x1.exp())?;
        let (g2, s2) = at(x2.exp())?;
        for (g, s) in [(g1, &s1), (g2, &s2)] {
            if g >= 0.0 && is_witness(net, alpha, s).ok()? {
                return Some(s.clone());
            }
        }
        if g1 > g2 {
            b = x2;
        } else {
            a = x1;
        }
    }
    None
}

fn seed_search(net: &GainNetwork, alpha: &ScalarFn, c: f64, spec: &SearchSpec) -> Result<Option<Vec<f64>>> {
    let n = net.n();
    // downward: z <- min(z, T z) settles on the largest sub-fixed point below c * e
    let mut z = vec![c; n];
    for _ in 0..spec.iterations {
        let t = net.apply_gamma_d(alpha, &z)?;
        if t.iter().zip(&z).all(|(a, b)| a >= b) {
            if z.iter().any(|&x| x > 0.0) {
                return Ok(Some(z));
            }
            break;
        }
        let next: Vec<f64> = z.iter().zip(&t).map(|(a, b)| a.min(*b)).collect();
        if next.iter().cloned().fold(0.0, f64::max) < c * 1e-12 {
            break;
        }
        z = next;
    }
    // upward: s <- T s, watching for an expanded iterate
    let mut s = vec![c; n];
    for _ in 0..spec.iterations {
        let t = net.apply_gamma_d(alpha, &s)?;
        if is_witness(net, alpha, &s)? {
            return Ok(Some(s));
        }
        let m = t.iter().cloned().fold(0.0, f64::max);
        if !(m.is_finite() && m < OVERFLOW_GUARD && m > 1.0 / OVERFLOW_GUARD) {
            break;
        }
        s = t;
    }
    Ok(None)
}

/// Search for `s != 0` with `Gamma o D_alpha (s) >= s`. `None` means the budget ran out.
pub fn falsify(net: &GainNetwork, alpha: &ScalarFn, spec: &SearchSpec) -> Result<Option<Vec<f64>>> {
    let n = net.n();
    if n == 0 {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut dirs = vec![vec![1.0; n]];
    dirs.extend((0..spec.rays).map(|_| random_direction(&mut rng, n)));
    let mut found = dirs.par_iter().find_map_first(|d| ray_search(net, alpha, d, spec));
    if found.is_none() {
        for c in geometric(spec.r_min, spec.r_max, spec.seed_scales.max(2)) {
            if let Some(w) = seed_search(net, alpha, c, spec)? {
                found = Some(w);
                break;
            }
        }
    }
    let Some(w) = found else { return Ok(None) };
    if is_homogeneous(net, alpha) {
        let m = w.iter().cloned().fold(0.0, f64::max);
        let scaled: Vec<f64> = w.iter().map(|x| x / m).collect();
        if is_witness(net, alpha, &scaled)? {
            return Ok(Some(scaled));
        }
    }
    Ok(Some(w))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiBound {
    pub value: f64,
    pub iterates: Vec<Vec<f64>>,
}

/// Bound `phi(r)`: largest coordinate of `n` iterations of `v -> D~(mu(Gamma(v), v))` from
/// `(r, ..., r)`, where `D~` adds `alpha^{-1}` on sum rows.
pub fn phi_bound(net: &GainNetwork, alpha: &ScalarFn, r: f64) -> Result<PhiBound> {
    if !(r >= 0.0) {
        return Err(Error::Domain(r));
    }
    let mut v = vec![r; net.n()];
    let mut iterates = vec![v.clone()];
    for it in 1..=net.n() {
        let mu = net.apply_mu(&net.apply_gamma(&v, None)?, &v)?;
        v = mu
            .iter()
            .zip(net.agg())
            .map(|(&x, a)| match a {
                Aggregation::Sum => Ok(x + alpha.eval_inverse(x)?),
                Aggregation::Max => Ok(x),
            })
            .collect::<Result<Vec<f64>>>()?;
        if v.iter().any(|x| !(x.is_finite() && *x <= OVERFLOW_GUARD)) {
            return Err(Error::Overflow { iterate: it });
        }
        iterates.push(v.clone());
    }
    let value = v.iter().cloned().fold(if net.n() == 0 { r } else { 0.0 }, f64::max);
    Ok(PhiBound { value, iterates })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub grid: GridSpec,
    pub alpha: Option<ScalarFn>,
    pub alpha_sweep: Vec<f64>,
    pub cycle_cap: usize,
    pub search: SearchSpec,
}

pub const DEFAULT_ALPHA_SWEEP: [f64; 6] = [1.0, 0.5, 0.2, 0.1, 0.05, 0.01];

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            grid: GridSpec::default(),
            alpha: None,
            alpha_sweep: DEFAULT_ALPHA_SWEEP.to_vec(),
            cycle_cap: 10_000,
            search: SearchSpec::default(),
        }
    }
}

/// Two-sided decision for a fixed `alpha`.
pub fn decide(net: &GainNetwork, alpha: &ScalarFn, cfg: &AnalysisConfig) -> Result<Certificate> {
    let mut cert = verify_cycles(net, alpha, &cfg.grid, cfg.cycle_cap)?;
    if cert.status == Status::Falsified {
        cert.evidence.exactness = Some(Exactness::Exact);
        return Ok(cert);
    }
    let capped = cert.status == Status::Inconclusive;
    if is_homogeneous(net, alpha) {
        let b = gamma_d_radius(net, alpha)?;
        cert.evidence.operator_radius = Some([b.lower, b.upper]);
        if b.upper < 1.0 {
            cert.status = Status::Verified;
            cert.alpha = Some(alpha.clone());
            cert.evidence.exactness = Some(Exactness::Exact);
            return Ok(cert);
        }
        if b.lower >= 1.0 && is_witness(net, alpha, &b.lower_vec)? {
            cert.status = Status::Falsified;
            cert.alpha = None;
            cert.witness = Some(b.lower_vec);
            cert.evidence.exactness = Some(Exactness::Exact);
            return Ok(cert);
        }
    }
    if let Some(w) = falsify(net, alpha, &cfg.search)? {
        cert.status = Status::Falsified;
        cert.alpha = None;
        cert.witness = Some(w);
        cert.evidence.exactness = Some(Exactness::Exact);
        return Ok(cert);
    }
    if capped {
        cert.evidence.notes.push("no witness found, but not every cycle was tested".into());
        return Ok(cert);
    }
    cert.status = Status::Verified;
    cert.alpha = Some(alpha.clone());
    cert.evidence.exactness = Some(Exactness::GridVerified);
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaTrial {
    pub alpha: ScalarFn,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    pub certificate: Certificate,
    pub spectral: Option<SpectralTest>,
    pub trials: Vec<AlphaTrial>,
}

/// Run the decision procedure with the configured `alpha`, or sweep `c * id` over
/// `cfg.alpha_sweep` and keep the first pass. Without a pass the last trial is reported.
pub fn analyze(net: &GainNetwork, cfg: &AnalysisConfig) -> Result<Analysis> {
    let alphas: Vec<ScalarFn> = match &cfg.alpha {
        Some(a) => vec![a.clone()],
        None => cfg.alpha_sweep.iter().map(|&c| ScalarFn::linear(c)).collect::<Result<_>>()?,
    };
    if alphas.is_empty() {
        return Err(Error::Validation("empty alpha sweep".into()));
    }
    let mut trials = Vec::new();
    let mut last = None;
    for a in alphas {
        let cert = decide(net, &a, cfg)?;
        trials.push(AlphaTrial { alpha: a, status: cert.status });
        let done = cert.status == Status::Verified;
        last = Some(cert);
        if done {
            break;
        }
    }
    let mut certificate = last.expect("at least one trial");
    let spectral = if net.is_linear() { Some(verify_linear(net)?) } else { None };
    certificate.evidence.spectral_radius = spectral.as_ref().map(|s| s.rho);
    Ok(Analysis { certificate, spectral, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kfun::Aggregation::*;
    use crate::network::tests::example_net;

    fn lin(a: f64) -> ScalarFn {
        ScalarFn::linear(a).unwrap()
    }

    fn sum_only() -> GainNetwork {
        example_net().with_agg(vec![Sum; 3]).unwrap()
    }

    /// The worked example with the weak-triangle factor 1.1 folded into the max rows.
    fn folded() -> GainNetwork {
        let f = ScalarFn::compose(&ScalarFn::id_plus(&lin(0.1)), &lin(0.9));
        let z = ScalarFn::zero;
        GainNetwork::new(
            vec![Sum, Max, Max],
            vec![vec![z(), z(), lin(0.9)], vec![f.clone(), z(), f.clone()], vec![z(), f, z()]],
            vec![ScalarFn::identity(), z(), z()],
        )
        .unwrap()
    }

    #[test]
    fn folded_example_cycle_margins() {
        let c = verify_cycles(&folded(), &lin(0.1), &GridSpec::default(), 10_000).unwrap();
        assert_eq!(c.status, Status::Verified);
        assert_eq!(c.evidence.cycles.len(), 2);
        assert!((c.evidence.cycles[0].margin - 0.970299).abs() < 1e-12);
        assert!((c.evidence.cycles[1].margin - 0.9801).abs() < 1e-12);
    }

    #[test]
    fn identity_two_cycle_is_falsified() {
        let net = GainNetwork::linear(vec![Max, Max], &[vec![0.0, 1.0], vec![1.0, 0.0]], &[0.0, 0.0]).unwrap();
        let c = verify_cycles(&net, &lin(0.1), &GridSpec::default(), 100).unwrap();
        assert_eq!(c.status, Status::Falsified);
        assert!(c.recheck(&net, &lin(0.1)).unwrap());
    }

    #[test]
    fn cascade_is_vacuously_verified() {
        let net = GainNetwork::linear(vec![Sum, Max], &[vec![0.0, 5.0], vec![0.0, 0.0]], &[0.0, 0.0]).unwrap();
        let c = verify_cycles(&net, &lin(0.1), &GridSpec::default(), 100).unwrap();
        assert_eq!(c.status, Status::Verified);
        assert!(c.evidence.cycles.is_empty());
    }

    #[test]
    fn spectral_examples() {
        let s = verify_linear(&sum_only()).unwrap();
        assert!((s.rho - 1.1922).abs() < 1e-3 && s.rho > 1.19);
        assert!(!s.sum_condition);
        let z = GainNetwork::linear(vec![Sum; 2], &[vec![0.0; 2], vec![0.0; 2]], &[0.0; 2]).unwrap();
        let s = verify_linear(&z).unwrap();
        assert_eq!(s.rho, 0.0);
        assert!(s.sum_condition);
        let two = GainNetwork::linear(vec![Sum; 2], &[vec![0.0, 0.9], vec![0.9, 0.0]], &[0.0; 2]).unwrap();
        assert!((verify_linear(&two).unwrap().rho - 0.9).abs() < 1e-9);
        assert!(verify_linear(&folded().map_gains(|_, _, _| ScalarFn::power(1.0, 2.0).unwrap()).unwrap()).is_err());
    }

    #[test]
    fn falsify_examples() {
        let spec = SearchSpec::default();
        let w = falsify(&sum_only(), &lin(0.1), &spec).unwrap().expect("witness");
        assert!(is_witness(&sum_only(), &lin(0.1), &w).unwrap());
        assert_eq!(w.iter().cloned().fold(0.0, f64::max), 1.0);
        assert!(falsify(&example_net(), &lin(0.1), &spec).unwrap().is_none());
        let z = GainNetwork::linear(vec![Sum; 2], &[vec![0.0; 2], vec![0.0; 2]], &[0.0; 2]).unwrap();
        assert!(falsify(&z, &lin(0.1), &spec).unwrap().is_none());
    }

    #[test]
    fn phi_bound_examples() {
        // (1,1,1) -> (20.9,1,1) -> (239.8,18.81,1) -> (2647.7,215.82,16.929)
        let p = phi_bound(&example_net(), &lin(0.1), 1.0).unwrap();
        assert!((p.value - 2647.7).abs() < 1e-9);
        assert!((p.iterates[1][0] - 20.9).abs() < 1e-12);
        assert!((p.iterates[2][1] - 18.81).abs() < 1e-12);
        assert!((p.iterates[3][2] - 16.929).abs() < 1e-12);
        let z = GainNetwork::linear(vec![Max; 2], &[vec![0.0; 2], vec![0.0; 2]], &[0.0; 2]).unwrap();
        assert_eq!(phi_bound(&z, &lin(0.3), 2.5).unwrap().value, 2.5);
        let two = GainNetwork::linear(vec![Max; 2], &[vec![0.0, 0.9], vec![0.9, 0.0]], &[0.0; 2]).unwrap();
        assert_eq!(phi_bound(&two, &lin(0.1), 1.0).unwrap().value, 1.0);
    }

    #[test]
    fn analyze_sweeps_alpha() {
        let a = analyze(&folded(), &AnalysisConfig::default()).unwrap();
        assert_eq!(a.certificate.status, Status::Verified);
        assert_eq!(a.certificate.alpha.as_ref().unwrap().to_string(), "0.1*r");
        assert_eq!(a.trials.len(), 4);
        let a = analyze(&sum_only(), &AnalysisConfig::default()).unwrap();
        assert_eq!(a.certificate.status, Status::Falsified);
        assert!(a.certificate.recheck(&sum_only(), &lin(0.01)).unwrap());
    }

    #[test]
    fn nonlinear_net_is_grid_verified() {
        let sat = ScalarFn::piecewise(vec![(1.0, 0.9)], 0.5).unwrap();
        let net = example_net().map_gains(|_, _, _| sat.clone()).unwrap();
        let cfg = AnalysisConfig { alpha: Some(lin(0.1)), ..Default::default() };
        let a = analyze(&net, &cfg).unwrap();
        assert_eq!(a.certificate.status, Status::Verified);
        assert_eq!(a.certificate.evidence.exactness, Some(Exactness::GridVerified));
    }
}

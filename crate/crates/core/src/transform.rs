//! Rewriting sum rows as max rows with the weak triangle inequality
//! `a + b <= max((id + eta) o a, (id + eta^{-1}) o b)`, and recovering a robustness margin
//! `alpha` from the splitting functions.
//!
//! Slot layout of a sum row with gains `j_1..j_k`: slot 0 is the decay term, slots `1..=k`
//! the gains in index order, slot `k + 1` the external input. `pi` assigns each slot the
//! splitting factor `chi_{pi(slot)}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kfun::{lower_envelope, Aggregation, ScalarFn};
use crate::network::GainNetwork;
use crate::path::OmegaPath;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowPlan {
    /// Row index, 0-based.
    pub row: usize,
    /// Sources `j_1..j_k` of the nonzero gains, 0-based, ascending.
    pub gains: Vec<usize>,
    /// `eta_0..eta_k`; empty rows use the identity for every slot.
    pub eta: Vec<ScalarFn>,
    pub pi: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformPlan {
    pub rows: Vec<RowPlan>,
    /// Inflation factor `1 + delta` chosen per row by [`etas_from_path`].
    pub delta: Vec<f64>,
}

impl RowPlan {
    pub fn k(&self) -> usize {
        self.gains.len()
    }

    fn eta_at(&self, m: usize) -> ScalarFn {
        self.eta.get(m).cloned().unwrap_or_else(ScalarFn::identity)
    }

    pub fn check(&self) -> Result<()> {
        let k = self.k();
        if self.pi.len() != k + 2 {
            return Err(Error::Transform(format!(
                "row {}: pi needs {} slots, got {}",
                self.row + 1,
                k + 2,
                self.pi.len()
            )));
        }
        let mut seen = vec![false; k + 2];
        for &p in &self.pi {
            if p > k + 1 || seen[p] {
                return Err(Error::Transform(format!(
                    "row {}: pi is not a permutation of 0..={}",
                    self.row + 1,
                    k + 1
                )));
            }
            seen[p] = true;
        }
        if !self.eta.is_empty() && self.eta.len() != k + 1 {
            return Err(Error::Transform(format!(
                "row {}: expected {} eta functions, got {}",
                self.row + 1,
                k + 1,
                self.eta.len()
            )));
        }
        Ok(())
    }

    /// `chi_0..chi_{k+1}`.
    pub fn chis(&self) -> Result<Vec<ScalarFn>> {
        let k = self.k();
        let mut out = Vec::with_capacity(k + 2);
        let mut prefix = ScalarFn::identity();
        for m in 0..=k {
            let eta = self.eta_at(m);
            out.push(collapse(&ScalarFn::compose(&prefix, &ScalarFn::id_plus(&eta))));
            prefix = collapse(&ScalarFn::compose(&prefix, &ScalarFn::id_plus(&ScalarFn::inverse(&eta)?)));
        }
        out.push(prefix);
        Ok(out)
    }
}

/// Replace a function that is secretly linear by the plain line.
fn collapse(f: &ScalarFn) -> ScalarFn {
    match f.linear_slope() {
        Some(1.0) => ScalarFn::identity(),
        Some(c) if c > 0.0 && c.is_finite() => ScalarFn::linear(c).expect("positive slope"),
        _ => f.clone(),
    }
}

/// `((id + eta) o a, (id + eta^{-1}) o b)`.
pub fn weak_triangle(a: &ScalarFn, b: &ScalarFn, eta: &ScalarFn) -> Result<(ScalarFn, ScalarFn)> {
    let left = collapse(&ScalarFn::compose(&ScalarFn::id_plus(eta), a));
    let right = collapse(&ScalarFn::compose(&ScalarFn::id_plus(&ScalarFn::inverse(eta)?), b));
    Ok((left, right))
}

/// Gains first, decay term next to last, external input last.
pub fn canonical_pi(k: usize) -> Vec<usize> {
    let mut pi = Vec::with_capacity(k + 2);
    pi.push(k);
    pi.extend(0..k);
    pi.push(k + 1);
    pi
}

fn row_sources(net: &GainNetwork, i: usize) -> Vec<usize> {
    (0..net.n()).filter(|&j| !net.gain(i, j).is_zero()).collect()
}

/// Plan that uses the same `eta` on every slot of every sum row.
pub fn uniform_plan(net: &GainNetwork, eta: &ScalarFn) -> TransformPlan {
    let rows: Vec<RowPlan> = (0..net.n())
        .filter(|&i| net.agg()[i] == Aggregation::Sum)
        .map(|i| {
            let gains = row_sources(net, i);
            let k = gains.len();
            RowPlan { row: i, gains, eta: vec![eta.clone(); k + 1], pi: canonical_pi(k) }
        })
        .collect();
    let delta = vec![0.0; rows.len()];
    TransformPlan { rows, delta }
}

/// All-max network equivalent in the sense of the small-gain condition.
pub fn sum_to_max(net: &GainNetwork, plan: &TransformPlan) -> Result<GainNetwork> {
    let n = net.n();
    let mut gamma: Vec<Vec<ScalarFn>> = (0..n).map(|i| net.row(i).to_vec()).collect();
    let mut external: Vec<ScalarFn> = (0..n).map(|i| net.external(i).clone()).collect();
    for i in (0..n).filter(|&i| net.agg()[i] == Aggregation::Sum) {
        let rp = plan
            .rows
            .iter()
            .find(|r| r.row == i)
            .ok_or_else(|| Error::Transform(format!("plan does not cover sum row {}", i + 1)))?;
        rp.check()?;
        if rp.gains != row_sources(net, i) {
            return Err(Error::Transform(format!("plan gains for row {} do not match the network", i + 1)));
        }
        let chi = rp.chis()?;
        for (l, &j) in rp.gains.iter().enumerate() {
            gamma[i][j] = collapse(&ScalarFn::compose(&chi[rp.pi[l + 1]], net.gain(i, j)));
        }
        let k = rp.k();
        external[i] = collapse(&ScalarFn::compose(&chi[rp.pi[k + 1]], net.external(i)));
    }
    Ok(GainNetwork::new(vec![Aggregation::Max; n], gamma, external)?.with_role(net.role()))
}

pub const DELTAS: [f64; 5] = [0.2, 0.1, 0.05, 0.01, 0.001];

/// Splitting functions read off an Omega-path of `D o Gamma`.
pub fn etas_from_path(net: &GainNetwork, path: &OmegaPath, grid: &GridSpec) -> Result<TransformPlan> {
    etas_from_path_with(net, path, grid, &DELTAS)
}

/// As [`etas_from_path`], trying the inflation factors `deltas` in order.
///
/// With `g_l = gamma_{i j_l} o sigma_{j_l} o sigma_i^{-1}`, `g^_l = (1 + delta) g_l` and partial sums
/// `S_l`, the functions `eta_{l-1} = (id - S_l) o g^_l^{-1}` make `chi_{l-1} o g^_l = id`, hence
/// `chi_{l-1} o g_l < id`.
pub fn etas_from_path_with(
    net: &GainNetwork,
    path: &OmegaPath,
    grid: &GridSpec,
    deltas: &[f64],
) -> Result<TransformPlan> {
    grid.check()?;
    if path.n() != net.n() {
        return Err(Error::Dimension { expected: net.n(), found: path.n() });
    }
    let rs = grid.values();
    let mut rows = Vec::new();
    let mut chosen = Vec::new();
    for i in (0..net.n()).filter(|&i| net.agg()[i] == Aggregation::Sum) {
        let gains = row_sources(net, i);
        let k = gains.len();
        if k == 0 {
            rows.push(RowPlan { row: i, gains, eta: Vec::new(), pi: canonical_pi(0) });
            chosen.push(0.0);
            continue;
        }
        let sigma_i_inv = ScalarFn::inverse(&path.sigma[i])?;
        let g: Vec<ScalarFn> = gains
            .iter()
            .map(|&j| {
                collapse(&ScalarFn::compose_all(&[net.gain(i, j).clone(), path.sigma[j].clone(), sigma_i_inv.clone()]))
            })
            .collect();
        let (g, d) = match pick_delta(&g, &rs, deltas)? {
            Some(d) => (g, d),
            None => {
                let lin = linear_majorants(&g, &rs)?;
                let d = pick_delta(&lin, &rs, deltas)?
                    .ok_or_else(|| Error::Transform(format!("row {}: path margin too small", i + 1)))?;
                (lin, d)
            }
        };
        let inflate = ScalarFn::linear(1.0 + d)?;
        let ghat: Vec<ScalarFn> = g.iter().map(|f| collapse(&ScalarFn::compose(&inflate, f))).collect();
        let mut eta = Vec::with_capacity(k + 1);
        for l in 0..k {
            let rest = id_minus(&ghat[..=l], &rs)?;
            eta.push(collapse(&ScalarFn::compose(&rest, &ScalarFn::inverse(&ghat[l])?)));
        }
        eta.push(ScalarFn::identity());
        rows.push(RowPlan { row: i, gains, eta, pi: canonical_pi(k) });
        chosen.push(d);
    }
    Ok(TransformPlan { rows, delta: chosen })
}

/// Largest `delta` keeping `id - (1 + delta) sum(g)` increasing on the grid.
fn pick_delta(g: &[ScalarFn], rs: &[f64], deltas: &[f64]) -> Result<Option<f64>> {
    let total = ScalarFn::sum(g.to_vec())?;
    let vals = rs.iter().map(|&r| total.eval(r)).collect::<Result<Vec<_>>>()?;
    Ok(deltas.iter().copied().find(|&d| {
        let mut prev = 0.0;
        rs.iter().zip(&vals).all(|(&r, &v)| {
            let rest = r - (1.0 + d) * v;
            let ok = rest > prev;
            prev = rest;
            ok
        })
    }))
}

/// `c_l id` with `c_l = max g_l(r) / r` over the grid. Used when the path has segments steeper than
/// the identity so the sampled partial sums lose monotone gaps.
fn linear_majorants(g: &[ScalarFn], rs: &[f64]) -> Result<Vec<ScalarFn>> {
    g.iter()
        .map(|f| {
            let c = rs.iter().try_fold(0.0f64, |m, &r| Ok::<_, Error>(m.max(f.eval(r)? / r)))?;
            ScalarFn::linear(c)
        })
        .collect()
}

/// `id - sum(fs)`, exact when linear and sampled otherwise.
fn id_minus(fs: &[ScalarFn], rs: &[f64]) -> Result<ScalarFn> {
    let s = ScalarFn::sum(fs.to_vec())?;
    if let Some(c) = s.linear_slope() {
        return ScalarFn::linear(1.0 - c);
    }
    let knots = rs.iter().map(|&r| Ok((r, r - s.eval(r)?))).collect::<Result<Vec<_>>>()?;
    let m = knots.len();
    let slope = (knots[m - 1].1 - knots[m - 2].1) / (knots[m - 1].0 - knots[m - 2].0);
    ScalarFn::piecewise(knots, slope)
}

/// `alpha_i` for one sum row exactly as the two-case formula reads: with
/// `p = min(pi(0), pi(k+1))`, either `eta_p^{-1} o sum_{pi(l) > p} gamma_{j_l} o (sum gamma)^{-1}`
/// or, when every gain slot sits below `p`, `eta_{p-1} o gamma_{j_{pi^{-1}(p-1)}} o (sum gamma)^{-1}`.
/// The sums are taken along the diagonal `s_1 = ... = s_n`.
pub fn alpha_formula_row(net: &GainNetwork, rp: &RowPlan) -> Result<ScalarFn> {
    rp.check()?;
    let k = rp.k();
    if k == 0 {
        return Err(Error::Transform(format!("row {} has no gains", rp.row + 1)));
    }
    let i = rp.row;
    let p = rp.pi[0].min(rp.pi[k + 1]);
    let total_inv = ScalarFn::inverse(&ScalarFn::sum(rp.gains.iter().map(|&j| net.gain(i, j).clone()).collect())?)?;
    let above: Vec<ScalarFn> =
        (1..=k).filter(|&l| rp.pi[l] > p).map(|l| net.gain(i, rp.gains[l - 1]).clone()).collect();
    let f = if !above.is_empty() {
        ScalarFn::compose_all(&[ScalarFn::inverse(&rp.eta_at(p))?, ScalarFn::sum(above)?, total_inv])
    } else {
        let l = (1..=k).find(|&l| rp.pi[l] == p - 1).expect("slot p-1 holds a gain");
        ScalarFn::compose_all(&[rp.eta_at(p - 1), net.gain(i, rp.gains[l - 1]).clone(), total_inv])
    };
    Ok(collapse(&f))
}

/// Largest `alpha` with `max_l chi_{pi(l)}(a_l) >= (id + alpha)(sum_l a_l)` for every `a`:
/// `(sum_l chi_{pi(l)}^{-1})^{-1} - id`, sampled at `r`.
fn alpha_cap_at(chis: &[ScalarFn], rp: &RowPlan, r: f64) -> Result<f64> {
    let k = rp.k();
    let h = ScalarFn::sum((1..=k).map(|l| ScalarFn::inverse(&chis[rp.pi[l]])).collect::<Result<Vec<_>>>()?)?;
    Ok(h.eval_inverse(r)? - r)
}

/// Common margin `alpha` for `D_alpha`, the pointwise minimum over sum rows of the row formula
/// and the exact domination bound, refit as a piecewise-linear envelope on `grid`.
pub fn alpha_from_etas(net: &GainNetwork, plan: &TransformPlan, grid: &GridSpec) -> Result<ScalarFn> {
    grid.check()?;
    let rows: Vec<&RowPlan> = plan.rows.iter().filter(|r| r.k() > 0).collect();
    if rows.is_empty() {
        return ScalarFn::linear(0.1);
    }
    let rs = grid.values();
    let mut vals = vec![f64::INFINITY; rs.len()];
    for rp in rows {
        let formula = alpha_formula_row(net, rp)?;
        let chis = rp.chis()?;
        for (v, &r) in vals.iter_mut().zip(&rs) {
            *v = v.min(formula.eval(r)?).min(alpha_cap_at(&chis, rp, r)?);
        }
    }
    if vals.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Transform("recovered alpha is not positive on the grid".into()));
    }
    let env = lower_envelope(&rs, &vals)?;
    Ok(collapse(&env))
}

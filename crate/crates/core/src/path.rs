//! Omega-paths: vectors of K-infinity functions `sigma` with `D_alpha o Gamma (sigma(r)) < sigma(r)`.
//!
//! Homogeneous networks get a straight ray through a strictly dominated vector. Other networks
//! get piecewise-linear paths through per-radius anchors. Reducible networks are assembled
//! block by block along the condensation. Every constructed path is checked by [`validate_path`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::condensation;
use crate::grid::{geometric, GridSpec};
use crate::kfun::{lower_envelope, Aggregation, FnClass, ScalarFn, OVERFLOW_GUARD};
use crate::network::GainNetwork;
use crate::verify::{block_radius, is_homogeneous};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowBound {
    pub r_lo: f64,
    pub r_hi: f64,
    pub c: f64,
    #[serde(rename = "C")]
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathValidation {
    pub grid: GridSpec,
    /// Smallest `(sigma_i(r) - (D o Gamma)_i(sigma(r))) / sigma_i(r)` over the grid.
    pub min_margin: f64,
    pub argmin_r: f64,
    /// First grid radius where domination fails.
    pub failure_r: Option<f64>,
    /// Difference-quotient bounds of each `sigma_i^{-1}` per decade window.
    pub lipschitz: Vec<Vec<WindowBound>>,
    pub class_ok: bool,
    pub ok: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaPath {
    pub sigma: Vec<ScalarFn>,
    pub validation: Option<PathValidation>,
}

impl OmegaPath {
    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn eval(&self, r: f64) -> Result<Vec<f64>> {
        self.sigma.iter().map(|s| s.eval(r)).collect()
    }

    pub fn identity(n: usize) -> Self {
        OmegaPath { sigma: vec![ScalarFn::identity(); n], validation: None }
    }
}

fn margin_at(net: &GainNetwork, alpha: &ScalarFn, s: &[f64]) -> Result<f64> {
    let t = net.apply_d_gamma(alpha, s)?;
    Ok(s.iter().zip(&t).map(|(a, b)| (a - b) / a).fold(f64::INFINITY, f64::min))
}

pub fn validate_path(net: &GainNetwork, alpha: &ScalarFn, path: &OmegaPath, grid: &GridSpec) -> Result<PathValidation> {
    grid.check()?;
    if path.n() != net.n() {
        return Err(Error::Dimension { expected: net.n(), found: path.n() });
    }
    let rs = grid.values();
    let mut notes = Vec::new();
    let (mut min_margin, mut argmin_r, mut failure_r) = (f64::INFINITY, rs[0], None);
    let mut samples = Vec::with_capacity(rs.len());
    for &r in &rs {
        let s = path.eval(r)?;
        let m = if s.iter().all(|&x| x > 0.0) { margin_at(net, alpha, &s)? } else { f64::NEG_INFINITY };
        if m < min_margin {
            min_margin = m;
            argmin_r = r;
        }
        if !(m > 0.0) && failure_r.is_none() {
            failure_r = Some(r);
        }
        samples.push(s);
    }
    let mut class_ok = true;
    for (i, s) in path.sigma.iter().enumerate() {
        if s.class() != FnClass::KInf {
            class_ok = false;
            notes.push(format!("sigma_{} is not tagged K-infinity", i + 1));
        } else if let Err(e) = s.validate(grid) {
            class_ok = false;
            notes.push(format!("sigma_{}: {e}", i + 1));
        }
    }
    // sigma_i^{-1} maps sigma_i(r_k) back to r_k, so its difference quotients are r-steps over value-steps
    let per_decade = ((rs.len() - 1) as f64 / (grid.r_max / grid.r_min).log10()).ceil().max(1.0) as usize;
    let mut lipschitz = Vec::with_capacity(path.n());
    let mut lip_ok = true;
    for i in 0..path.n() {
        let mut windows = Vec::new();
        let mut start = 0;
        while start + 1 < rs.len() {
            let end = (start + per_decade).min(rs.len() - 1);
            let (mut c, mut cap) = (f64::INFINITY, 0.0f64);
            for k in start..end {
                let q = (rs[k + 1] - rs[k]) / (samples[k + 1][i] - samples[k][i]);
                c = c.min(q);
                cap = cap.max(q);
            }
            if !(c > 0.0 && cap.is_finite() && c <= cap) {
                lip_ok = false;
            }
            windows.push(WindowBound { r_lo: rs[start], r_hi: rs[end], c, cap });
            start = end;
        }
        lipschitz.push(windows);
    }
    if !lip_ok {
        notes.push("some inverse difference quotient left (0, inf)".into());
    }
    Ok(PathValidation {
        grid: *grid,
        min_margin,
        argmin_r,
        failure_r,
        lipschitz,
        class_ok,
        ok: failure_r.is_none() && class_ok && lip_ok,
        notes,
    })
}

/// Shifted fixed-point iteration `v <- scale * normalize(T(v) + v)` keeping the iterate with the
/// best domination margin.
fn dominated_direction<F>(t: F, start: Vec<f64>, scale: f64, iterations: usize) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let norm = |v: &mut Vec<f64>| {
        let m = v.iter().cloned().fold(0.0, f64::max);
        for x in v.iter_mut() {
            *x *= scale / m;
        }
    };
    let mut v = start;
    norm(&mut v);
    let mut best = (v.clone(), f64::NEG_INFINITY);
    for _ in 0..iterations {
        let tv = t(&v)?;
        let m = v.iter().zip(&tv).map(|(a, b)| (a - b) / a).fold(f64::INFINITY, f64::min);
        if m > best.1 {
            best = (v.clone(), m);
        }
        let mut next: Vec<f64> = tv.iter().zip(&v).map(|(a, b)| a + b).collect();
        norm(&mut next);
        if next == v {
            break;
        }
        v = next;
    }
    Ok(best)
}

const LINEAR_ITERATIONS: usize = 20_000;

/// Straight-ray path `sigma(r) = v r` for homogeneous networks.
pub fn path_linear(net: &GainNetwork, alpha: &ScalarFn) -> Result<OmegaPath> {
    if !is_homogeneous(net, alpha) {
        return Err(Error::Path("straight-ray paths need linear gains and a linear alpha".into()));
    }
    let n = net.n();
    let t = |v: &[f64]| net.apply_d_gamma(alpha, v);
    let (mut v, margin) = dominated_direction(t, vec![1.0; n], 1.0, LINEAR_ITERATIONS)?;
    if !(margin > 0.0) {
        v = neumann_direction(net, alpha)?;
    }
    let m = v.iter().cloned().fold(0.0, f64::max);
    let sigma = v
        .iter()
        .map(|&x| if x == m { Ok(ScalarFn::identity()) } else { ScalarFn::linear(x / m) })
        .collect::<Result<Vec<_>>>()?;
    Ok(OmegaPath { sigma, validation: None })
}

/// `v = sum_k T^k(e) / theta^k` for a radius below `theta < 1`; subadditivity and homogeneity
/// of `T` give `T(v) < v` once the tail is small. Works for reducible networks too.
fn neumann_direction(net: &GainNetwork, alpha: &ScalarFn) -> Result<Vec<f64>> {
    let graph = condensation(net);
    let b = block_radius(&graph, |block, v| net.restrict(block)?.apply_d_gamma(alpha, v))?;
    if !(b.upper < 1.0) {
        return Err(Error::Path(format!(
            "no strictly dominated vector: operator radius is at least {:.6}",
            b.lower.max(b.upper.min(1.0))
        )));
    }
    let theta = 0.5 * (1.0 + b.upper);
    let n = net.n();
    let mut term = vec![1.0; n];
    let mut v = term.clone();
    for _ in 0..LINEAR_ITERATIONS {
        term = net.apply_d_gamma(alpha, &term)?.iter().map(|x| x / theta).collect();
        for (a, b) in v.iter_mut().zip(&term) {
            *a += b;
        }
        if margin_at(net, alpha, &v)? > 0.0 {
            return Ok(v);
        }
        if term.iter().all(|&x| x == 0.0) {
            break;
        }
    }
    Err(Error::Path("series construction did not produce a dominated vector".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    /// Anchor radii.
    pub grid: GridSpec,
    pub iterations: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { grid: GridSpec::default(), iterations: 2_000 }
    }
}

const SEPARATION: f64 = 1.01;

/// Piecewise-linear path through dominated anchors, one per radius of `cfg.grid`.
pub fn path_numeric(net: &GainNetwork, alpha: &ScalarFn, cfg: &PathConfig) -> Result<OmegaPath> {
    cfg.grid.check()?;
    let n = net.n();
    let radii = cfg.grid.values();
    let t = |v: &[f64]| net.apply_d_gamma(alpha, v);
    let mut anchors: Vec<Vec<f64>> = Vec::with_capacity(radii.len());
    for (k, &rho) in radii.iter().enumerate() {
        let anchor = match anchors.last() {
            Some(prev) => {
                let scaled: Vec<f64> = prev.iter().map(|x| x * rho / radii[k - 1]).collect();
                if margin_at(net, alpha, &scaled)? > 0.0 {
                    scaled
                } else {
                    let (v, m) = dominated_direction(t, scaled, rho, cfg.iterations)?;
                    if !(m > 0.0) {
                        return Err(Error::Path(format!("no dominated anchor at radius {rho:e}")));
                    }
                    v
                }
            }
            None => {
                let (v, m) = dominated_direction(t, vec![1.0; n], rho, cfg.iterations)?;
                if !(m > 0.0) {
                    return Err(Error::Path(format!("no dominated anchor at radius {rho:e}")));
                }
                v
            }
        };
        anchors.push(anchor);
    }
    for k in 1..anchors.len() {
        let needs_repair = (0..n).any(|i| anchors[k][i] <= anchors[k - 1][i]);
        if needs_repair {
            let repaired: Vec<f64> = (0..n).map(|i| anchors[k][i].max(SEPARATION * anchors[k - 1][i])).collect();
            if !(margin_at(net, alpha, &repaired)? > 0.0) {
                return Err(Error::Path(format!("monotonicity repair breaks domination at radius {:e}", radii[k])));
            }
            anchors[k] = repaired;
        }
    }
    let sigma = (0..n)
        .map(|i| {
            let knots: Vec<(f64, f64)> = radii.iter().zip(&anchors).map(|(&r, a)| (r, a[i])).collect();
            let m = knots.len();
            let slope = if m > 1 {
                (knots[m - 1].1 - knots[m - 2].1) / (knots[m - 1].0 - knots[m - 2].0)
            } else {
                knots[0].1 / knots[0].0
            };
            ScalarFn::piecewise(knots, slope)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut path = OmegaPath { sigma, validation: None };
    let check = GridSpec::new(cfg.grid.r_min, cfg.grid.r_max, 2 * cfg.grid.points - 1)?;
    let v = validate_path(net, alpha, &path, &check)?;
    if !v.ok {
        return Err(Error::Path(format!(
            "interpolated path fails validation (margin {:.3e} at r = {:e})",
            v.min_margin, v.argmin_r
        )));
    }
    path.validation = Some(v);
    Ok(path)
}

/// Linear construction for homogeneous networks, anchors otherwise.
pub fn build_path(net: &GainNetwork, alpha: &ScalarFn, cfg: &PathConfig) -> Result<OmegaPath> {
    if is_homogeneous(net, alpha) {
        path_linear(net, alpha)
    } else if !condensation(net).is_irreducible() {
        assemble_reducible(net, alpha, cfg).map(|a| a.path)
    } else {
        path_numeric(net, alpha, cfg)
    }
}

/// `phi` with `Gamma_bar(sigma(r), phi(r)) < sigma(r)` on the grid: half of the smallest
/// room any row leaves for its external input.
pub fn external_margin(net: &GainNetwork, alpha: &ScalarFn, path: &OmegaPath, grid: &GridSpec) -> Result<ScalarFn> {
    grid.check()?;
    if path.n() != net.n() {
        return Err(Error::Dimension { expected: net.n(), found: path.n() });
    }
    let rows: Vec<usize> = (0..net.n()).filter(|&i| !net.external(i).is_zero()).collect();
    if rows.is_empty() {
        return Ok(ScalarFn::identity());
    }
    let mut majorants = Vec::with_capacity(net.n());
    for i in 0..net.n() {
        let g = net.external(i);
        majorants.push(match g.class() {
            FnClass::K => ScalarFn::sum(vec![g.clone(), ScalarFn::linear(1e-6)?])?,
            _ => g.clone(),
        });
        if !g.is_zero() && net.row(i).iter().all(|x| x.is_zero()) {
            return Err(Error::Path(format!(
                "row {} has an external gain but no internal gains, so its margin is undefined",
                i + 1
            )));
        }
    }
    let rs = grid.values();
    let mut vals = Vec::with_capacity(rs.len());
    for &r in &rs {
        let s = path.eval(r)?;
        let mut m = f64::INFINITY;
        for &i in &rows {
            let gi = net.apply_row(i, &s)?;
            let room = match net.agg()[i] {
                Aggregation::Sum => alpha.eval(gi)?,
                Aggregation::Max => gi,
            };
            m = m.min(majorants[i].eval_inverse(room)?);
        }
        vals.push(0.5 * m);
    }
    lower_envelope(&rs, &vals)
}

/// Smallest relative room `(sigma_i - Gamma_bar_i(sigma, phi)) / sigma_i` over the grid.
pub fn external_condition_margin(net: &GainNetwork, path: &OmegaPath, phi: &ScalarFn, grid: &GridSpec) -> Result<f64> {
    let mut m = f64::INFINITY;
    for r in grid.values() {
        let s = path.eval(r)?;
        let t = net.apply_gamma(&s, Some(phi.eval(r)?))?;
        for (a, b) in s.iter().zip(&t) {
            m = m.min((a - b) / a);
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeStep {
    /// Members of the block, 1-based.
    pub block: Vec<usize>,
    /// Path of the block on its own.
    pub block_path: Vec<ScalarFn>,
    /// Scaling of the blocks assembled so far.
    pub join_outer: ScalarFn,
    /// Scaling of this block's path.
    pub join_inner: ScalarFn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assembly {
    pub path: OmegaPath,
    pub recipe: Vec<RecipeStep>,
}

/// Path for a reducible network. Blocks are added downstream first; each new block `k` is
/// joined to the assembled ones through `(id, g^{-1}(r/2))`, where `g(q)` is the smallest radius
/// at which the assembled rows have room for the cross gains from block `k` at `q`. The final
/// `sigma` on block `b` is its own path composed with the joining scalings of every step.
pub fn assemble_reducible(net: &GainNetwork, alpha: &ScalarFn, cfg: &PathConfig) -> Result<Assembly> {
    let graph = condensation(net);
    let grid = cfg.grid;
    let rs = grid.values();
    let n = net.n();
    let mut sigma: Vec<Option<ScalarFn>> = vec![None; n];
    let mut done: Vec<usize> = Vec::new();
    let mut recipe = Vec::new();
    for (b, block) in graph.scc.iter().enumerate() {
        let sub = net.restrict(block)?;
        let block_path = if sub.edges().is_empty() {
            OmegaPath::identity(block.len())
        } else {
            build_path(&sub, alpha, cfg).map_err(|e| Error::Path(format!("block {}: {e}", b + 1)))?
        };
        let cross: Vec<(usize, Vec<usize>)> = done
            .iter()
            .map(|&i| (i, block.iter().copied().filter(|&j| !net.gain(i, j).is_zero()).collect::<Vec<_>>()))
            .filter(|(_, js)| !js.is_empty())
            .collect();
        let join_inner = if cross.is_empty() {
            ScalarFn::identity()
        } else {
            joining_scaling(net, alpha, &sigma, &done, block, &block_path, &cross, &rs)
                .map_err(|e| Error::Path(format!("joining block {}: {e}", b + 1)))?
        };
        for (k, &i) in block.iter().enumerate() {
            sigma[i] = Some(ScalarFn::compose(&block_path.sigma[k], &join_inner));
        }
        done.extend(block.iter().copied());
        recipe.push(RecipeStep {
            block: block.iter().map(|i| i + 1).collect(),
            block_path: block_path.sigma.clone(),
            join_outer: ScalarFn::identity(),
            join_inner,
        });
    }
    let mut path =
        OmegaPath { sigma: sigma.into_iter().map(|s| s.expect("every block assembled")).collect(), validation: None };
    path.validation = Some(validate_path(net, alpha, &path, &grid)?);
    Ok(Assembly { path, recipe })
}

#[allow(clippy::too_many_arguments)]
fn joining_scaling(
    net: &GainNetwork,
    alpha: &ScalarFn,
    sigma: &[Option<ScalarFn>],
    done: &[usize],
    block: &[usize],
    block_path: &OmegaPath,
    cross: &[(usize, Vec<usize>)],
    rs: &[f64],
) -> Result<ScalarFn> {
    let d_inv = ScalarFn::inverse(&ScalarFn::id_plus(alpha))?;
    let full_at = |r: f64| -> Result<Vec<f64>> {
        let mut s = vec![0.0; net.n()];
        for &i in done {
            s[i] = sigma[i].as_ref().expect("assembled").eval(r)?;
        }
        Ok(s)
    };
    // room_i(r): how much cross input row i absorbs at radius r, as a strictly increasing envelope
    let mut rooms = Vec::with_capacity(cross.len());
    for (i, _) in cross {
        let mut vals = Vec::with_capacity(rs.len());
        for &r in rs {
            let s = full_at(r)?;
            let internal = net.apply_row(*i, &s)?;
            let room = match net.agg()[*i] {
                Aggregation::Sum => d_inv.eval(s[*i])? - internal,
                Aggregation::Max => s[*i],
            };
            if !(room > 0.0) {
                return Err(Error::Path(format!("row {} has no room at r = {r:e}", i + 1)));
            }
            vals.push(room);
        }
        rooms.push(lower_envelope(rs, &vals)?);
    }
    let g = |q: f64| -> Result<f64> {
        let tau = block_path.eval(q)?;
        let mut worst = 0.0f64;
        for ((i, js), room) in cross.iter().zip(&rooms) {
            let mut c = 0.0f64;
            for &j in js {
                let k = block.iter().position(|&x| x == j).expect("member");
                let term = net.gain(*i, j).eval(tau[k])?;
                c = match net.agg()[*i] {
                    Aggregation::Sum => c + term,
                    Aggregation::Max => c.max(term),
                };
            }
            worst = worst.max(room.eval_inverse(c)?);
        }
        Ok(worst)
    };
    let mut qs = Vec::with_capacity(rs.len());
    for &r in rs {
        qs.push(solve_increasing(&g, 0.5 * r)?);
    }
    lower_envelope(rs, &qs)
}

/// `q` with `g(q) = target` for increasing `g` with `g(0) = 0`, biased low.
fn solve_increasing(g: &impl Fn(f64) -> Result<f64>, target: f64) -> Result<f64> {
    let mut hi = target.max(f64::MIN_POSITIVE);
    while g(hi)? < target {
        hi *= 2.0;
        if hi > OVERFLOW_GUARD {
            return Err(Error::Convergence(format!("no bracket for {target:e}")));
        }
    }
    let mut lo = 0.0;
    while lo == 0.0 {
        let h = 0.5 * hi;
        if g(h)? <= target {
            lo = h;
        } else {
            hi = h;
        }
        if hi < 1e-300 {
            return Ok(hi);
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid)? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Geometric sample of the path, for serialization and plotting.
pub fn sample_path(path: &OmegaPath, lo: f64, hi: f64, points: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    geometric(lo, hi, points).into_iter().map(|r| Ok((r, path.eval(r)?))).collect()
}

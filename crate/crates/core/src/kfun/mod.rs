//! Nonnegative monotone scalar functions: the zero function, class K and class K-infinity.
//!
//! Functions are immutable expression trees. Linear, power and piecewise-linear nodes invert
//! in closed form; sums and maxima invert by bisection.

mod expr;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{geometric, GridSpec};

pub use expr::{parse, ExprError};

pub const OVERFLOW_GUARD: f64 = 1e150;
const BISECT_REL_TOL: f64 = 1e-10;
const BISECT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FnClass {
    Zero,
    K,
    KInf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Sum,
    Max,
}

/// Piecewise-linear function through the origin and the given knots, continued by a
/// terminal slope past the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise {
    knots: Vec<(f64, f64)>,
    slope: f64,
}

impl Piecewise {
    pub fn new(knots: Vec<(f64, f64)>, slope: f64) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Validation("piecewise-linear function needs at least one knot".into()));
        }
        let mut prev = (0.0, 0.0);
        for &(r, v) in &knots {
            if !(r.is_finite() && v.is_finite() && r > prev.0 && v > prev.1) {
                return Err(Error::Validation(format!(
                    "piecewise-linear knots must increase strictly in both coordinates, got ({r}, {v}) after ({}, {})",
                    prev.0, prev.1
                )));
            }
            prev = (r, v);
        }
        if !(slope.is_finite() && slope >= 0.0) {
            return Err(Error::Validation(format!("terminal slope must be nonnegative, got {slope}")));
        }
        Ok(Piecewise { knots, slope })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    fn eval(&self, r: f64) -> f64 {
        interpolate(&self.knots, self.slope, r, |p| p.0, |p| p.1)
    }

    fn eval_inverse(&self, y: f64) -> Result<f64> {
        let last = self.knots[self.knots.len() - 1];
        if y > last.1 && self.slope == 0.0 {
            return Err(Error::Convergence(format!("{y} lies above the range of a saturating piecewise function")));
        }
        let inv_slope = if self.slope > 0.0 { 1.0 / self.slope } else { 0.0 };
        Ok(interpolate(&self.knots, inv_slope, y, |p| p.1, |p| p.0))
    }
}

fn interpolate(
    knots: &[(f64, f64)],
    slope: f64,
    x: f64,
    key: impl Fn(&(f64, f64)) -> f64,
    val: impl Fn(&(f64, f64)) -> f64,
) -> f64 {
    let i = knots.partition_point(|p| key(p) < x);
    if i < knots.len() && key(&knots[i]) == x {
        return val(&knots[i]);
    }
    if i == knots.len() {
        let last = &knots[i - 1];
        return val(last) + slope * (x - key(last));
    }
    let (x0, y0) = if i == 0 { (0.0, 0.0) } else { (key(&knots[i - 1]), val(&knots[i - 1])) };
    let (x1, y1) = (key(&knots[i]), val(&knots[i]));
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Zero,
    Identity,
    Linear(f64),
    Power { coeff: f64, exponent: f64 },
    Piecewise(Piecewise),
    Add(Vec<ScalarFn>),
    Max(Vec<ScalarFn>),
    Compose(ScalarFn, ScalarFn),
    Inverse(ScalarFn),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFn {
    node: Arc<Node>,
    class: FnClass,
}

impl ScalarFn {
    fn from_node(node: Node, class: FnClass) -> Self {
        ScalarFn { node: Arc::new(node), class }
    }

    pub fn zero() -> Self {
        Self::from_node(Node::Zero, FnClass::Zero)
    }

    pub fn identity() -> Self {
        Self::from_node(Node::Identity, FnClass::KInf)
    }

    pub fn linear(slope: f64) -> Result<Self> {
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(Error::Validation(format!("linear slope must be positive, got {slope}")));
        }
        Ok(Self::from_node(Node::Linear(slope), FnClass::KInf))
    }

    pub fn power(coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff > 0.0 && coeff.is_finite() && exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::Validation(format!(
                "power needs positive coefficient and exponent, got {coeff}*r^{exponent}"
            )));
        }
        Ok(Self::from_node(Node::Power { coeff, exponent }, FnClass::KInf))
    }

    pub fn piecewise(knots: Vec<(f64, f64)>, slope: f64) -> Result<Self> {
        let p = Piecewise::new(knots, slope)?;
        let class = if p.slope > 0.0 { FnClass::KInf } else { FnClass::K };
        Ok(Self::from_node(Node::Piecewise(p), class))
    }

    /// Row aggregation of functions. Zero children are dropped and a single survivor is
    /// returned as is.
    pub fn combine(mode: Aggregation, fs: Vec<ScalarFn>) -> Result<Self> {
        if fs.is_empty() {
            return Err(Error::Validation("combine needs at least one function".into()));
        }
        let mut kept: Vec<ScalarFn> = fs.into_iter().filter(|f| !f.is_zero()).collect();
        match kept.len() {
            0 => Ok(Self::zero()),
            1 => Ok(kept.pop().unwrap()),
            _ => {
                let class = if kept.iter().any(|f| f.class == FnClass::KInf) { FnClass::KInf } else { FnClass::K };
                let node = match mode {
                    Aggregation::Sum => Node::Add(kept),
                    Aggregation::Max => Node::Max(kept),
                };
                Ok(Self::from_node(node, class))
            }
        }
    }

    pub fn sum(fs: Vec<ScalarFn>) -> Result<Self> {
        Self::combine(Aggregation::Sum, fs)
    }

    pub fn max(fs: Vec<ScalarFn>) -> Result<Self> {
        Self::combine(Aggregation::Max, fs)
    }

    /// `outer o inner`, simplified by the identity and zero laws.
    pub fn compose(outer: &ScalarFn, inner: &ScalarFn) -> Self {
        if outer.is_zero() || inner.is_zero() {
            return Self::zero();
        }
        if outer.is_identity() {
            return inner.clone();
        }
        if inner.is_identity() {
            return outer.clone();
        }
        let class =
            if outer.class == FnClass::KInf && inner.class == FnClass::KInf { FnClass::KInf } else { FnClass::K };
        Self::from_node(Node::Compose(outer.clone(), inner.clone()), class)
    }

    /// Compose a chain, outermost first.
    pub fn compose_all(fs: &[ScalarFn]) -> Self {
        fs.iter().rev().fold(Self::identity(), |acc, f| Self::compose(f, &acc))
    }

    pub fn inverse(f: &ScalarFn) -> Result<Self> {
        if f.class != FnClass::KInf {
            return Err(Error::Validation(format!("inverse needs a K-infinity function, got {:?} for {f}", f.class)));
        }
        if f.is_identity() {
            return Ok(f.clone());
        }
        Ok(Self::from_node(Node::Inverse(f.clone()), FnClass::KInf))
    }

    /// `id + f`.
    pub fn id_plus(f: &ScalarFn) -> Self {
        Self::sum(vec![Self::identity(), f.clone()]).expect("nonempty")
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn class(&self) -> FnClass {
        self.class
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self.node, Node::Zero)
    }

    pub fn is_identity(&self) -> bool {
        matches!(*self.node, Node::Identity)
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(r));
        }
        Ok(match &*self.node {
            Node::Zero => 0.0,
            Node::Identity => r,
            Node::Linear(a) => a * r,
            Node::Power { coeff, exponent } => coeff * r.powf(*exponent),
            Node::Piecewise(p) => p.eval(r),
            Node::Add(cs) => {
                let mut s = 0.0;
                for c in cs {
                    s += c.eval(r)?;
                }
                s
            }
            Node::Max(cs) => {
                let mut m = 0.0f64;
                for c in cs {
                    m = m.max(c.eval(r)?);
                }
                m
            }
            Node::Compose(o, i) => o.eval(i.eval(r)?)?,
            Node::Inverse(c) => c.eval_inverse(r)?,
        })
    }

    /// `f^{-1}(y)` for a K-infinity function.
    pub fn eval_inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::Domain(y));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        match &*self.node {
            Node::Zero => Err(Error::Convergence("the zero function has no inverse".into())),
            Node::Identity => Ok(y),
            Node::Linear(a) => Ok(y / a),
            Node::Power { coeff, exponent } => Ok((y / coeff).powf(1.0 / exponent)),
            Node::Piecewise(p) => p.eval_inverse(y),
            Node::Inverse(c) => c.eval(y),
            Node::Compose(o, i) => i.eval_inverse(o.eval_inverse(y)?),
            Node::Add(_) | Node::Max(_) => match self.linear_slope() {
                Some(c) if c > 0.0 => Ok(y / c),
                _ => self.bisect_inverse(y),
            },
        }
    }

    fn bisect_inverse(&self, y: f64) -> Result<f64> {
        let mut lo = 0.0;
        let mut hi = y;
        while self.eval(hi)? < y {
            lo = hi;
            hi *= 2.0;
            if hi > OVERFLOW_GUARD {
                return Err(Error::Convergence(format!("no bracket for {y} below {OVERFLOW_GUARD:e}")));
            }
        }
        while lo == 0.0 {
            let h = 0.5 * hi;
            if h < f64::MIN_POSITIVE {
                return Ok(hi);
            }
            if self.eval(h)? >= y {
                hi = h;
            } else {
                lo = h;
            }
        }
        for _ in 0..BISECT_MAX_ITER {
            if hi - lo <= BISECT_REL_TOL * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.eval(mid)? < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Slope when the function is `c * r` in disguise.
    pub fn linear_slope(&self) -> Option<f64> {
        match &*self.node {
            Node::Zero => Some(0.0),
            Node::Identity => Some(1.0),
            Node::Linear(a) => Some(*a),
            Node::Power { coeff, exponent } => (*exponent == 1.0).then_some(*coeff),
            Node::Piecewise(p) => {
                let c = p.knots[0].1 / p.knots[0].0;
                let close = |a: f64| (a - c).abs() <= 1e-12 * c;
                (p.knots.iter().all(|&(r, v)| close(v / r)) && close(p.slope)).then_some(c)
            }
            Node::Add(cs) => cs.iter().map(|c| c.linear_slope()).sum(),
            Node::Max(cs) => cs.iter().map(|c| c.linear_slope()).try_fold(0.0f64, |m, s| s.map(|s| m.max(s))),
            Node::Compose(o, i) => Some(o.linear_slope()? * i.linear_slope()?),
            Node::Inverse(c) => c.linear_slope().filter(|s| *s > 0.0).map(|s| 1.0 / s),
        }
    }

    /// Check the declared class on `grid`, plus unboundedness up to the overflow guard for K-infinity.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        grid.check()?;
        let f0 = self.eval(0.0)?;
        if f0 != 0.0 {
            return Err(Error::Validation(format!("{self} is {f0} at 0")));
        }
        let rs = grid.values();
        let vals = rs.iter().map(|&r| self.eval(r)).collect::<Result<Vec<_>>>()?;
        if self.class == FnClass::Zero {
            if let Some((r, v)) = rs.iter().zip(&vals).find(|(_, v)| **v != 0.0) {
                return Err(Error::Validation(format!("zero-tagged function is {v} at {r}")));
            }
            return Ok(());
        }
        if !(vals[0] > 0.0) {
            return Err(Error::Validation(format!("{self} is not positive at {}", rs[0])));
        }
        for k in 1..rs.len() {
            if !(vals[k] > vals[k - 1]) {
                return Err(Error::Validation(format!(
                    "{self} is not strictly increasing between {} and {}",
                    rs[k - 1],
                    rs[k]
                )));
            }
        }
        if self.class == FnClass::KInf {
            let decades = (OVERFLOW_GUARD / grid.r_max).log10().floor().max(1.0) as usize;
            let far = geometric(grid.r_max, OVERFLOW_GUARD, decades + 1);
            let mut prev = vals[vals.len() - 1];
            for &r in &far[1..] {
                let v = self.eval(r)?;
                if v == f64::INFINITY {
                    break;
                }
                if !(v > prev) {
                    return Err(Error::Validation(format!("{self} stops growing near {r:e}")));
                }
                prev = v;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LessThanId {
    pub holds: bool,
    pub witness: Option<f64>,
    pub max_ratio: f64,
}

/// Grid test of `f(r) < r`. A pass is evidence on the sampled points only.
pub fn less_than_id(f: &ScalarFn, grid: &GridSpec) -> Result<LessThanId> {
    grid.check()?;
    let mut witness = None;
    let mut max_ratio = 0.0f64;
    for r in grid.values() {
        let v = f.eval(r)?;
        max_ratio = max_ratio.max(v / r);
        if witness.is_none() && !(v < r) {
            witness = Some(r);
        }
    }
    Ok(LessThanId { holds: witness.is_none(), witness, max_ratio })
}

impl fmt::Display for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_fn(self, Prec::Sum, f)
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Prec {
    Sum,
    Compose,
    Atom,
}

fn write_fn(g: &ScalarFn, ctx: Prec, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match &*g.node {
        Node::Zero => f.write_str("0"),
        Node::Identity => f.write_str("r"),
        Node::Linear(a) => write!(f, "{}*r", fmt_num(*a)),
        Node::Power { coeff, exponent } => write!(f, "{}*r^{}", fmt_num(*coeff), fmt_num(*exponent)),
        Node::Piecewise(p) => {
            f.write_str("pl[")?;
            for (k, (r, v)) in p.knots.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}:{}", fmt_num(*r), fmt_num(*v))?;
            }
            write!(f, "; {}]", fmt_num(p.slope))
        }
        Node::Add(cs) => {
            let paren = ctx > Prec::Sum;
            if paren {
                f.write_str("(")?;
            }
            for (k, c) in cs.iter().enumerate() {
                if k > 0 {
                    f.write_str(" + ")?;
                }
                write_fn(c, Prec::Compose, f)?;
            }
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Node::Max(cs) => {
            f.write_str("max(")?;
            for (k, c) in cs.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write_fn(c, Prec::Sum, f)?;
            }
            f.write_str(")")
        }
        Node::Compose(o, i) => {
            let paren = ctx > Prec::Compose;
            if paren {
                f.write_str("(")?;
            }
            write_fn(o, Prec::Atom, f)?;
            f.write_str(" o ")?;
            write_fn(i, Prec::Compose, f)?;
            if paren {
                f.write_str(")")?;
            }
            Ok(())
        }
        Node::Inverse(c) => {
            f.write_str("inv(")?;
            write_fn(c, Prec::Sum, f)?;
            f.write_str(")")
        }
    }
}

/// Shortest round-tripping decimal, switching to exponent form for extreme magnitudes.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-6..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

impl std::str::FromStr for ScalarFn {
    type Err = ExprError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse(s)
    }
}

impl Serialize for ScalarFn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ScalarFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Strictly increasing piecewise-linear minorant of the samples `(rs[k], vals[k])`, built
/// from the top down with `g[k] = min(vals[k], g[k+1] * rs[k] / rs[k+1])`. The terminal slope
/// is the secant from the origin, so linear samples come back as the same line.
pub fn lower_envelope(rs: &[f64], vals: &[f64]) -> Result<ScalarFn> {
    let m = rs.len();
    if m == 0 || vals.len() != m {
        return Err(Error::Validation("envelope needs matching, nonempty samples".into()));
    }
    let mut g = vals.to_vec();
    for k in (0..m - 1).rev() {
        g[k] = g[k].min(g[k + 1] * rs[k] / rs[k + 1]);
    }
    if !(g[0] > 0.0) {
        return Err(Error::Validation(format!("envelope is not positive at {}", rs[0])));
    }
    let knots: Vec<(f64, f64)> = rs.iter().copied().zip(g.iter().copied()).collect();
    ScalarFn::piecewise(knots, g[m - 1] / rs[m - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(a: f64) -> ScalarFn {
        ScalarFn::linear(a).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(lin(0.9).eval(1.0).unwrap(), 0.9);
        let d = ScalarFn::compose(&ScalarFn::id_plus(&lin(0.1)), &lin(0.9));
        assert!((d.eval(1.0).unwrap() - 0.99).abs() < 1e-15);
        let inv = ScalarFn::inverse(&lin(0.9)).unwrap();
        assert!((inv.eval(0.9).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(lin(1.0).eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn compose_laws() {
        let f = lin(0.9);
        assert_eq!(ScalarFn::compose(&ScalarFn::identity(), &f), f);
        assert!(ScalarFn::compose(&ScalarFn::zero(), &f).is_zero());
        assert!((ScalarFn::compose(&lin(1.1), &f).eval(2.0).unwrap() - 1.98).abs() < 1e-15);
        let k = ScalarFn::piecewise(vec![(1.0, 1.0)], 0.0).unwrap();
        assert_eq!(ScalarFn::compose(&k, &f).class(), FnClass::K);
    }

    #[test]
    fn combine_examples() {
        assert!((ScalarFn::sum(vec![lin(0.9), lin(0.9)]).unwrap().eval(1.0).unwrap() - 1.8).abs() < 1e-15);
        let m = ScalarFn::max(vec![lin(0.9), ScalarFn::zero()]).unwrap();
        assert_eq!(m, lin(0.9));
        assert_eq!(m.eval(2.0).unwrap(), 1.8);
        let tie = ScalarFn::max(vec![lin(0.5), ScalarFn::power(1.0, 2.0).unwrap()]).unwrap();
        assert_eq!(tie.eval(0.5).unwrap(), 0.25);
        assert!(ScalarFn::combine(Aggregation::Sum, vec![]).is_err());
    }

    #[test]
    fn less_than_id_examples() {
        let g = GridSpec::default();
        let cyc = ScalarFn::compose_all(&[lin(1.1), lin(0.9), lin(1.1), lin(0.9), lin(1.1), lin(0.9)]);
        let t = less_than_id(&cyc, &g).unwrap();
        assert!(t.holds);
        assert!((t.max_ratio - 0.970299).abs() < 1e-12);
        let t = less_than_id(&lin(1.0), &g).unwrap();
        assert!(!t.holds);
        assert_eq!(t.witness, Some(1e-3));
    }

    #[test]
    fn piecewise_eval_and_inverse() {
        let p = ScalarFn::piecewise(vec![(1.0, 2.0), (3.0, 3.0)], 0.25).unwrap();
        assert_eq!(p.eval(0.5).unwrap(), 1.0);
        assert_eq!(p.eval(2.0).unwrap(), 2.5);
        assert_eq!(p.eval(7.0).unwrap(), 4.0);
        for y in [0.3, 2.0, 2.7, 9.0] {
            assert!((p.eval(p.eval_inverse(y).unwrap()).unwrap() - y).abs() < 1e-12);
        }
    }

    #[test]
    fn bisection_inverse_of_sum() {
        let f = ScalarFn::sum(vec![lin(0.5), ScalarFn::power(2.0, 3.0).unwrap()]).unwrap();
        let inv = ScalarFn::inverse(&f).unwrap();
        for r in GridSpec::default().values() {
            let back = f.eval(inv.eval(r).unwrap()).unwrap();
            assert!((back - r).abs() <= 1e-9 * r.max(1.0), "r={r} back={back}");
        }
    }

    #[test]
    fn inverse_requires_kinf() {
        let k = ScalarFn::piecewise(vec![(1.0, 1.0)], 0.0).unwrap();
        assert!(ScalarFn::inverse(&k).is_err());
        assert!(ScalarFn::inverse(&ScalarFn::zero()).is_err());
    }

    #[test]
    fn validate_flags_saturation() {
        let g = GridSpec::default();
        assert!(lin(2.0).validate(&g).is_ok());
        assert!(ScalarFn::power(1.0, 0.001).unwrap().validate(&g).is_ok());
        let sat = ScalarFn::piecewise(vec![(1.0, 1.0)], 0.0).unwrap();
        assert!(sat.validate(&g).is_err());
        let ok_k = ScalarFn::piecewise(vec![(1e4, 1.0)], 0.0).unwrap();
        assert!(ok_k.validate(&g).is_ok());
    }

    #[test]
    fn linear_slope_detection() {
        let f = ScalarFn::compose(&ScalarFn::id_plus(&lin(0.1)), &lin(0.9));
        assert!((f.linear_slope().unwrap() - 0.99).abs() < 1e-15);
        assert_eq!(ScalarFn::power(2.0, 2.0).unwrap().linear_slope(), None);
        let p = ScalarFn::piecewise(vec![(1.0, 0.9), (2.0, 1.8)], 0.9).unwrap();
        assert_eq!(p.linear_slope(), Some(0.9));
    }

    #[test]
    fn envelope_of_linear_samples_is_the_line() {
        let rs = GridSpec::default().values();
        let vals: Vec<f64> = rs.iter().map(|r| 0.045 * r).collect();
        let e = lower_envelope(&rs, &vals).unwrap();
        for &r in &[1e-4, 0.3, 2.0, 5e3] {
            assert!((e.eval(r).unwrap() - 0.045 * r).abs() <= 1e-12 * r);
        }
        let bumpy = [1.0, 3.0, 2.0, 4.0];
        let e = lower_envelope(&[1.0, 2.0, 3.0, 4.0], &bumpy).unwrap();
        for (k, b) in bumpy.iter().enumerate() {
            assert!(e.eval(k as f64 + 1.0).unwrap() <= *b);
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.9), "0.9");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(1e150), "1e150");
        assert_eq!(fmt_num(2.5e-7), "2.5e-7");
    }
}

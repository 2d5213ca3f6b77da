//! The `.ganet` network description format.
//!
//! ```text
//! [system]
//! n = 2
//! title = "two loops"
//!
//! [row 1]
//! agg = sum
//! gain 2 = "0.5*r"
//! external = "r"
//!
//! [row 2]
//! agg = max
//! gain 1 = "0.5*r"
//!
//! [dynamics 1]
//! self = 1
//! agg = sum
//! term x2 = "0.5*r"
//! term u = "r"
//!
//! [lyapunov 1]
//! shape = abs
//! eps = 0.05
//!
//! [analysis]
//! grid = 0.001, 1000, 121
//! alpha = "0.1*r"
//! ```
//!
//! Lines starting with `#` are comments. Unknown sections and keys are rejected. [`print`] emits
//! the canonical form, which parses back to the same model.

use std::fmt::{self, Write as _};

use crate::dynamics::{RowDynamics, Source, Term, VectorFieldSpec};
use crate::grid::GridSpec;
use crate::kfun::{fmt_num, Aggregation, FnClass, ScalarFn};
use crate::lyapunov::{PartSpec, Shape};
use crate::network::GainNetwork;
use crate::verify::AnalysisConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
    pub message: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        match &self.message {
            Some(m) => f.write_str(m),
            None => write!(f, "expected {} but found {}", self.expected.join(" or "), self.found),
        }
    }
}

impl std::error::Error for ParseError {}

type PResult<T> = std::result::Result<T, ParseError>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisSection {
    pub grid: Option<GridSpec>,
    pub alpha: Option<ScalarFn>,
    pub alpha_sweep: Option<Vec<f64>>,
    pub cycle_cap: Option<usize>,
    pub rays: Option<usize>,
    pub seed: Option<u64>,
}

impl AnalysisSection {
    pub fn config(&self) -> AnalysisConfig {
        let mut cfg = AnalysisConfig::default();
        if let Some(g) = &self.grid {
            cfg.grid = *g;
        }
        cfg.alpha = self.alpha.clone();
        if let Some(s) = &self.alpha_sweep {
            cfg.alpha_sweep = s.clone();
        }
        if let Some(c) = self.cycle_cap {
            cfg.cycle_cap = c;
        }
        if let Some(r) = self.rays {
            cfg.search.rays = r;
        }
        if let Some(s) = self.seed {
            cfg.search.seed = s;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub title: Option<String>,
    pub network: GainNetwork,
    pub dynamics: Option<VectorFieldSpec>,
    pub lyapunov: Option<Vec<PartSpec>>,
    pub analysis: Option<AnalysisSection>,
}

impl NetworkSpec {
    pub fn lyapunov_parts(&self) -> Vec<PartSpec> {
        self.lyapunov.clone().unwrap_or_else(|| vec![PartSpec::default(); self.network.n()])
    }
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

fn describe(c: Option<char>) -> String {
    match c {
        None => "end of line".into(),
        Some(c) => format!("'{c}'"),
    }
}

impl Cursor {
    fn new(src: &str, line: usize) -> Self {
        Cursor { chars: src.chars().collect(), pos: 0, line }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn err(&self, expected: &[&str]) -> ParseError {
        ParseError {
            line: self.line,
            column: self.col(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: describe(self.peek()),
            message: None,
        }
    }

    fn semantic(&self, col: usize, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column: col,
            expected: Vec::new(),
            found: String::new(),
            message: Some(msg.into()),
        }
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn expect(&mut self, c: char) -> PResult<()> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&[&format!("'{c}'")]))
        }
    }

    fn end(&mut self) -> PResult<()> {
        self.skip_ws();
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.err(&["end of line"])),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                Err(self.err(&["number"]))
            }
        }
    }

    fn integer(&mut self) -> PResult<u64> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<u64>().map_err(|_| {
            self.pos = start;
            self.err(&["integer"])
        })
    }

    /// Quoted string; returns the text and the column of its first character.
    fn string(&mut self) -> PResult<(String, usize)> {
        self.skip_ws();
        if self.peek() != Some('"') {
            return Err(self.err(&["'\"'"]));
        }
        self.pos += 1;
        let col = self.col();
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return Err(self.err(&["'\"'"])),
                Some('"') => {
                    self.pos += 1;
                    return Ok((out, col));
                }
                Some('\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(c @ ('"' | '\\')) => {
                            out.push(c);
                            self.pos += 1;
                        }
                        _ => return Err(self.err(&["'\"'", "'\\\\'"])),
                    }
                }
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn expr(&mut self, need_kinf: bool) -> PResult<ScalarFn> {
        let (text, col) = self.string()?;
        let f: ScalarFn = text.parse().map_err(|e: crate::kfun::ExprError| ParseError {
            line: self.line,
            column: col + e.offset,
            expected: e.expected,
            found: e.found,
            message: e.message,
        })?;
        if need_kinf && !f.is_zero() && f.class() != FnClass::KInf {
            return Err(self.semantic(col, "gain must be class K-infinity"));
        }
        Ok(f)
    }

    fn agg(&mut self) -> PResult<Aggregation> {
        self.skip_ws();
        let save = self.pos;
        match self.word().as_str() {
            "sum" => Ok(Aggregation::Sum),
            "max" => Ok(Aggregation::Max),
            _ => {
                self.pos = save;
                Err(self.err(&["sum", "max"]))
            }
        }
    }

    /// Index in `1..=n`, returned 0-based.
    fn index(&mut self, n: usize) -> PResult<usize> {
        self.skip_ws();
        let col = self.col();
        let i = self.integer()? as usize;
        if i == 0 || i > n {
            return Err(self.semantic(col, format!("index {i} out of range 1..{n}")));
        }
        Ok(i - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    System,
    Row(usize),
    Dynamics(usize),
    Lyapunov(usize),
    Analysis,
}

#[derive(Default)]
struct RowDraft {
    agg: Option<Aggregation>,
    gains: Vec<Option<ScalarFn>>,
    external: Option<ScalarFn>,
}

#[derive(Default)]
struct DynDraft {
    decay: Option<f64>,
    agg: Option<Aggregation>,
    terms: Vec<Term>,
}

#[derive(Default)]
struct LyapDraft {
    shape: Option<Shape>,
    eps: Option<f64>,
    rate: Option<ScalarFn>,
}

struct Parser {
    n: Option<usize>,
    title: Option<String>,
    rows: Vec<Option<RowDraft>>,
    dynamics: Vec<Option<DynDraft>>,
    lyapunov: Vec<Option<LyapDraft>>,
    analysis: Option<AnalysisSection>,
    keys: Vec<String>,
}

const SECTIONS: [&str; 5] = ["system", "row", "dynamics", "lyapunov", "analysis"];

pub fn parse(text: &str) -> PResult<NetworkSpec> {
    let mut p = Parser {
        n: None,
        title: None,
        rows: Vec::new(),
        dynamics: Vec::new(),
        lyapunov: Vec::new(),
        analysis: None,
        keys: Vec::new(),
    };
    let mut current: Option<Section> = None;
    let mut last_line = 0;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        last_line = line_no;
        let mut c = Cursor::new(raw, line_no);
        c.skip_ws();
        match c.peek() {
            None | Some('#') => continue,
            Some('[') => {
                if let Some(s) = current {
                    p.finish(s, line_no, c.col(), "'['")?;
                }
                current = Some(p.header(&mut c, current.is_none())?);
            }
            Some(_) => match current {
                None => return Err(c.err(&["'[system]'"])),
                Some(s) => p.entry(s, &mut c)?,
            },
        }
    }
    let eof = (last_line + 1, 1);
    match current {
        None => Err(ParseError {
            line: eof.0,
            column: eof.1,
            expected: vec!["'[system]'".into()],
            found: "end of file".into(),
            message: None,
        }),
        Some(s) => {
            p.finish(s, eof.0, eof.1, "end of file")?;
            p.build(eof)
        }
    }
}

impl Parser {
    fn n(&self) -> usize {
        self.n.unwrap_or(0)
    }

    fn header(&mut self, c: &mut Cursor, first: bool) -> PResult<Section> {
        c.pos += 1;
        c.skip_ws();
        let save = c.pos;
        let name = c.word();
        let section = match name.as_str() {
            "system" if first => Section::System,
            _ if first => {
                c.pos = save;
                return Err(c.err(&["system"]));
            }
            "row" => Section::Row(c.index(self.n())?),
            "dynamics" => Section::Dynamics(c.index(self.n())?),
            "lyapunov" => Section::Lyapunov(c.index(self.n())?),
            "analysis" => Section::Analysis,
            _ => {
                c.pos = save;
                return Err(c.err(&SECTIONS));
            }
        };
        c.expect(']')?;
        c.end()?;
        let n = self.n();
        let dup = match section {
            Section::System => false,
            Section::Row(i) => self.rows[i].replace(RowDraft { gains: vec![None; n], ..Default::default() }).is_some(),
            Section::Dynamics(i) => self.dynamics[i].replace(DynDraft::default()).is_some(),
            Section::Lyapunov(i) => self.lyapunov[i].replace(LyapDraft::default()).is_some(),
            Section::Analysis => self.analysis.replace(AnalysisSection::default()).is_some(),
        };
        if dup {
            return Err(c.semantic(save + 1, "duplicate section"));
        }
        self.keys.clear();
        Ok(section)
    }

    fn finish(&mut self, s: Section, line: usize, column: usize, found: &str) -> PResult<()> {
        let missing = |what: &str| ParseError {
            line,
            column,
            expected: vec![what.to_string()],
            found: found.to_string(),
            message: None,
        };
        match s {
            Section::System => {
                if self.n.is_none() {
                    return Err(missing("n"));
                }
            }
            Section::Row(i) => {
                if self.rows[i].as_ref().is_some_and(|r| r.agg.is_none()) {
                    return Err(missing("agg"));
                }
            }
            Section::Dynamics(i) => {
                let d = self.dynamics[i].as_ref().expect("section opened");
                if d.decay.is_none() {
                    return Err(missing("self"));
                }
                if d.agg.is_none() {
                    return Err(missing("agg"));
                }
            }
            Section::Lyapunov(i) => {
                if self.lyapunov[i].as_ref().is_some_and(|l| l.shape.is_none()) {
                    return Err(missing("shape"));
                }
            }
            Section::Analysis => {}
        }
        Ok(())
    }

    fn key(&mut self, c: &mut Cursor, allowed: &[&str]) -> PResult<(String, usize)> {
        let col = c.col();
        let k = c.word();
        if !allowed.contains(&k.as_str()) {
            c.pos = col - 1;
            return Err(c.err(allowed));
        }
        Ok((k, col))
    }

    fn once(&mut self, c: &Cursor, key: String, col: usize) -> PResult<()> {
        if self.keys.contains(&key) {
            return Err(c.semantic(col, format!("duplicate key {key}")));
        }
        self.keys.push(key);
        Ok(())
    }

    fn entry(&mut self, s: Section, c: &mut Cursor) -> PResult<()> {
        let n = self.n();
        match s {
            Section::System => {
                let (k, col) = self.key(c, &["n", "title"])?;
                self.once(c, k.clone(), col)?;
                c.expect('=')?;
                if k == "n" {
                    c.skip_ws();
                    let vcol = c.col();
                    let v = c.integer()? as usize;
                    if v == 0 {
                        return Err(c.semantic(vcol, "n must be positive"));
                    }
                    self.n = Some(v);
                    self.rows = (0..v).map(|_| None).collect();
                    self.dynamics = (0..v).map(|_| None).collect();
                    self.lyapunov = (0..v).map(|_| None).collect();
                } else {
                    self.title = Some(c.string()?.0);
                }
            }
            Section::Row(i) => {
                let first = self.rows[i].as_ref().is_some_and(|r| r.agg.is_none());
                let allowed: &[&str] = if first { &["agg"] } else { &["gain", "external"] };
                let (k, col) = self.key(c, allowed)?;
                let row = self.rows[i].as_mut().expect("section opened");
                match k.as_str() {
                    "agg" => {
                        c.expect('=')?;
                        row.agg = Some(c.agg()?);
                    }
                    "gain" => {
                        c.skip_ws();
                        let jcol = c.col();
                        let j = c.index(n)?;
                        if row.gains[j].is_some() {
                            return Err(c.semantic(jcol, format!("duplicate gain {}", j + 1)));
                        }
                        c.expect('=')?;
                        let g = c.expr(true)?;
                        if j == i && !g.is_zero() {
                            return Err(c.semantic(jcol, "diagonal gain must be absent"));
                        }
                        row.gains[j] = Some(g);
                    }
                    _ => {
                        if row.external.is_some() {
                            return Err(c.semantic(col, "duplicate key external"));
                        }
                        c.expect('=')?;
                        row.external = Some(c.expr(true)?);
                    }
                }
            }
            Section::Dynamics(i) => {
                let (k, col) = self.key(c, &["self", "agg", "term"])?;
                match k.as_str() {
                    "self" | "agg" => {
                        self.once(c, k.clone(), col)?;
                        c.expect('=')?;
                        let d = self.dynamics[i].as_mut().expect("section opened");
                        if k == "self" {
                            c.skip_ws();
                            let vcol = c.col();
                            let a = c.number()?;
                            if !(a > 0.0) {
                                return Err(c.semantic(vcol, "self slope must be positive"));
                            }
                            d.decay = Some(a);
                        } else {
                            d.agg = Some(c.agg()?);
                        }
                    }
                    _ => {
                        c.skip_ws();
                        let scol = c.col();
                        let source = match c.peek() {
                            Some('u') => {
                                c.pos += 1;
                                Source::Input
                            }
                            Some('x') => {
                                c.pos += 1;
                                let j = c.index(n)?;
                                if j == i {
                                    return Err(c.semantic(scol, "self term belongs in the self slope"));
                                }
                                Source::State(j)
                            }
                            _ => return Err(c.err(&["'x'", "'u'"])),
                        };
                        c.expect('=')?;
                        let gain = c.expr(false)?;
                        let d = self.dynamics[i].as_mut().expect("section opened");
                        if d.terms.iter().any(|t| t.source == source) {
                            return Err(c.semantic(scol, "duplicate term"));
                        }
                        d.terms.push(Term { source, gain });
                    }
                }
            }
            Section::Lyapunov(i) => {
                let (k, col) = self.key(c, &["shape", "eps", "rate"])?;
                self.once(c, k.clone(), col)?;
                c.expect('=')?;
                let l = self.lyapunov[i].as_mut().expect("section opened");
                match k.as_str() {
                    "shape" => {
                        c.skip_ws();
                        let save = c.pos;
                        let shape = match c.word().as_str() {
                            "abs" => Shape::Abs,
                            w @ ("scaled" | "quadratic") => {
                                c.expect('(')?;
                                let v = c.number()?;
                                c.expect(')')?;
                                if !(v > 0.0) {
                                    return Err(c.semantic(save + 1, "shape weight must be positive"));
                                }
                                if w == "scaled" {
                                    Shape::Scaled(v)
                                } else {
                                    Shape::Quadratic(v)
                                }
                            }
                            _ => {
                                c.pos = save;
                                return Err(c.err(&["abs", "scaled", "quadratic"]));
                            }
                        };
                        l.shape = Some(shape);
                    }
                    "eps" => {
                        c.skip_ws();
                        let vcol = c.col();
                        let e = c.number()?;
                        if !(e > 0.0 && e < 1.0) {
                            return Err(c.semantic(vcol, "eps must lie in (0, 1)"));
                        }
                        l.eps = Some(e);
                    }
                    _ => l.rate = Some(c.expr(false)?),
                }
            }
            Section::Analysis => {
                let (k, col) = self.key(c, &["grid", "alpha", "alpha_sweep", "cycle_cap", "rays", "seed"])?;
                self.once(c, k.clone(), col)?;
                c.expect('=')?;
                c.skip_ws();
                let vcol = c.col();
                let a = self.analysis.as_mut().expect("section opened");
                match k.as_str() {
                    "grid" => {
                        let lo = c.number()?;
                        c.expect(',')?;
                        let hi = c.number()?;
                        c.expect(',')?;
                        let pts = c.integer()? as usize;
                        a.grid = Some(GridSpec::new(lo, hi, pts).map_err(|e| c.semantic(vcol, e.to_string()))?);
                    }
                    "alpha" => {
                        let f = c.expr(true)?;
                        if f.is_zero() {
                            return Err(c.semantic(vcol, "alpha must be class K-infinity"));
                        }
                        a.alpha = Some(f);
                    }
                    "alpha_sweep" => {
                        let mut v = vec![c.number()?];
                        loop {
                            c.skip_ws();
                            if c.peek() != Some(',') {
                                break;
                            }
                            c.pos += 1;
                            v.push(c.number()?);
                        }
                        if v.iter().any(|x| !(*x > 0.0)) {
                            return Err(c.semantic(vcol, "alpha_sweep slopes must be positive"));
                        }
                        a.alpha_sweep = Some(v);
                    }
                    "cycle_cap" => a.cycle_cap = Some(c.integer()? as usize),
                    "rays" => a.rays = Some(c.integer()? as usize),
                    _ => a.seed = Some(c.integer()?),
                }
            }
        }
        c.end()
    }

    fn build(self, eof: (usize, usize)) -> PResult<NetworkSpec> {
        let n = self.n();
        let at_eof = |msg: String| ParseError {
            line: eof.0,
            column: eof.1,
            expected: Vec::new(),
            found: "end of file".into(),
            message: Some(msg),
        };
        let mut agg = Vec::with_capacity(n);
        let mut gamma = Vec::with_capacity(n);
        let mut external = Vec::with_capacity(n);
        for (i, r) in self.rows.into_iter().enumerate() {
            let r = r.ok_or_else(|| at_eof(format!("missing section [row {}]", i + 1)))?;
            agg.push(r.agg.expect("checked on finish"));
            gamma.push(r.gains.into_iter().map(|g| g.unwrap_or_else(ScalarFn::zero)).collect());
            external.push(r.external.unwrap_or_else(ScalarFn::zero));
        }
        let network = GainNetwork::new(agg, gamma, external).map_err(|e| at_eof(e.to_string()))?;
        let dynamics = if self.dynamics.iter().all(Option::is_none) {
            None
        } else {
            let mut rows = Vec::with_capacity(n);
            for (i, d) in self.dynamics.into_iter().enumerate() {
                let mut d = d.ok_or_else(|| at_eof(format!("missing section [dynamics {}]", i + 1)))?;
                d.terms.sort_by_key(|t| match t.source {
                    Source::State(j) => j,
                    Source::Input => usize::MAX,
                });
                rows.push(RowDynamics {
                    decay: d.decay.expect("checked"),
                    agg: d.agg.expect("checked"),
                    terms: d.terms,
                });
            }
            Some(VectorFieldSpec::new(rows).map_err(|e| at_eof(e.to_string()))?)
        };
        let lyapunov = if self.lyapunov.iter().all(Option::is_none) {
            None
        } else {
            let mut parts = Vec::with_capacity(n);
            for (i, l) in self.lyapunov.into_iter().enumerate() {
                let l = l.ok_or_else(|| at_eof(format!("missing section [lyapunov {}]", i + 1)))?;
                let d = PartSpec::default();
                parts.push(PartSpec { shape: l.shape.expect("checked"), eps: l.eps.unwrap_or(d.eps), rate: l.rate });
            }
            Some(parts)
        };
        Ok(NetworkSpec { title: self.title, network, dynamics, lyapunov, analysis: self.analysis })
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn agg_name(a: Aggregation) -> &'static str {
    match a {
        Aggregation::Sum => "sum",
        Aggregation::Max => "max",
    }
}

/// Canonical text of a model.
pub fn print(spec: &NetworkSpec) -> String {
    let net = &spec.network;
    let n = net.n();
    let mut out = String::new();
    let _ = writeln!(out, "[system]\nn = {n}");
    if let Some(t) = &spec.title {
        let _ = writeln!(out, "title = {}", quote(t));
    }
    for i in 0..n {
        let _ = writeln!(out, "\n[row {}]\nagg = {}", i + 1, agg_name(net.agg()[i]));
        for j in 0..n {
            if !net.gain(i, j).is_zero() {
                let _ = writeln!(out, "gain {} = {}", j + 1, quote(&net.gain(i, j).to_string()));
            }
        }
        if !net.external(i).is_zero() {
            let _ = writeln!(out, "external = {}", quote(&net.external(i).to_string()));
        }
    }
    if let Some(d) = &spec.dynamics {
        for (i, row) in d.rows.iter().enumerate() {
            let _ = writeln!(out, "\n[dynamics {}]\nself = {}\nagg = {}", i + 1, fmt_num(row.decay), agg_name(row.agg));
            for t in &row.terms {
                let src = match t.source {
                    Source::State(j) => format!("x{}", j + 1),
                    Source::Input => "u".into(),
                };
                let _ = writeln!(out, "term {src} = {}", quote(&t.gain.to_string()));
            }
        }
    }
    if let Some(parts) = &spec.lyapunov {
        for (i, p) in parts.iter().enumerate() {
            let shape = match p.shape {
                Shape::Abs => "abs".to_string(),
                Shape::Scaled(c) => format!("scaled({})", fmt_num(c)),
                Shape::Quadratic(w) => format!("quadratic({})", fmt_num(w)),
            };
            let _ = writeln!(out, "\n[lyapunov {}]\nshape = {shape}\neps = {}", i + 1, fmt_num(p.eps));
            if let Some(r) = &p.rate {
                let _ = writeln!(out, "rate = {}", quote(&r.to_string()));
            }
        }
    }
    if let Some(a) = &spec.analysis {
        out.push_str("\n[analysis]\n");
        if let Some(g) = &a.grid {
            let _ = writeln!(out, "grid = {}, {}, {}", fmt_num(g.r_min), fmt_num(g.r_max), g.points);
        }
        if let Some(f) = &a.alpha {
            let _ = writeln!(out, "alpha = {}", quote(&f.to_string()));
        }
        if let Some(s) = &a.alpha_sweep {
            let _ = writeln!(out, "alpha_sweep = {}", s.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(", "));
        }
        if let Some(c) = a.cycle_cap {
            let _ = writeln!(out, "cycle_cap = {c}");
        }
        if let Some(r) = a.rays {
            let _ = writeln!(out, "rays = {r}");
        }
        if let Some(s) = a.seed {
            let _ = writeln!(out, "seed = {s}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "[system]\nn = 2\n\n[row 1]\nagg = sum\ngain 2 = \"0.5*r\"\nexternal = \"r\"\n\n[row 2]\nagg = max\ngain 1 = \"0.5*r\"\n";

    fn err(text: &str) -> ParseError {
        parse(text).unwrap_err()
    }

    #[test]
    fn small_round_trip() {
        let spec = parse(SMALL).unwrap();
        assert_eq!(spec.network.gain(0, 1).linear_slope(), Some(0.5));
        assert_eq!(print(&spec), SMALL);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{}", SMALL.replace("agg = max", "  agg = max   "));
        assert_eq!(print(&parse(&text).unwrap()), SMALL);
    }

    #[test]
    fn error_positions() {
        let e = err("[system]\nn = 2\n\n[row 1]\nagg = sum\n\n[row 2]\n");
        assert_eq!(
            (e.line, e.column, e.expected.clone(), e.found.as_str()),
            (8, 1, vec!["agg".to_string()], "end of file")
        );
        let e = err("[system]\nn = 2\n[row 1]\nagg = sum\ngain 1 = \"r\"\n");
        assert_eq!((e.line, e.column), (5, 6));
        assert_eq!(e.message.as_deref(), Some("diagonal gain must be absent"));
        let e = err("[system]\nn = 2\ncolor = 3\n");
        assert_eq!((e.line, e.column), (3, 1));
        assert_eq!(e.expected, vec!["n", "title"]);
        let e = err("[system]\nn = 2\n[row 1]\nagg = sum\ngain 2 = \"0.9*\"\n");
        assert_eq!((e.line, e.column), (5, 15));
        let e = err("[system]\nn = 2\n[row 3]\n");
        assert_eq!(e.message.as_deref(), Some("index 3 out of range 1..2"));
        let e = err("[row 1]\n");
        assert_eq!(e.expected, vec!["system"]);
        let e = err("[system]\nn = 2\n[row 1]\nagg = sum\n[row 2]\nagg = max\ngain 1 = \"pl[1:1; 0]\"\n");
        assert_eq!(e.message.as_deref(), Some("gain must be class K-infinity"));
        let e = err("[system]\nn = 2\n[row 1]\nagg = sum\n");
        assert_eq!(e.message.as_deref(), Some("missing section [row 2]"));
    }

    #[test]
    fn optional_sections() {
        let text = format!(
            "{SMALL}\n[dynamics 1]\nself = 2\nagg = sum\nterm x2 = \"0.5*r\"\nterm u = \"r\"\n\n[dynamics 2]\nself = 1\nagg = max\n\n\
             [lyapunov 1]\nshape = abs\neps = 0.05\n\n[lyapunov 2]\nshape = quadratic(2)\neps = 0.1\nrate = \"0.2*r^2\"\n\n\
             [analysis]\ngrid = 0.01, 100, 41\nalpha = \"0.1*r\"\nalpha_sweep = 1, 0.5\ncycle_cap = 50\nrays = 16\nseed = 7\n"
        );
        let spec = parse(&text).unwrap();
        assert_eq!(print(&spec), text);
        let d = spec.dynamics.as_ref().unwrap();
        assert_eq!(d.rows[0].decay, 2.0);
        assert_eq!(spec.lyapunov.as_ref().unwrap()[1].shape, Shape::Quadratic(2.0));
        let cfg = spec.analysis.as_ref().unwrap().config();
        assert_eq!((cfg.cycle_cap, cfg.search.rays, cfg.search.seed, cfg.grid.points), (50, 16, 7, 41));
        let e = err(&format!("{SMALL}\n[dynamics 1]\nself = 1\nagg = sum\n"));
        assert_eq!(e.message.as_deref(), Some("missing section [dynamics 2]"));
    }
}

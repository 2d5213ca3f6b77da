//! Orchestration of the analyses behind the command-line tool and the versioned JSON report.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::{check_estimates, integrate, step_halving_error, InputSignal};
use crate::error::{Error, Result};
use crate::ganet::{self, NetworkSpec};
use crate::grid::GridSpec;
use crate::kfun::ScalarFn;
use crate::lyapunov::{build_lyapunov, check_decrease, SampleSpec};
use crate::network::GainNetwork;
use crate::path::{build_path, validate_path, PathConfig};
use crate::transform::{alpha_from_etas, etas_from_path, sum_to_max};
use crate::verify::{analyze, verify_cycles, AnalysisConfig, Status};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Transform,
    Path,
    Lyap,
    Simulate,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Transform => "transform",
            Command::Path => "path",
            Command::Lyap => "lyap",
            Command::Simulate => "simulate",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub alpha: Option<ScalarFn>,
    pub grid: Option<GridSpec>,
    pub input: Option<InputSignal>,
    pub horizon: f64,
    pub dt: f64,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Gated samples per input level in `lyap`.
    pub samples: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            alpha: None,
            grid: None,
            input: None,
            horizon: 60.0,
            dt: 1e-3,
            out: None,
            seed: None,
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: Value,
    /// 0 when every requested check passed, 1 otherwise.
    pub exit_code: i32,
}

struct Ctx<'a> {
    spec: &'a NetworkSpec,
    opts: &'a RunOptions,
    cfg: AnalysisConfig,
    stem: String,
    errors: Vec<Value>,
    ok: bool,
    alpha: Option<ScalarFn>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn net_text(net: &GainNetwork) -> String {
    ganet::print(&NetworkSpec { title: None, network: net.clone(), dynamics: None, lyapunov: None, analysis: None })
}

impl Ctx<'_> {
    fn fail(&mut self, stage: &str, e: &Error) {
        self.ok = false;
        self.errors.push(json!({ "stage": stage, "message": e.to_string() }));
    }

    fn path_config(&self) -> PathConfig {
        PathConfig { grid: self.cfg.grid, ..Default::default() }
    }

    /// Alpha from the command line or file, else from the analysis sweep.
    fn alpha(&mut self) -> Result<ScalarFn> {
        if let Some(a) = &self.alpha {
            return Ok(a.clone());
        }
        let a = analyze(&self.spec.network, &self.cfg)?;
        match a.certificate.alpha {
            Some(alpha) if a.certificate.status == Status::Verified => {
                self.alpha = Some(alpha.clone());
                Ok(alpha)
            }
            _ => Err(Error::Validation("no alpha in the sweep verifies the small-gain condition".into())),
        }
    }

    fn analyze(&mut self) -> Result<Value> {
        let a = analyze(&self.spec.network, &self.cfg)?;
        let cert = &a.certificate;
        match (&cert.alpha, cert.status) {
            (Some(alpha), Status::Verified) => {
                self.alpha.get_or_insert_with(|| alpha.clone());
            }
            _ => self.ok = false,
        }
        let tried = a.trials.last().map(|t| t.alpha.clone());
        let margins: Vec<f64> = cert.evidence.cycles.iter().map(|c| c.margin).collect();
        Ok(json!({
            "status": cert.status,
            "alpha": tried,
            "cycle_margins": margins,
            "rho": a.spectral.as_ref().map(|s| s.rho),
            "certificate": to_value(cert),
            "spectral": to_value(&a.spectral),
            "trials": to_value(&a.trials),
        }))
    }

    fn transform(&mut self) -> Result<Value> {
        let net = &self.spec.network;
        let alpha = self.alpha()?;
        let path = build_path(net, &alpha, &self.path_config())?;
        let plan = etas_from_path(net, &path, &self.cfg.grid)?;
        let max_net = sum_to_max(net, &plan)?;
        let cycles = verify_cycles(&max_net, &alpha, &self.cfg.grid, self.cfg.cycle_cap)?;
        let recovered = alpha_from_etas(net, &plan, &self.cfg.grid)?;
        let passed = cycles.status == Status::Verified;
        self.ok &= passed;
        Ok(json!({
            "alpha": alpha,
            "plan": to_value(&plan),
            "network": net_text(&max_net),
            "cycle_status": cycles.status,
            "cycle_margins": cycles.evidence.cycles.iter().map(|c| c.margin).collect::<Vec<_>>(),
            "recovered_alpha": recovered,
        }))
    }

    fn path(&mut self) -> Result<Value> {
        let alpha = self.alpha()?;
        let path = build_path(&self.spec.network, &alpha, &self.path_config())?;
        let validation = match path.validation {
            Some(v) => v,
            None => validate_path(&self.spec.network, &alpha, &path, &self.cfg.grid)?,
        };
        self.ok &= validation.ok;
        Ok(
            json!({ "alpha": alpha, "sigma": path.sigma, "min_margin": validation.min_margin, "ok": validation.ok, "validation": to_value(&validation) }),
        )
    }

    fn lyap(&mut self) -> Result<Value> {
        let dynamics =
            self.spec.dynamics.as_ref().ok_or_else(|| Error::Lyapunov("the file has no [dynamics] sections".into()))?;
        let alpha = match &self.alpha {
            Some(a) => a.clone(),
            None => ScalarFn::linear(0.1)?,
        };
        let model = build_lyapunov(dynamics, &self.spec.lyapunov_parts(), &alpha, &self.path_config())?;
        let levels: Vec<f64> = match &self.opts.input {
            Some(u) => vec![u.sup_norm()],
            None => vec![0.0, 0.5, 1.0],
        };
        let mut reports = Vec::new();
        for (k, &u) in levels.iter().enumerate() {
            let mut s = SampleSpec { samples: self.opts.samples, u_level: u, ..Default::default() };
            if let Some(seed) = self.opts.seed {
                s.seed = seed.wrapping_add(k as u64);
            }
            let rep = check_decrease(&model, dynamics, &s)?;
            self.ok &= rep.ok(self.opts.samples);
            reports.push(rep);
        }
        Ok(json!({
            "alpha": alpha,
            "network": net_text(&model.network),
            "sigma": model.composite.path.sigma,
            "phi": model.phi,
            "gate": model.gate,
            "external_margin": model.external_margin,
            "decrease": to_value(&reports),
        }))
    }

    fn simulate(&mut self) -> Result<Value> {
        let dynamics =
            self.spec.dynamics.as_ref().ok_or_else(|| Error::Dynamics("the file has no [dynamics] sections".into()))?;
        let u = self.opts.input.unwrap_or(InputSignal::Constant { value: 1.0 });
        let (t_end, dt) = (self.opts.horizon, self.opts.dt);
        let x0 = vec![0.0; dynamics.n()];
        let traj = match integrate(dynamics, &x0, &u, t_end, dt) {
            Ok(t) => t,
            Err(Error::Divergence { t }) => {
                self.ok = false;
                return Ok(json!({ "input": to_value(&u), "diverged_at": t, "growing": true,
                    "estimates": { "applicable": false, "notes": ["not applicable: trajectory diverged"] } }));
            }
            Err(e) => return Err(e),
        };
        let dir = self.opts.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        let csv = dir.join(format!("{}_trajectory.csv", self.stem));
        traj.write_csv(std::io::BufWriter::new(std::fs::File::create(&csv)?))?;
        let gs = dynamics.gs_network()?;
        let alpha = match &self.alpha {
            Some(a) => a.clone(),
            None => {
                let a = analyze(&gs, &self.cfg)?;
                a.certificate.alpha.or_else(|| a.trials.last().map(|t| t.alpha.clone())).expect("at least one trial")
            }
        };
        let sigma = vec![ScalarFn::identity(); gs.n()];
        let gamma_hat: Vec<ScalarFn> = (0..gs.n()).map(|i| gs.external(i).clone()).collect();
        let decay: Vec<f64> = dynamics.rows.iter().map(|r| r.decay).collect();
        let est = check_estimates(&traj, &gs, &alpha, &sigma, &gamma_hat, &decay)?;
        let halving = step_halving_error(dynamics, &x0, &u, t_end, dt)?;
        self.ok &= est.passed() && !est.growing;
        Ok(json!({
            "input": to_value(&u),
            "horizon": t_end,
            "dt": dt,
            "csv": csv.display().to_string(),
            "endpoint": traj.last(),
            "growing": est.growing,
            "step_halving_rel": halving,
            "gs_network": net_text(&gs),
            "alpha": alpha,
            "estimates": to_value(&est),
        }))
    }
}

/// Run `command` on a parsed model. Stage failures are collected in the `errors` array.
pub fn run(command: Command, spec: &NetworkSpec, source: &Path, opts: &RunOptions) -> RunOutcome {
    let mut cfg = spec.analysis.as_ref().map(|a| a.config()).unwrap_or_default();
    if let Some(g) = &opts.grid {
        cfg.grid = *g;
        cfg.search.r_min = g.r_min;
        cfg.search.r_max = g.r_max;
    }
    if let Some(a) = &opts.alpha {
        cfg.alpha = Some(a.clone());
    }
    if let Some(s) = opts.seed {
        cfg.search.seed = s;
    }
    let stem = source.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "network".into());
    let mut ctx = Ctx { spec, opts, alpha: cfg.alpha.clone(), cfg, stem, errors: Vec::new(), ok: true };
    let stages: &[Command] = match command {
        Command::Report => &[Command::Analyze, Command::Transform, Command::Path, Command::Lyap, Command::Simulate],
        _ => std::slice::from_ref(&command),
    };
    let mut report = json!({
        "schema": SCHEMA,
        "command": command.name(),
        "source": source.display().to_string(),
        "title": spec.title,
        "n": spec.network.n(),
    });
    for &stage in stages {
        if command == Command::Report && matches!(stage, Command::Lyap | Command::Simulate) && spec.dynamics.is_none() {
            report[stage.name()] = json!({ "skipped": "no [dynamics] sections" });
            continue;
        }
        let res = match stage {
            Command::Analyze => ctx.analyze(),
            Command::Transform => ctx.transform(),
            Command::Path => ctx.path(),
            Command::Lyap => ctx.lyap(),
            Command::Simulate => ctx.simulate(),
            Command::Report => unreachable!("report is expanded into stages"),
        };
        match res {
            Ok(v) => report[stage.name()] = v,
            Err(e) => {
                ctx.fail(stage.name(), &e);
                report[stage.name()] = Value::Null;
            }
        }
    }
    report["ok"] = json!(ctx.ok);
    report["errors"] = Value::Array(ctx.errors);
    RunOutcome { report, exit_code: if ctx.ok { 0 } else { 1 } }
}

/// Human-readable summary of a report.
pub fn summary(report: &Value) -> String {
    let mut lines =
        vec![format!("{} {}", report["command"].as_str().unwrap_or(""), report["source"].as_str().unwrap_or(""))];
    if let Some(a) = report.get("analyze").filter(|v| !v.is_null()) {
        lines.push(format!("  analyze: {} alpha {} cycle margins {}", a["status"], a["alpha"], a["cycle_margins"]));
        if !a["rho"].is_null() {
            lines.push(format!("  spectral radius {}", a["rho"]));
        }
    }
    if let Some(t) = report.get("transform").filter(|v| !v.is_null()) {
        lines.push(format!("  transform: cycles {} recovered alpha {}", t["cycle_status"], t["recovered_alpha"]));
    }
    if let Some(p) = report.get("path").filter(|v| !v.is_null()) {
        let sigma = p["sigma"].to_string();
        let sigma = if sigma.len() <= 120 { sigma } else { "(piecewise, see --json)".to_string() };
        lines.push(format!("  path: ok {} min margin {} sigma {}", p["ok"], p["min_margin"], sigma));
    }
    if let Some(l) = report.get("lyap").filter(|v| !v.is_null() && v.get("skipped").is_none()) {
        for d in l["decrease"].as_array().into_iter().flatten() {
            lines.push(format!(
                "  lyap u={}: {}/{} passed, worst ratio {}, skipped {} gate {} tie",
                d["u_level"], d["passed"], d["gated"], d["worst_ratio"], d["skipped_gate"], d["skipped_tie"]
            ));
        }
    }
    if let Some(s) = report.get("simulate").filter(|v| !v.is_null() && v.get("skipped").is_none()) {
        lines.push(format!("  simulate: endpoint {} growing {} csv {}", s["endpoint"], s["growing"], s["csv"]));
        let e = &s["estimates"];
        if e["applicable"] == json!(true) {
            lines.push(format!("  estimates: gs {} ag {}", e["gs"]["holds"], e["ag"]["holds"]));
        } else {
            lines.push(format!("  estimates: {}", e["notes"]));
        }
    }
    for e in report["errors"].as_array().into_iter().flatten() {
        lines.push(format!(
            "  error in {}: {}",
            e["stage"].as_str().unwrap_or(""),
            e["message"].as_str().unwrap_or("")
        ));
    }
    lines.push(format!("  ok: {}", report["ok"]));
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    const DKW: &str = include_str!("../networks/example_dkw.ganet");
    const SUM_ONLY: &str = include_str!("../networks/example_sum_only.ganet");

    #[test]
    fn analyze_bundled_examples() {
        let spec = ganet::parse(DKW).unwrap();
        let out = run(Command::Analyze, &spec, Path::new("example_dkw.ganet"), &RunOptions::default());
        assert_eq!(out.exit_code, 0, "{}", out.report);
        let a = &out.report["analyze"];
        assert_eq!(a["status"], "Verified");
        assert_eq!(a["alpha"], "0.1*r");
        let m: Vec<f64> = serde_json::from_value(a["cycle_margins"].clone()).unwrap();
        assert!((m[0] - 0.970299).abs() < 1e-9 && (m[1] - 0.9801).abs() < 1e-9);
        assert_eq!(out.report["schema"], 1);

        let spec = ganet::parse(SUM_ONLY).unwrap();
        let out = run(Command::Analyze, &spec, Path::new("example_sum_only.ganet"), &RunOptions::default());
        assert_eq!(out.exit_code, 1);
        assert_eq!(out.report["analyze"]["status"], "Falsified");
        assert!((out.report["analyze"]["rho"].as_f64().unwrap() - 1.1922).abs() < 1e-3);
        assert!(!out.report["analyze"]["certificate"]["witness"].is_null());
    }

    #[test]
    fn path_failure_is_reported() {
        let spec = ganet::parse(SUM_ONLY).unwrap();
        let opts = RunOptions { alpha: Some(ScalarFn::linear(0.1).unwrap()), ..Default::default() };
        let out = run(Command::Path, &spec, Path::new("s.ganet"), &opts);
        assert_eq!(out.exit_code, 1);
        assert_eq!(out.report["errors"][0]["stage"], "path");
    }

    #[test]
    fn transform_on_example() {
        let spec = ganet::parse(DKW).unwrap();
        let out = run(Command::Transform, &spec, Path::new("example_dkw.ganet"), &RunOptions::default());
        assert_eq!(out.exit_code, 0, "{}", out.report);
        assert_eq!(out.report["transform"]["cycle_status"], "Verified");
    }
}

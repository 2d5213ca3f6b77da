use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use iss_smallgain::dynamics::InputSignal;
use iss_smallgain::ganet;
use iss_smallgain::report::{run, summary, Command, RunOptions};
use iss_smallgain::{GridSpec, ScalarFn};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Analyze,
    Transform,
    Path,
    Lyap,
    Simulate,
    Report,
}

/// Small-gain analysis of networks with mixed sum and max gain aggregation.
#[derive(Debug, Parser)]
#[command(name = "iss-smallgain", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Network description (`.ganet`).
    spec: PathBuf,
    /// Robustness margin, e.g. "0.1*r"; overrides the sweep.
    #[arg(long, value_parser = parse_alpha)]
    alpha: Option<ScalarFn>,
    /// Radius grid `rmin,rmax,points`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<GridSpec>,
    /// Input signal `const:<v>` or `step:<v>@<t>`.
    #[arg(long = "u", value_parser = parse_input)]
    input: Option<InputSignal>,
    /// Simulation horizon.
    #[arg(long = "T", default_value_t = 60.0)]
    horizon: f64,
    /// Integration step.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Directory for CSV and JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
    /// Gated samples per input level for `lyap`.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

fn parse_alpha(s: &str) -> Result<ScalarFn, String> {
    let f: ScalarFn = s.parse().map_err(|e| format!("{e}"))?;
    if f.class() != iss_smallgain::FnClass::KInf {
        return Err("alpha must be class K-infinity".into());
    }
    Ok(f)
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected rmin,rmax,points".into());
    }
    let lo = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
    let hi = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
    let n = parts[2].parse::<usize>().map_err(|e| e.to_string())?;
    GridSpec::new(lo, hi, n).map_err(|e| e.to_string())
}

fn parse_input(s: &str) -> Result<InputSignal, String> {
    s.parse().map_err(|e: iss_smallgain::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.spec) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", cli.spec.display());
            return ExitCode::from(2);
        }
    };
    let spec = match ganet::parse(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}:{e}", cli.spec.display());
            return ExitCode::from(2);
        }
    };
    let seed = match std::env::var("ISS_SG_SEED") {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(s) => Some(s),
            Err(_) => {
                eprintln!("ISS_SG_SEED must be an unsigned integer, got {v:?}");
                return ExitCode::from(2);
            }
        },
        Err(_) => None,
    };
    let command = match cli.command {
        Cmd::Analyze => Command::Analyze,
        Cmd::Transform => Command::Transform,
        Cmd::Path => Command::Path,
        Cmd::Lyap => Command::Lyap,
        Cmd::Simulate => Command::Simulate,
        Cmd::Report => Command::Report,
    };
    let opts = RunOptions {
        alpha: cli.alpha,
        grid: cli.grid,
        input: cli.input,
        horizon: cli.horizon,
        dt: cli.dt,
        out: cli.out.clone(),
        seed,
        samples: cli.samples,
    };
    let outcome = run(command, &spec, &cli.spec, &opts);
    if let Some(dir) = &cli.out {
        let file = dir.join(format!("{}.json", command.name()));
        if let Err(e) =
            std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&file, format!("{:#}\n", outcome.report)))
        {
            eprintln!("{}: {e}", file.display());
            return ExitCode::from(2);
        }
    }
    if cli.json {
        println!("{:#}", outcome.report);
    } else {
        println!("{}", summary(&outcome.report));
    }
    ExitCode::from(outcome.exit_code as u8)
}

use std::path::Path;

use iss_smallgain::ganet;
use iss_smallgain::path::{build_path, validate_path, PathConfig};
use iss_smallgain::report::{run, Command, RunOptions};
use iss_smallgain::ScalarFn;

const CASCADE: &str = include_str!("../networks/nonlinear_cascade.ganet");

#[test]
fn reducible_nonlinear_path_is_assembled_blockwise() {
    let spec = ganet::parse(CASCADE).unwrap();
    let grid = spec.analysis.as_ref().unwrap().config().grid;
    let alpha = ScalarFn::linear(0.5).unwrap();
    let path = build_path(&spec.network, &alpha, &PathConfig { grid, ..PathConfig::default() }).unwrap();
    let v = validate_path(&spec.network, &alpha, &path, &grid).unwrap();
    assert!(v.ok && v.min_margin > 0.0, "{v:?}");
    for r in [0.01, 1.0, 100.0] {
        assert!(path.eval(r).unwrap().iter().all(|&s| s > 1e-6 * r));
    }
}

#[test]
fn full_report_passes() {
    let spec = ganet::parse(CASCADE).unwrap();
    let out = std::env::temp_dir().join(format!("iss-smallgain-cascade-{}", std::process::id()));
    let opts = RunOptions { out: Some(out.clone()), samples: 2_000, ..RunOptions::default() };
    let outcome = run(Command::Report, &spec, Path::new("nonlinear_cascade.ganet"), &opts);
    assert_eq!(outcome.exit_code, 0, "{:#}", outcome.report["errors"]);
    assert_eq!(outcome.report["transform"]["cycle_status"], "Verified");
    assert!(out.join("nonlinear_cascade_trajectory.csv").exists());
    std::fs::remove_dir_all(&out).unwrap();
}

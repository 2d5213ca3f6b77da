use std::path::PathBuf;
use std::process::Command;

fn networks() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/networks")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_iss-smallgain")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn exit_codes_follow_the_verdict() {
    let dkw = networks().join("example_dkw.ganet");
    let (code, stdout, _) = run(&["analyze", dkw.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("Verified"));

    let sum_only = networks().join("example_sum_only.ganet");
    let (code, stdout, _) = run(&["analyze", sum_only.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.contains("Falsified"));

    let bad = networks().join("malformed/self_gain.ganet");
    let (code, _, stderr) = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("6:6: diagonal gain must be absent"), "{stderr}");
}

#[test]
fn json_report_is_written_to_out() {
    let out = std::env::temp_dir().join(format!("iss-smallgain-cli-{}", std::process::id()));
    let dkw = networks().join("example_dkw.ganet");
    let (code, stdout, _) = run(&["transform", dkw.to_str().unwrap(), "--json", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let written = std::fs::read_to_string(out.join("transform.json")).unwrap();
    assert_eq!(written.trim_end(), stdout.trim_end());
    assert!(written.contains("\"schema\": 1"));
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn bad_arguments_are_rejected() {
    let dkw = networks().join("example_dkw.ganet");
    let (code, _, _) = run(&["analyze", dkw.to_str().unwrap(), "--grid", "1,0.1,5"]);
    assert_ne!(code, 0);
    let (code, _, _) = run(&["analyze", dkw.to_str().unwrap(), "--alpha", "0"]);
    assert_ne!(code, 0);
}

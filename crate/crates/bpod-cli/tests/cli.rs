use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bpod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpod")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("bpod-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

const TINY: &[&str] = &[
    "--n", "16", "--re", "500", "--count", "60", "--dt", "0.01", "--decay-threshold", "1e-2",
    "--pod-rank", "10", "--output-ranks", "2,4", "--model-ranks", "1..4",
    "--set", "input.optimal_t_max=20", "--set", "evaluation.omega_count=40", "--quiet",
];

fn tiny_run(dir: &Path) -> Output {
    let mut args = vec!["pipeline", "--workdir", dir.to_str().unwrap()];
    args.extend_from_slice(TINY);
    bpod(&args)
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bpod(&["frobnicate"]).status.code(), Some(2));
    let d = scratch("usage");
    let w = d.to_str().unwrap();
    let out = bpod(&["build", "--workdir", w, "--set", "case.nonsense=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nonsense"));
    assert_eq!(bpod(&["build", "--workdir", w, "--re", "-5"]).status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&d);
}

#[test]
fn numerical_failure_exits_1_with_stage_name() {
    let d = scratch("unstable");
    // (1.02, 0) at Re 8000 is linearly unstable: no optimal perturbation
    let out = bpod(&["build", "--workdir", d.to_str().unwrap(), "--n", "32", "--alpha", "1.02", "--beta", "0", "--re", "8000", "--quiet"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("build"), "{err}");
    let manifest = std::fs::read_to_string(d.join("manifest.txt")).unwrap();
    assert!(manifest.contains("stage.build: failed"));
    let _ = std::fs::remove_dir_all(&d);
}

#[test]
fn pipeline_rerun_and_verify() {
    let d = scratch("run");
    let out = tiny_run(&d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let again = tiny_run(&d);
    assert!(String::from_utf8_lossy(&again.stdout).matches("up to date").count() == 7);

    // a tiny case does not meet the reference criteria, but verify must
    // still report every one of them
    let v = bpod(&["verify", "--workdir", d.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&v.stdout);
    for id in [1, 2, 3, 4, 5, 6, 8, 9] {
        assert!(text.contains(&format!("criterion {id:>2}")), "{text}");
    }
    assert!(matches!(v.status.code(), Some(0 | 1)));

    let p = d.join("modes/pod.bpr");
    let mut bytes = std::fs::read(&p).unwrap();
    let k = bytes.len() / 2;
    bytes[k] ^= 0x40;
    std::fs::write(&p, bytes).unwrap();
    let v = bpod(&["verify", "--workdir", d.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&v.stderr).contains("pod.bpr"));

    std::fs::remove_file(d.join("reports/error_norms.csv")).unwrap();
    std::fs::remove_file(&p).unwrap();
    let v = bpod(&["verify", "--workdir", d.to_str().unwrap()]);
    let err = String::from_utf8_lossy(&v.stderr);
    assert!(err.contains("pod.bpr") && err.contains("error_norms.csv"), "{err}");
    let _ = std::fs::remove_dir_all(&d);
}

#[test]
fn defaults_parse_back() {
    let out = bpod(&["defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[tolerances]") && text.contains("output_projection_ranks = 4,8"));
}

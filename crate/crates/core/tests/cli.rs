use std::fs;
use std::path::Path;

use eh_aoi::harness::cli::run_cli;
use eh_aoi::harness::HarnessError;
use eh_aoi::SolveError;
use tempfile::TempDir;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn run(args: &[&str]) -> i32 {
    run_cli(std::iter::once("eh-aoi").chain(args.iter().copied()))
}

const SMALL: &str = "e_max = 2\nd_max0 = 4\nd_max1 = 4\n";

#[test]
fn solve_writes_per_state_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "solve.toml", SMALL);
    let out = dir.path().join("solve.csv");
    assert_eq!(run(&["solve", "-c", &cfg, "-o", out.to_str().unwrap()]), 0);
    let text = fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "index,z,zd,e,d0,d1,value,action");
    assert_eq!(lines.count(), 2 * 2 * 3 * 5 * 5);
}

#[test]
fn solve_on_reference_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "empty.toml", "");
    assert_eq!(run(&["solve", "--config", &cfg]), 0);
}

#[test]
fn malformed_probability_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.toml", "ps = 1.3\nsweep.pe = [0.5]\n");
    let out = dir.path().join("never.csv");
    assert_eq!(run(&["sweep", "-c", &cfg, "-o", out.to_str().unwrap()]), 1);
    assert!(!out.exists());

    let err = eh_aoi::harness::ExperimentConfig::parse("ps = 1.3").unwrap_err();
    assert!(err.to_string().contains("`ps`"));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    assert_eq!(run(&["solve", "-c", &cfg, "--bogus"]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(run(&["solve", "-c", "/nonexistent/config.toml"]), 1);
    let unknown = write(dir.path(), "unknown.toml", "colour = 3\n");
    assert_eq!(run(&["solve", "-c", &unknown]), 1);
    let swept = write(dir.path(), "swept.toml", "sweep.pe = [0.1, 0.2]\n");
    assert_eq!(run(&["solve", "-c", &swept]), 1);
    assert_eq!(run(&["policy-grid", "-c", &cfg, "-z", "2"]), 1);
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn non_convergence_maps_to_exit_two() {
    let err = HarnessError::Solve(SolveError::NotConverged {
        iterations: 10,
        residual: 1.0,
    });
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "sim.toml",
        &format!("{SMALL}episodes = 300\nhorizon = 200\nseed = 11\n"),
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(run(&["simulate", "-c", &cfg, "-o", a.to_str().unwrap()]), 0);
    assert_eq!(run(&["simulate", "-c", &cfg, "-o", b.to_str().unwrap()]), 0);
    let first = fs::read(&a).unwrap();
    assert_eq!(first, fs::read(&b).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("estimate,stderr,episodes,horizon\n"));
    assert!(text.lines().nth(1).unwrap().ends_with(",300,200"));
}

#[test]
fn sweep_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.toml",
        &format!("{SMALL}sweep.pe = [0.3, 0.6]\nsweep.ps = [0.5, 0.9]\n"),
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(run(&["sweep", "-c", &cfg, "-o", a.to_str().unwrap()]), 0);
    assert_eq!(run(&["sweep", "-c", &cfg, "-o", b.to_str().unwrap()]), 0);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "pe,ps,j_star_s0,iterations,residual_bound");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0.3,0.5,"));
    assert!(lines[4].starts_with("0.6,0.9,"));
}

#[test]
fn policy_grid_matrix() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "grid.toml", SMALL);
    let out = dir.path().join("grid.csv");
    assert_eq!(
        run(&[
            "policy-grid",
            "-c",
            &cfg,
            "-z",
            "1",
            "-o",
            out.to_str().unwrap()
        ]),
        0
    );
    let text = fs::read_to_string(out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert!(lines[0].starts_with("# z=1 zd=1 d0=0"));
    assert_eq!(lines[1], "e,d1=1,d1=2,d1=3,d1=4");
    assert_eq!(lines[2], "0,0,0,0,0");
    assert_eq!(lines.len(), 2 + 3);
}

#[test]
fn trace_replays_event_log() {
    let dir = TempDir::new().unwrap();
    let log = write(
        dir.path(),
        "log.toml",
        r#"
initial_state = 0
changes = [5]
horizon = 9
d_max0 = 10
d_max1 = 10

[[updates]]
generation = 0
delivery = 0
state = 0

[[updates]]
generation = 7
delivery = 8
state = 1
"#,
    );
    let out = dir.path().join("trace.csv");
    assert_eq!(run(&["trace", "-c", &log, "-o", out.to_str().unwrap()]), 0);
    let text = fs::read_to_string(out).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "k,d0,d1");
    assert_eq!(lines[7], "6,6,1");
    assert_eq!(lines[9], "8,0,1");

    let bad = write(
        dir.path(),
        "bad.toml",
        "initial_state = 0\nhorizon = 3\nd_max0 = 5\nd_max1 = 5\n[[updates]]\ngeneration = 2\ndelivery = 1\nstate = 0\n",
    );
    assert_eq!(run(&["trace", "-c", &bad]), 1);
}

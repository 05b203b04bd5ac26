use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lpgronwall::cli::RunConfig;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lpgronwall"));
    c.env_remove("LPGRONWALL_OUT_DIR");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// `∫_s^t ∫_σ^t c^3 dρ dσ` by nested Simpson.
fn nested_oracle(c: f64, t: f64, s: f64) -> f64 {
    let simpson = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| {
        let n = 64;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    };
    simpson(s, t, &|sig| simpson(sig, t, &|_| c * c * c))
}

#[test]
fn ml_prints_e() {
    let o = run(&["ml", "--alpha", "1", "--beta", "1", "--p", "1", "--z", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "alpha,beta,p,z,value,tail_bound,terms_used,converged");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let value: f64 = row[4].parse().unwrap();
    let tail: f64 = row[5].parse().unwrap();
    assert!(row[4].starts_with("2.718281828"));
    assert!(value <= std::f64::consts::E && std::f64::consts::E <= value + tail);
}

#[test]
fn resolvent_layers_match_oracle() {
    let cfg = configs().join("const_kernel.json");
    let o = run(&["resolvent", "--config", cfg.to_str().unwrap(), "--n", "3", "--grid-level", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("n,t,s,value\n"));
    let mut checked = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[0] != "3" {
            continue;
        }
        let (t, s, v): (f64, f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap());
        let exact = 1.5f64.powi(3) * (t - s).powi(2) / 2.0;
        assert!((v - exact).abs() <= 1e-10 * exact.max(1.0));
        assert!((v - nested_oracle(1.5, t, s)).abs() <= 1e-10);
        checked += 1;
    }
    assert_eq!(checked, 45);
}

#[test]
fn every_example_config_runs() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let sub = if name.contains("gronwall") { "gronwall" } else { "resolvent" };
        let o = run(&[sub, "--config", path.to_str().unwrap(), "--grid-level", "2"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let header = if sub == "gronwall" { "t,sharp,sup,tail" } else { "n,t,s,value" };
        assert_eq!(stdout(&o).lines().next(), Some(header), "{name}");
    }
}

#[test]
fn gronwall_config_gives_exponential() {
    let cfg = configs().join("gronwall_constant.json");
    let o = run(&["gronwall", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] - f[0].exp()).abs() < 1e-9 && (f[2] - f[0].exp()).abs() < 1e-9);
    }
}

#[test]
fn solve_emits_certified_table() {
    let o = run(&["solve", "--problem", "linear_volterra", "--lambda", "2", "--tol", "1e-6", "--grid-level", "8"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("n,t,measured_error_vs_reference,certified_bound\n"));
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[2] <= f[3] + 1e-5);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["resolvent", "--config", "/nonexistent/k.json"]).status.code(), Some(1));
    assert_eq!(run(&["ml", "--alpha", "1", "--beta", "1", "--z", "1", "--tol", "-1"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--grid-level", "0"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    // too few iterations for a certified answer
    assert_eq!(run(&["solve", "--max-iter", "2"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"kernel\": 3 }").unwrap();
    let o = run(&["resolvent", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed config"));

    // q = 1: the Fredholm series diverges
    let div = dir.path().join("div.json");
    std::fs::write(
        &div,
        r#"{ "v0": {"const": 1.0}, "k": {"family": "void", "k1": {"const": 2.0}},
             "space": {"domain": {"type": "void"}, "measure": {"type": "discrete", "atoms": [{"point": 0.0, "mass": 0.5}]}},
             "p": 1.0 }"#,
    )
    .unwrap();
    assert_eq!(run(&["gronwall", "--config", div.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let cfg = configs().join("separable_kernel.json");
    let args = ["resolvent", "--config", cfg.to_str().unwrap(), "--n", "2", "--grid-level", "2"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["solve", "--problem", "abel", "--grid-level", "5", "--tol", "1e-4"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn out_flag_and_env_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/ml.json");
    let o = run(&["ml", "--alpha", "1", "--beta", "1", "--z", "1", "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((v["value"].as_f64().unwrap() - std::f64::consts::E).abs() < 1e-9);

    let o = bin()
        .args(["ml", "--alpha", "2", "--beta", "1", "--z", "1"])
        .env("LPGRONWALL_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("ml.csv")).unwrap();
    assert!(text.starts_with("alpha,"));
}

#[test]
fn dumped_config_round_trips() {
    let o = run(&["--dump-config", "solve", "--problem", "banach", "--tol", "1e-9", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let cfg: RunConfig = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cfg.tol, 1e-9);
    assert_eq!(cfg.seed, 42);
    let again: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 12);
}

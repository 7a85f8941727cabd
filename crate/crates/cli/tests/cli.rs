use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tamelocal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const A: [&str; 10] = ["--p", "3", "--e", "2", "--f", "1", "--m", "0", "--r", "4"];

fn with(cmd: &[&str], extra: &[&str]) -> Vec<String> {
    cmd.iter()
        .chain(A.iter())
        .chain(extra.iter())
        .map(ToString::to_string)
        .collect()
}

fn run_v(args: &[String]) -> Output {
    let a: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&a)
}

#[test]
fn formal_degree_instance_a() {
    let o = run_v(&with(&["verify", "formal-degree"], &["--format", "pretty"]));
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("formal_degree [assembly]: 18 = 18"), "{out}");
    assert!(out.contains("formal_degree [closed_form]: 18 = 18"));
}

#[test]
fn root_number_predicted_failure_exits_zero() {
    let o = run(&[
        "verify",
        "root-number",
        "--p",
        "5",
        "--e",
        "4",
        "--f",
        "1",
        "--m",
        "0",
        "--r",
        "4",
        "--theta-index",
        "0",
        "--format",
        "pretty",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("predicted failure"), "{out}");
    assert!(out.contains("w/theta(-1) = -1"));
}

#[test]
fn configuration_errors_exit_two() {
    assert_eq!(
        run(&["tower", "describe", "--p", "3", "--e", "4", "--f", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["tower", "describe", "--p", "3", "--e", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run_v(&with(&["verify", "root-number"], &["--cocycle", "bogus"]))
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run_v(&with(&["verify", "root-number"], &["--theta-index", "18"]))
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run_v(&with(&["verify", "root-number"], &["--jobs", "0"]))
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["verify", "nothing"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn identical_invocations_give_identical_json() {
    let args = with(
        &["verify", "decomposition"],
        &[
            "--cocycle",
            "random",
            "--seed",
            "3",
            "--theta-index",
            "2",
            "--jobs",
            "2",
        ],
    );
    let a = run_v(&args);
    let b = run_v(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let rep = &v["reports"][0];
    assert_eq!(rep["instance"]["theta_index"], 2);
    assert_eq!(rep["status"], "as_expected");
    for c in rep["checks"].as_array().unwrap() {
        for key in ["name", "lhs", "rhs", "equal", "expected", "route"] {
            assert!(c.get(key).is_some());
        }
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# instance A\np=3\ne=2\nf=1\ntheta-index=0\nformat=csv\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let csv = run(&["verify", "root-number", "--config", c]);
    assert_eq!(csv.status.code(), Some(0));
    assert!(stdout(&csv).starts_with("p,f0,e,f,m,r,theta_index"));
    let json = run(&["verify", "root-number", "--config", c, "--format", "json"]);
    assert!(stdout(&json).trim_start().starts_with('{'));
    std::fs::write(&cfg, "p=3\nwhatever=1\n").unwrap();
    assert_eq!(
        run(&["tower", "describe", "--config", c]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["tower", "describe", "--config", "/nonexistent/x.conf"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn cache_dir_reuses_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = with(
        &["verify", "formal-degree"],
        &["--theta-index", "1", "--cache-dir", cache.to_str().unwrap()],
    );
    let a = run_v(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
    let b = run_v(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn listing_and_factors() {
    let o = run_v(&with(&["chars", "list"], &[]));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 18);
    let o = run_v(&with(&["factors", "adjoint"], &["--theta-index", "0"]));
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rep = &v[0]["report"];
    assert_eq!(rep["a"], 8);
    assert_eq!(rep["L"], "1");
    assert!(rep["closed_form_match"]
        .as_object()
        .unwrap()
        .values()
        .all(|b| b == true));
}

#[test]
fn small_sweep() {
    let o = run(&["sweep", "--primes", "3", "--n-values", "1", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["all_as_expected"], true);
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
    let empty = run(&["sweep", "--primes", "3", "--n-values", ""]);
    assert_eq!(empty.status.code(), Some(0));
}

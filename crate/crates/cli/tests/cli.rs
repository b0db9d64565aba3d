use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn aftgl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aftgl")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small simulated dataset written by `simulate --dry-run`.
fn dataset(dir: &Path) -> (PathBuf, PathBuf) {
    let spec = dir.join("spec.cfg");
    std::fs::write(&spec, "n = 60\np = 8\nblocks = 1\nblock_size = 5\nbeta_star = 1,1,1,1,1\nseed = 3\n").unwrap();
    let out = dir.join("sim");
    let o = aftgl(&["simulate", "--spec", s(&spec), "--out", s(&out), "--dry-run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    (out.join("data.csv"), out.join("groups.csv"))
}

fn read(p: PathBuf) -> Vec<u8> {
    std::fs::read(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn fit_select_summarize_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, groups) = dataset(tmp.path());
    let run1 = tmp.path().join("run1");
    let run2 = tmp.path().join("run2");
    for run in [&run1, &run2] {
        let o = aftgl(&[
            "fit", "--data", s(&data), "--groups", s(&groups), "--out", s(run), "--iters", "300", "--chains", "2", "--seed", "7",
            "--mcem-interval", "50",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["chain_1.csv", "chain_2.csv", "manifest.json", "summary.csv", "diagnostics.csv"] {
        assert_eq!(read(run1.join(f)), read(run2.join(f)), "{f} differs");
    }
    let header = String::from_utf8(read(run1.join("chain_1.csv"))).unwrap();
    assert!(header.starts_with("x_1,x_2,x_3,x_4,x_5,x_6,x_7,x_8,z_1,mu,sigma2,tau2_block_1,tau2_x_6,tau2_x_7,tau2_x_8,lambda2\n"));

    let o = aftgl(&["select", "--dir", s(&run1), "--grid", "200"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = (read(run1.join("candidates.csv")), read(run1.join("final_model.json")));
    let o = aftgl(&["select", "--dir", s(&run1), "--grid", "200"]);
    assert!(o.status.success());
    assert_eq!(first, (read(run1.join("candidates.csv")), read(run1.join("final_model.json"))));

    let prof = tmp.path().join("profiles.csv");
    std::fs::write(&prof, "profile,x_1,z_1\nzero,0,0\nhigh,1,0.5\n").unwrap();
    let o = aftgl(&["summarize", "--dir", s(&run1), "--profiles", s(&prof)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let q = String::from_utf8(read(run1.join("quantiles.csv"))).unwrap();
    let times = |name: &str| -> Vec<String> {
        q.lines().filter(|l| l.starts_with(&format!("{name},"))).map(|l| l.split(',').nth(2).unwrap().to_string()).collect()
    };
    assert_eq!(times("baseline"), times("zero"));
    assert_eq!(times("baseline").len(), 9);
    assert!(!read(run1.join("acceleration_factors.csv")).is_empty());
}

#[test]
fn ordinary_prior_uses_singletons() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, groups) = dataset(tmp.path());
    let out = tmp.path().join("ol");
    let o = aftgl(&["fit", "--data", s(&data), "--groups", s(&groups), "--out", s(&out), "--iters", "100", "--prior", "ordinary"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&read(out.join("manifest.json"))).unwrap();
    assert_eq!(m["groups"].as_array().unwrap().len(), 8);
    assert_eq!(m["prior_kind"], "ordinary");
}

#[test]
fn missing_group_file_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, _) = dataset(tmp.path());
    let missing = tmp.path().join("nope.csv");
    let o = aftgl(&["fit", "--data", s(&data), "--groups", s(&missing), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"), "{}", stderr(&o));
}

#[test]
fn bad_flag_is_usage_error() {
    assert_eq!(aftgl(&["fit", "--bogus"]).status.code(), Some(2));
}

#[test]
fn select_needs_two_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let (data, groups) = dataset(tmp.path());
    let out = tmp.path().join("tiny");
    let o = aftgl(&[
        "fit", "--data", s(&data), "--groups", s(&groups), "--out", s(&out), "--iters", "2", "--chains", "1", "--burn-frac", "0.5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = aftgl(&["select", "--dir", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("retained draws"), "{}", stderr(&o));
}

#[test]
fn invalid_scenario_lists_valid_ids() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("bad.cfg");
    std::fs::write(&spec, "scenario = 5\n").unwrap();
    let o = aftgl(&["simulate", "--spec", s(&spec), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1, 2, 3, 4"), "{}", stderr(&o));
}

#[test]
fn simulate_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("s.cfg");
    std::fs::write(&spec, "n = 60\np = 22\nreps = 2\niters = 120\nmcem_interval = 20\ngrid = 100\nseed = 5\n").unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (out, w) in [(&a, "1"), (&b, "2")] {
        let o = aftgl(&["simulate", "--spec", s(&spec), "--out", s(out), "--workers", w]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["replications.csv", "aggregate.csv", "study.json"] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f} differs");
    }
}

#[test]
fn gradcheck_passes_and_detects_sign_flip() {
    let a = aftgl(&["gradcheck", "--states", "5", "--seed", "1"]);
    let b = aftgl(&["gradcheck", "--states", "5", "--seed", "1"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let bad = aftgl(&["gradcheck", "--states", "5", "--inject-sign-flip"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("gradient check failed"));
}

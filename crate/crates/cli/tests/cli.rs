use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn albnr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_albnr"))
        .args(args)
        .current_dir(dir)
        .env_remove("ALBNR_SEED")
        .output()
        .expect("failed to start albnr")
}

const SMALL: &str = r#"
name = "small"

[dgp]
id = "synthetic1"
pool_n = 400
holdout_n = 300

[mechanism]
kind = ["mcar", "mar"]

[engine]
steps = 4
runs = 3

[outputs]
dir = "out"
query_log = true
"#;

#[test]
fn print_config_shows_protocol_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = albnr(&["print-config"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["steps = 50", "batch = 10", "quantile = 0.95", "seed_examples = 2", "holdout_n = 1000"] {
        assert!(text.contains(key), "missing `{key}`");
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(albnr(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(albnr(&["simulate", "--no-such-flag"], dir.path()).status.code(), Some(1));
    fs::write(dir.path().join("bad.cfg"), "[engine]\nsteps = 5\nbogus = true\n").unwrap();
    assert_eq!(albnr(&["--config", "bad.cfg", "simulate"], dir.path()).status.code(), Some(1));
    assert_eq!(albnr(&["--config", "missing.cfg", "simulate"], dir.path()).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = albnr(&["replay", "--pool", "nope.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    fs::write(dir.path().join("pool.csv"), "x0,x1,label,response\n1,2,1,1\n1,x,0,1\n").unwrap();
    let out = albnr(&["replay", "--pool", "pool.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

#[test]
fn simulate_writes_identical_csvs_for_identical_seeds() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.cfg"), SMALL).unwrap();
    let run = |out: &str, seed: &str| {
        let o = albnr(&["--config", "small.cfg", "--seed", seed, "--out", out, "simulate"], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let read = |f: &str| fs::read(dir.path().join(out).join(f)).unwrap();
        (read("small_curves.csv"), read("small_aggregate.csv"), read("small_queries_synthetic1_mar_uncertainty_none.csv"))
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    assert_eq!(a, b);
    assert_ne!(a.0, c.0);

    let curves = String::from_utf8(a.0).unwrap();
    let mut lines = curves.lines();
    assert_eq!(lines.next(), Some("experiment,mechanism,strategy,correction,run,step,auc,train_size"));
    // 2 arms x 3 runs x 4 steps
    assert_eq!(lines.count(), 24);
    let aggregate = String::from_utf8(a.1).unwrap();
    assert!(aggregate.starts_with("experiment,step,mean_auc,lo95,hi95,runs\n"));
    assert_eq!(aggregate.lines().count(), 1 + 2 * 4);
    let queries = String::from_utf8(a.2).unwrap();
    assert!(queries.starts_with("run,step,pool_index,x0,x1,responded,informativeness,response_q\n"));
}

#[test]
fn runs_flag_and_env_seed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.cfg"), SMALL).unwrap();
    let o = albnr(&["--config", "small.cfg", "--runs", "2", "--out", "r", "simulate"], dir.path());
    assert!(o.status.success());
    let agg = fs::read_to_string(dir.path().join("r/small_aggregate.csv")).unwrap();
    assert!(agg.lines().skip(1).all(|l| l.ends_with(",2")));

    let with_env = |seed: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_albnr"))
            .args(["--config", "small.cfg", "--out", out, "simulate"])
            .current_dir(dir.path())
            .env("ALBNR_SEED", seed)
            .output()
            .unwrap();
        assert!(o.status.success());
        fs::read(dir.path().join(out).join("small_curves.csv")).unwrap()
    };
    let flag = albnr(&["--config", "small.cfg", "--seed", "11", "--out", "f", "simulate"], dir.path());
    assert!(flag.status.success());
    assert_eq!(with_env("11", "e"), fs::read(dir.path().join("f/small_curves.csv")).unwrap());
}

#[test]
fn replay_from_emitted_pool_with_replace_policy() {
    let dir = tempfile::tempdir().unwrap();
    let o = albnr(&["emit-dgp", "--dgp", "synthetic2", "--n", "3000", "--replay-pool", "--output", "pool.csv"], dir.path());
    assert!(o.status.success());
    fs::write(
        dir.path().join("replay.cfg"),
        "name = \"rp\"\n[replay]\nholdout_n = 100\nseed_examples = 10\nsteps = 3\nbatch = 40\noracle_auc = [1.0]\nruns = 2\n",
    )
    .unwrap();
    let o = albnr(
        &["--config", "replay.cfg", "--out", "o", "replay", "--pool", "pool.csv", "--policy", "replace"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curves = fs::read_to_string(dir.path().join("o/rp_curves.csv")).unwrap();
    assert!(curves.lines().nth(1).unwrap().starts_with("replay/replace/qbc/ucb_eu/oracle_auc=1,replay,qbc,ucb_eu,"));
}

#[test]
fn boundary_and_emit_dgp() {
    let dir = tempfile::tempdir().unwrap();
    let o = albnr(&["--out", ".", "boundary"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("experiment_boundary.csv")).unwrap();
    assert!(text.starts_with("fraction,threshold,w0,w1,bias,auc,single_class\n"));
    assert_eq!(text.lines().count(), 5);

    let o = albnr(&["emit-dgp", "--dgp", "mar1", "--n", "5"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("x0,x1,x2,x3,x4,label\n"));
    assert_eq!(text.lines().count(), 6);
    assert_eq!(albnr(&["emit-dgp", "--dgp", "synthetic9"], dir.path()).status.code(), Some(1));
}

#[test]
fn bundled_configs_parse() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        let o = albnr(&["--config", path.to_str().unwrap(), "print-config"], dir.path());
        assert!(o.status.success(), "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 6);
}

use std::path::Path;
use std::process::{Command, Output};

fn oarl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oarl"))
        .args(args)
        .env_remove("OARL_STEPS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &[&str] = &[
    "--override",
    "eval_period=100",
    "--override",
    "eval_episodes=2",
    "--override",
    "start_steps=50",
    "--override",
    "update_after=50",
    "--override",
    "batch_size=8",
    "--override",
    "buffer_size=1000",
    "--override",
    "mlp_hidden=[8, 8]",
    "--override",
    "recurrent_width=8",
];

fn train(out: &Path, env: &str, agent: &str, seeds: &str) -> Output {
    let out = out.to_str().unwrap();
    let mut args = vec![
        "train", "--env", env, "--mode", "rv", "--agent", agent, "--steps", "200", "--seeds", seeds, "--out", out,
    ];
    args.extend_from_slice(SMALL);
    oarl(&args)
}

#[test]
fn train_report_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = train(&run, "simple-oa", "lstm-td3", "1,2");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).matches("completed").count(), 2);
    for seed in ["seed_1", "seed_2"] {
        let eval = std::fs::read_to_string(run.join(seed).join("eval.csv")).unwrap();
        let mut lines = eval.lines();
        assert_eq!(lines.next(), Some("step,seed,ep_return_1,ep_return_2,mean_return"));
        assert_eq!(lines.count(), 2);
    }
    assert!(run.join("manifest.json").is_file());
    assert!(run.join("config.toml").is_file());

    let report = dir.path().join("report");
    let o = oarl(&[
        "report",
        "--runs",
        run.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("2 eval points over 2 seed(s)"));
    assert!(report.join("aggregate.csv").is_file());
    assert!(report.join("learning_curve.svg").is_file());

    let ck = run.join("seed_1").join("checkpoint.json");
    let o = oarl(&[
        "evaluate",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--episodes",
        "3",
        "--seed",
        "9",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("mean return over 3 episodes"));
    let again = oarl(&[
        "evaluate",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--episodes",
        "3",
        "--seed",
        "9",
    ]);
    assert_eq!(stdout(&o), stdout(&again));
}

#[test]
fn complex_oa_trace_has_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = train(&run, "complex-oa", "td3", "4");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = dir.path().join("trace.csv");
    let ck = run.join("seed_4").join("checkpoint.json");
    let o = oarl(&[
        "evaluate",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--episodes",
        "1",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(trace).unwrap().lines().count();
    assert_eq!(rows, 1 + 500, "header plus one row per step");
}

#[test]
fn invalid_configuration_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    for bad in [
        vec!["train", "--out", out, "--override", "no_such_key=1"],
        vec!["train", "--out", out, "--seeds", "1,1"],
        vec!["train", "--out", out, "--override", "tau=2"],
        vec!["train", "--out", out, "--env", "pendulum"],
    ] {
        let o = oarl(&bad);
        assert!(!o.status.success(), "{bad:?} should fail");
    }
    assert!(!Path::new(out).exists());
}

#[test]
fn report_refuses_mismatched_grids() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(train(&a, "simple-oa", "td3", "1").status.success());
    let mut args = vec![
        "train",
        "--env",
        "simple-oa",
        "--agent",
        "td3",
        "--steps",
        "300",
        "--seeds",
        "1",
    ];
    let b_str = b.to_str().unwrap().to_string();
    args.extend_from_slice(&["--out", &b_str]);
    args.extend_from_slice(SMALL);
    assert!(oarl(&args).status.success());
    let out = dir.path().join("r");
    let o = oarl(&[
        "report",
        "--runs",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}

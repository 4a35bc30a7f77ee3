use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lendrisk")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_config() -> String {
    workspace().join("configs/run.toml").display().to_string()
}

#[test]
fn synth_then_phase1_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();
    let data = format!("{d}/data");
    let o = run(&["synth", "--seed", "3", "--applications", "4000", "--out", &data]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("accepted and"));

    let acc = format!("{data}/accepted.csv");
    let rej = format!("{data}/rejected.csv");
    let out = format!("{d}/out");
    let common = ["--config", &run_config(), "--accepted", &acc, "--rejected", &rej, "--out", &out];

    let o = run(&[&["ingest-check"], &common[..]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("accepted.rows_read"), "{text}");
    assert!(text.contains("phase2.rows"), "{text}");

    let o = run(&[&["phase1"], &common[..], &["--max-epochs", "5", "--penalties", "l1,l2"]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let grid = fs::read_to_string(format!("{out}/phase1/grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 23);
    let mut reader = csv::Reader::from_path(format!("{out}/phase1/grid.csv")).unwrap();
    let col = reader.headers().unwrap().iter().position(|h| h == "epochs_run").unwrap();
    let epochs: Vec<usize> = reader.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert!(epochs.iter().all(|&e| (1..=5).contains(&e)), "{epochs:?}");
    assert!(grid.lines().skip(1).any(|l| l.contains(",l1,")) && grid.lines().skip(1).any(|l| l.contains(",l2,")));

    let scored = format!("{d}/scored.csv");
    let model = format!("{out}/phase1/model.json");
    let o = run(&["predict", "--model", &model, "--input", &rej, "--output", &scored]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(&scored).unwrap().lines().next().unwrap().ends_with(",score,predicted_class"));

    let o = run(&["export-weights", "--model", &model, "--out", &d]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error: load: "), "{}", stderr(&o));
}

#[test]
fn failures_exit_nonzero_naming_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let config = run_config();

    let o = run(&["phase1", "--config", &config, "--out", &out, "--train-fraction", "1.0"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("split: empty test split"), "{}", stderr(&o));

    let o = run(&["phase2", "--config", &config, "--out", &out, "--accepted", "/nonexistent/accepted.csv"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error: ingest: /nonexistent/accepted.csv"), "{}", stderr(&o));

    let o = run(&["cohort", "--config", &config, "--out", &out, "--cohort-token", "boat"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("cohort: cohort token \"boat\""), "{}", stderr(&o));

    let o = run(&["cohort", "--config", &config, "--out", &out]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error: config: "), "{}", stderr(&o));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = 1\nunknown_key = 2\n").unwrap();
    let o = run(&["stats", "--config", &bad.display().to_string()]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error: config: "), "{}", stderr(&o));
    assert!(stderr(&o).contains("unknown_key"), "{}", stderr(&o));

    let o = run(&["phase1", "--config", &config, "--objective", "accuracy"]);
    assert!(!o.status.success());
}

#[test]
fn stats_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = run(&["stats", "--config", &run_config(), "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("96 months; suggested cutoff "));
    let header = fs::read_to_string(dir.path().join("stats/default_fraction.csv")).unwrap();
    assert!(header.starts_with("month,value,moving_average,moving_std\n2010-01,"));
}

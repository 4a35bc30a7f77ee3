use std::fs;
use std::path::{Path, PathBuf};

use lendrisk::artifact::{read_json, ModelArtifact, PreprocessArtifact, MODEL_FILE, PREPROCESS_FILE};
use lendrisk::config::{CohortConfig, CohortScope, Family};
use lendrisk::error::Error;
use lendrisk::monthly;
use lendrisk::pipeline::{self, load_phase, PhaseReport, GRID_FILE, REPORT_FILE};
use lendrisk::synth::{self, CohortRule, CohortSpec, SynthConfig};
use lendrisk::{Phase, RunConfig};

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn bundled(out: &Path) -> RunConfig {
    let mut c = RunConfig::load(&workspace().join("configs/run.toml")).unwrap();
    c.data.out_dir = out.to_path_buf();
    c
}

/// Writes a generated pair under `dir/data` and points a bundled-style config at it.
fn generated(dir: &Path, synth_config: &SynthConfig) -> (RunConfig, synth::Truth) {
    let data = synth::generate(synth_config).unwrap();
    let data_dir = dir.join("data");
    data.write(&data_dir).unwrap();
    let mut c = bundled(&dir.join("out"));
    c.data.accepted = data_dir.join(synth::ACCEPTED_FILE);
    c.data.rejected = data_dir.join(synth::REJECTED_FILE);
    (c, data.truth)
}

#[test]
fn phase2_recovers_generator_rule_and_names_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let report = pipeline::run_phase2(&bundled(dir.path())).unwrap();
    assert!(report.test.auc >= 0.95, "phase-2 test AUC {}", report.test.auc);

    let out = dir.path().join("phase2");
    let model: ModelArtifact = read_json(&out.join(MODEL_FILE)).unwrap();
    let pre: PreprocessArtifact = read_json(&out.join(PREPROCESS_FILE)).unwrap();
    let saved: PhaseReport = read_json(&out.join(REPORT_FILE)).unwrap();
    assert_eq!(saved, report);
    assert_eq!(report.model_id, model.model_id);
    assert_eq!(report.preprocess_id, pre.preprocess_id);
    assert_eq!(model.preprocess_id, pre.preprocess_id);
    assert_eq!(report.test.model_id, model.model_id);
    model.check_state(&pre).unwrap();

    // Downsampling balances the fit portion only.
    let fit = &report.data.fit.classes;
    assert_eq!(fit.negative, fit.positive);
    assert!(report.data.fit_before_downsampling.rows > report.data.fit.rows);
    assert!(report.data.train.last_month <= report.data.test.first_month);
    assert_eq!(report.data.train.rows + report.data.test.rows, report.data.status.as_ref().unwrap().retained());
}

#[test]
fn grid_csv_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = bundled(dir.path());
    config.phase2.family = Family::MlpDeep;
    config.phase2.max_epochs = 3;
    let report = pipeline::run_phase2(&config).unwrap();
    assert_eq!(report.grid.cells.len(), 20);
    let text = fs::read_to_string(dir.path().join("phase2").join(GRID_FILE)).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("cell,label,family"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    assert_eq!(rows.iter().filter(|r| r.contains(",trained,1,")).count(), 1);

    config.phase2.family = Family::MlpLinear;
    let report = pipeline::run_phase2(&config).unwrap();
    assert_eq!(report.grid.cells.len(), 1);
}

#[test]
fn train_and_test_scope_uses_only_cohort_rows() {
    let dir = tempfile::tempdir().unwrap();
    let synth_config = SynthConfig {
        applications: 20_000,
        cohort: Some(CohortSpec { token: "small_business".into(), share: 0.03, phase2_rule: CohortRule::Shared }),
        ..SynthConfig::default()
    };
    let (mut config, truth) = generated(dir.path(), &synth_config);
    config.cohort = Some(CohortConfig { token: "small_business".into(), scope: CohortScope::TrainAndTest });
    let report = pipeline::run_phase1(&config).unwrap();

    let pre: PreprocessArtifact = read_json(&dir.path().join("out/phase1").join(PREPROCESS_FILE)).unwrap();
    assert_eq!(pre.state.categorical[0].tokens, ["small_business"]);
    let cohort = report.cohort.as_ref().unwrap();
    assert_eq!(cohort.rows, truth.cohort_accepted + truth.cohort_rejected);
    let expected_share = cohort.rows as f64 / (truth.accepted + truth.rejected) as f64;
    assert_eq!(cohort.share, expected_share);
    assert!((cohort.share - 0.03).abs() < 0.005);
    assert!(report.data.train.rows < cohort.rows);
}

#[test]
fn cohort_suite_reports_small_share() {
    let dir = tempfile::tempdir().unwrap();
    let mut synth_config = SynthConfig {
        applications: 40_000,
        cohort: Some(CohortSpec { token: "small_business".into(), share: 0.013, phase2_rule: CohortRule::Shared }),
        ..SynthConfig::default()
    };
    // Accept about half so the cohort's phase-2 test window holds both classes.
    synth_config.phase1.bias = 0.0;
    let (mut config, truth) = generated(dir.path(), &synth_config);
    config.cohort = Some(CohortConfig { token: "small_business".into(), scope: CohortScope::TestOnly });
    config.phase1.max_epochs = 20;
    config.phase2.max_epochs = 20;
    let summary = pipeline::run_cohort_suite(&config).unwrap();
    let share1 = (truth.cohort_accepted + truth.cohort_rejected) as f64 / truth.applications as f64;
    assert_eq!(summary.phase1_share, share1);
    assert!((summary.phase1_share - 0.013).abs() < 0.003);
    assert_eq!(summary.cells.len(), 4);
    let csv = fs::read_to_string(dir.path().join("out/cohort/summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().nth(1).unwrap().starts_with("small_business,phase1,train_and_test,"));
}

#[test]
fn absent_cohort_token_is_fatal_and_named() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = bundled(dir.path());
    config.cohort = Some(CohortConfig { token: "boat".into(), scope: CohortScope::TrainAndTest });
    let err = pipeline::run_phase1(&config).unwrap_err();
    assert_eq!(err.stage(), Some("cohort"));
    assert!(err.to_string().contains("\"boat\""), "{err}");
}

#[test]
fn full_train_fraction_is_an_empty_test_split() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = bundled(dir.path());
    config.phase1.train_fraction = Some(1.0);
    let err = pipeline::run_phase1(&config).unwrap_err();
    assert_eq!(err.stage(), Some("split"));
    assert!(err.to_string().contains("empty test split"), "{err}");
}

#[test]
fn cutoff_excludes_later_months() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = bundled(dir.path());
    config.cutoff = Some("2016-12".parse().unwrap());
    let report = pipeline::run_phase1(&config).unwrap();
    assert_eq!(report.data.test.last_month, config.cutoff);
    let data = load_phase(&config, Phase::One).unwrap();
    let kept = data.set.dates().iter().filter(|d| Some(**d) <= config.cutoff).count();
    assert_eq!(report.data.train.rows + report.data.test.rows, kept);
}

#[test]
fn monthly_stats_conserve_counts_and_flag_the_censored_tail() {
    let dir = tempfile::tempdir().unwrap();
    let synth_config = SynthConfig { applications: 60_000, ..SynthConfig::default() };
    let (config, truth) = generated(dir.path(), &synth_config);
    let report = monthly::stats_report(&config).unwrap();
    let months = &report.stats.months;
    assert_eq!(months.len(), 96);
    for m in months {
        assert_eq!(m.accepted + m.rejected, m.requested());
    }
    assert_eq!(months.iter().map(|m| m.accepted).sum::<usize>(), truth.accepted);
    assert_eq!(months.iter().map(|m| m.rejected).sum::<usize>(), truth.rejected);
    for p in report.stats.default_fraction.iter().chain(&report.stats.rejected_fraction) {
        assert!((0.0..=1.0).contains(&p.value));
    }
    // Censoring ramps up over the generator's final 12 months.
    let last = months.last().unwrap().month;
    let cutoff = report.suggested_cutoff.expect("declining tail should be flagged");
    assert!(cutoff > last.add_months(-12) && cutoff <= last, "cutoff {cutoff}");

    let stats_dir = dir.path().join("out/stats");
    let text = fs::read_to_string(stats_dir.join("stats_report.txt")).unwrap();
    assert!(text.starts_with("# moving window: 6 months, trailing"));
    let csv = fs::read_to_string(stats_dir.join("months.csv")).unwrap();
    assert_eq!(csv.lines().count(), 97);
    for name in ["default_fraction.csv", "rejected_fraction.csv", "total_requested.csv", "stats.json"] {
        assert!(stats_dir.join(name).is_file(), "{name}");
    }
}

#[test]
fn stats_without_dates_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = bundled(dir.path());
    let acc = dir.path().join("a.csv");
    let rej = dir.path().join("r.csv");
    fs::write(&acc, format!("{}\n", synth::ACCEPTED_HEADER.join(","))).unwrap();
    fs::write(&rej, format!("{}\n", synth::REJECTED_HEADER.join(","))).unwrap();
    config.data.accepted = acc;
    config.data.rejected = rej;
    let err = monthly::stats_report(&config).unwrap_err();
    assert_eq!(err.stage(), Some("ingest"));
    let Error::Stage { source, .. } = err else { unreachable!() };
    assert!(matches!(*source, Error::NoDates));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let config = bundled(&dir.path().join(name));
        pipeline::run_phase2(&config).unwrap();
        let out = dir.path().join(name).join("phase2");
        [REPORT_FILE, MODEL_FILE, PREPROCESS_FILE, GRID_FILE].map(|f| fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coxnet::preprocess::{dataset_to_csv, generate_synthetic, Baseline, SyntheticSpec, TrueRisk};
use ndarray::{concatenate, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coxnet"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "coxnet {}: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

const LINEAR_SPEC: &str = "n_samples = 600\nn_features = 4\nrisk = linear: 1.0, -0.7, 0, 0\n\
                           baseline = exponential: 0.1\ncensoring = 0.2\nseed = 7\n";

/// A workspace holding `gen/` from a linear-truth spec.
fn workspace() -> TempDir {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("spec.txt"), LINEAR_SPEC).unwrap();
    ok(tmp.path(), &["generate", "--spec", "spec.txt", "--out-dir", "gen"]);
    tmp
}

const DATA: [&str; 4] = ["--data", "gen/data.csv", "--schema", "gen/schema.txt"];

fn with_data<'a>(head: &[&'a str]) -> Vec<&'a str> {
    [head, &DATA[..]].concat()
}

#[test]
fn generate_is_deterministic_and_validated() {
    let tmp = workspace();
    let dir = tmp.path();
    ok(dir, &["generate", "--spec", "spec.txt", "--out-dir", "again"]);
    for f in ["data.csv", "truth.csv", "schema.txt"] {
        assert_eq!(read(dir.join("gen").join(f)), read(dir.join("again").join(f)), "{f}");
    }
    ok(dir, &["generate", "--spec", "spec.txt", "--seed", "8", "--out-dir", "other"]);
    assert_ne!(read(dir.join("gen/data.csv")), read(dir.join("other/data.csv")));

    std::fs::write(dir.join("empty.txt"), LINEAR_SPEC.replace("n_samples = 600", "n_samples = 0")).unwrap();
    let out = run(dir, &["generate", "--spec", "empty.txt", "--out-dir", "bad"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn exit_codes_distinguish_failures() {
    let tmp = workspace();
    let dir = tmp.path();
    assert_eq!(run(dir, &["fit-linear", "--data", "gen/data.csv"]).status.code(), Some(2));
    assert_eq!(run(dir, &["frobnicate"]).status.code(), Some(2));
    let missing = run(dir, &["describe", "--data", "nope.csv", "--schema", "gen/schema.txt", "--out-dir", "o"]);
    assert_eq!(missing.status.code(), Some(3));
    let bad_folds = run(dir, &with_data(&["fit-linear", "--folds", "1", "--out-dir", "o"]));
    assert_eq!(bad_folds.status.code(), Some(4));
}

#[test]
fn describe_tables_and_bin_width() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("schema.txt"),
        "duration = wait\nevent = crossed\ncategorical.gender = Male, Female\nnumeric = age\n",
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut csv = String::from("wait,crossed,gender,age\n");
    for i in 0..200 {
        let g = if i % 3 == 0 { "Female" } else { "Male" };
        csv += &format!("{:.3},{},{g},{}\n", rng.random_range(0.1..20.0), u8::from(i % 4 != 0), 20 + i % 40);
    }
    std::fs::write(dir.join("data.csv"), csv).unwrap();
    let args = ["describe", "--data", "data.csv", "--schema", "schema.txt"];
    let stdout = ok(dir, &[&args[..], &["--out-dir", "d1"]].concat());
    assert!(stdout.contains("Female"));
    let means = read(dir.join("d1/level_means.csv"));
    assert_eq!(means.lines().next(), Some("variable,level,count,mean_wait"));
    assert!(means.lines().any(|l| l.starts_with("gender,Female,67,")));

    ok(dir, &[&args[..], &["--bin-width", "2", "--out-dir", "d2"]].concat());
    let bins = |d: &str| read(dir.join(d).join("histogram.csv")).lines().count() - 1;
    let (one, two) = (bins("d1"), bins("d2"));
    assert!(one.div_ceil(2).abs_diff(two) <= 1, "{one} bins at width 1, {two} at width 2");

    std::fs::write(dir.join("empty.csv"), "").unwrap();
    let out = run(dir, &["describe", "--data", "empty.csv", "--schema", "schema.txt", "--out-dir", "d3"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

#[test]
fn fit_linear_report_recovers_signs() {
    let tmp = workspace();
    let dir = tmp.path();
    let stdout = ok(dir, &with_data(&["fit-linear", "--out-dir", "lin"]));
    assert!(stdout.contains("mean C-index (10-fold): 0."), "{stdout}");
    let report = read(dir.join("lin/report.txt"));
    let coefficient = |name: &str| -> f64 {
        let line = report.lines().find(|l| l.starts_with(name)).unwrap();
        line.split_whitespace().nth(1).unwrap().parse().unwrap()
    };
    assert!(coefficient("x1") > 0.0 && coefficient("x2") < 0.0, "{report}");
    // Noise columns are eliminated.
    assert!(!report.lines().any(|l| l.starts_with("x3") || l.starts_with("x4")), "{report}");
    assert_eq!(read(dir.join("lin/cv.csv")).lines().count(), 11);
}

#[test]
fn fit_linear_removes_collinear_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let (ds, _) = generate_synthetic(&SyntheticSpec {
        n_samples: 400,
        n_features: 3,
        risk: TrueRisk::Linear(vec![0.8, -0.4, 0.0]),
        baseline: Baseline::Weibull { shape: 1.2, scale: 5.0 },
        censoring_rate: 0.1,
        seed: 4,
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let twin = ds.features().column(0).mapv(|v| v + 0.01 * rng.random::<f64>());
    let x = concatenate![Axis(1), ds.features(), twin.insert_axis(Axis(1))];
    let mut names = ds.feature_names().to_vec();
    names.push("twin".into());
    std::fs::write(dir.join("data.csv"), dataset_to_csv(&ds.with_features(x, names).unwrap())).unwrap();
    std::fs::write(
        dir.join("schema.txt"),
        "duration = duration\nevent = event\nnumeric = x1, x2, x3, twin\n",
    )
    .unwrap();
    ok(
        dir,
        &["fit-linear", "--data", "data.csv", "--schema", "schema.txt", "--folds", "4", "--out-dir", "o"],
    );
    let vif = read(dir.join("o/vif.csv"));
    assert_eq!(vif.lines().filter(|l| l.ends_with(",removed")).count(), 1, "{vif}");
}

#[test]
fn config_file_values_yield_to_flags() {
    let tmp = workspace();
    let dir = tmp.path();
    std::fs::write(dir.join("run.cfg"), "folds = 3\nseed = 5\nno-elimination = true\n").unwrap();
    let stdout = ok(dir, &with_data(&["fit-linear", "--config", "run.cfg", "--folds", "4", "--out-dir", "c"]));
    assert!(stdout.contains("(4-fold)"), "{stdout}");
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.join("c/manifest.json"))).unwrap();
    let config = &manifest["config"]["fit-linear"];
    assert_eq!(config["folds"], 4);
    assert_eq!(config["seed"], 5);
    assert_eq!(config["no_elimination"], true);
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["inputs"].as_array().unwrap().iter().any(|i| i["path"] == "run.cfg"));

    std::fs::write(dir.join("typo.cfg"), "fodls = 3\n").unwrap();
    let out = run(dir, &with_data(&["fit-linear", "--config", "typo.cfg", "--out-dir", "t"]));
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn rank_writes_a_deterministic_table() {
    let tmp = workspace();
    let dir = tmp.path();
    let stdout = ok(dir, &with_data(&["rank", "--folds", "4", "--seed", "3", "--out-dir", "r1"]));
    assert!(stdout.starts_with("Rank"));
    ok(dir, &with_data(&["rank", "--folds", "4", "--seed", "3", "--out-dir", "r2"]));
    let table = read(dir.join("r1/ranking.csv"));
    assert_eq!(table, read(dir.join("r2/ranking.csv")));
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("rank,feature,weight"));
    assert!(lines.next().unwrap().starts_with("1,x1,"), "{table}");
    ok(dir, &with_data(&["rank", "--full-data", "--out-dir", "r3"]));
    assert_eq!(read(dir.join("r3/ranking.csv")).lines().count(), 5);
}

#[test]
fn search_logs_every_trial_and_resumes() {
    let tmp = workspace();
    let dir = tmp.path();
    std::fs::write(
        dir.join("space.txt"),
        "budget = 4\nseed = 2\nn_inputs = 1..4\nhidden_layers = 1\nhidden_width = 4, 8\nepochs = 20\n",
    )
    .unwrap();
    let search = with_data(&["search", "--space", "space.txt", "--folds", "3", "--out-dir", "s"]);
    ok(dir, &search);
    let log = read(dir.join("s/trials.csv"));
    assert_eq!(log.lines().count(), 5, "{log}");
    let model = read(dir.join("s/model/model.txt"));

    // Drop the last two trials, as if interrupted, and resume.
    let partial: Vec<&str> = log.lines().take(3).collect();
    std::fs::write(dir.join("s/trials.csv"), partial.join("\n") + "\n").unwrap();
    let stdout = ok(dir, &search);
    assert!(stdout.contains("resumed 2 trials"), "{stdout}");
    assert_eq!(read(dir.join("s/trials.csv")), log);
    assert_eq!(read(dir.join("s/model/model.txt")), model);

    let best: f64 = read(dir.join("s/best.txt"))
        .lines()
        .find_map(|l| l.strip_prefix("mean_c_index = "))
        .unwrap()
        .parse()
        .unwrap();
    let header: Vec<&str> = log.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "mean_c_index").unwrap();
    for row in log.lines().skip(1) {
        let c: f64 = row.split(',').nth(col).unwrap().parse().unwrap();
        assert!(best >= c);
    }

    let budget = ok(dir, &[&search[..], &["--budget", "2", "--out-dir", "s2"]].concat());
    assert!(budget.starts_with("2 trials"), "{budget}");
}

#[test]
fn evaluate_compares_bundles() {
    let tmp = workspace();
    let dir = tmp.path();
    ok(dir, &with_data(&["fit-linear", "--folds", "3", "--out-dir", "lin"]));
    std::fs::write(dir.join("space.txt"), "budget = 1\nn_inputs = 2\nhidden_width = 4\nepochs = 20\n").unwrap();
    ok(dir, &with_data(&["search", "--space", "space.txt", "--folds", "3", "--out-dir", "deep"]));
    let stdout = ok(
        dir,
        &["evaluate", "--data", "gen/data.csv", "--model", "lin/model", "--model", "deep/model", "--out-dir", "ev"],
    );
    assert!(stdout.starts_with("Model") && stdout.contains("Number of Covariates") && stdout.contains("C-index"));
    let comparison = read(dir.join("ev/comparison.csv"));
    let rows: Vec<&str> = comparison.lines().collect();
    assert_eq!(rows[0], "model,kind,covariates,c_index");
    assert!(rows[1].starts_with("lin,linear,2,"), "{comparison}");
    assert!(rows[2].starts_with("deep,deep,2,"), "{comparison}");
    for f in ["scores_1.csv", "scores_2.csv"] {
        assert_eq!(read(dir.join("ev").join(f)).lines().count(), 601);
    }
}

#[test]
fn replay_reproduces_and_detects_changed_inputs() {
    let tmp = workspace();
    let dir = tmp.path();
    ok(dir, &with_data(&["rank", "--folds", "3", "--out-dir", "r"]));
    let stdout = ok(dir, &["replay", "--manifest", "r/manifest.json", "--out-dir", "again"]);
    assert!(stdout.contains("replay reproduced 1 output files"), "{stdout}");
    assert_eq!(read(dir.join("r/ranking.csv")), read(dir.join("again/ranking.csv")));

    let data = read(dir.join("gen/data.csv"));
    std::fs::write(dir.join("gen/data.csv"), data.replacen(",1,", ",0,", 1)).unwrap();
    let out = run(dir, &["replay", "--manifest", "r/manifest.json", "--out-dir", "changed"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("changed"));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rcif::bundled;

fn rcif(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcif"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn with_table1() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("table1.json"), bundled::TABLE1_JSON).unwrap();
    dir
}

#[test]
fn gen_data_writes_three_classes() {
    let dir = tempfile::tempdir().unwrap();
    let o = rcif(dir.path(), &["gen-data", "--n", "300", "--seed", "42", "--out", "data.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("data.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("pitch,roll,label"));
    assert_eq!(lines.count(), 900);
}

#[test]
fn gen_data_split_is_eighty_twenty() {
    let dir = tempfile::tempdir().unwrap();
    let o = rcif(dir.path(), &["-q", "gen-data", "--out", "train.csv", "--test-out", "test.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap().lines().count() - 1;
    assert_eq!((rows("train.csv"), rows("test.csv")), (720, 180));
}

#[test]
fn infer_bundled_model_at_sit_mean() {
    let dir = with_table1();
    for model in ["table1.json", "builtin:table1"] {
        let o = rcif(dir.path(), &["-q", "infer", "--model", model, "--pitch", "0", "--roll", "0.25"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).ends_with("class: sit\n"), "{}", stdout(&o));
    }
}

#[test]
fn validate_passes_with_rk4_and_fails_with_euler() {
    let dir = with_table1();
    let o = rcif(dir.path(), &["-q", "validate", "--model", "table1.json", "--trials", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("max relative error"));

    let o = rcif(dir.path(), &["-q", "validate", "--model", "table1.json", "--trials", "5", "--method", "euler"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(rcif(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(rcif(dir.path(), &["infer", "--model", "x.json", "--pitch", "0", "--bogus"]).status.code(), Some(1));
    assert_eq!(rcif(dir.path(), &[]).status.code(), Some(1));
}

#[test]
fn user_errors_exit_one() {
    let dir = with_table1();
    let o = rcif(dir.path(), &["-q", "infer", "--model", "missing.json", "--pitch", "0", "--roll", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.json"));

    let o = rcif(dir.path(), &["-q", "quantize", "--model", "table1.json", "--out", "q.json", "--catalog", "e7"]);
    assert_eq!(o.status.code(), Some(1));

    fs::write(dir.path().join("bad.csv"), "pitch,roll,label\n0,0,stand\n0,x,sit\n").unwrap();
    let o = rcif(dir.path(), &["-q", "eval", "--model", "table1.json", "--data", "bad.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = rcif(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("response-map"));
    assert_eq!(rcif(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn flags_override_config_file_and_config_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "seed = 3\n[dataset]\nn_per_class = 5\nnoise_sigma = 0.1\n",
    )
    .unwrap();
    let o = rcif(dir.path(), &["--config", "run.toml", "gen-data", "--n", "7", "--out", "d.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let echo = stderr(&o);
    assert!(echo.contains("# n_per_class = 7"), "{echo}");
    assert!(echo.contains("# noise_sigma = 0.1"), "{echo}");
    assert!(echo.contains("# seed = 3"), "{echo}");
    let rows = fs::read_to_string(dir.path().join("d.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 21);

    fs::write(dir.path().join("bad.toml"), "[train]\nlearning_rat = 1\n").unwrap();
    let o = rcif(dir.path(), &["--config", "bad.toml", "gen-data", "--out", "d.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn train_eval_prune_quantize_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let o = rcif(dir.path(), args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        stdout(&o)
    };
    run(&["-q", "gen-data", "--n", "60", "--out", "train.csv", "--test-out", "test.csv"]);
    let out = run(&[
        "-q", "train", "--data", "train.csv", "--test", "test.csv", "--epochs", "300", "--out", "m.json", "--loss-out",
        "loss.csv",
    ]);
    assert!(out.contains("epochs: 300"), "{out}");
    let loss = fs::read_to_string(dir.path().join("loss.csv")).unwrap();
    assert!(loss.starts_with("epoch,loss\n"));
    assert_eq!(loss.lines().count(), 301);
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(model["schema_version"], 1);

    let out = run(&["-q", "eval", "--model", "m.json", "--data", "test.csv", "--baseline-train", "train.csv"]);
    assert!(out.contains("accuracy: ") && out.contains("baseline accuracy: "), "{out}");

    let out = run(&["-q", "prune", "--model", "builtin:table1", "--out", "p.json"]);
    assert!(out.contains("synapses: 9 of 18 kept"), "{out}");
    assert!(out.contains("0.300 s -> 0.250 s"), "{out}");

    run(&["-q", "quantize", "--model", "p.json", "--out", "q.json"]);
    let q = rcif::model_io::load_model(dir.path().join("q.json")).unwrap();
    let catalog = rcif::hardware::ResistorCatalog::default();
    for n in q.neurons() {
        for s in n.synapses() {
            assert_eq!(catalog.round(s.resistance), s.resistance);
        }
    }
}

#[test]
fn response_map_and_energy_outputs() {
    let dir = with_table1();
    let o = rcif(dir.path(), &["-q", "response-map", "--model", "table1.json", "--step", "0.25", "--out", "map.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let map = fs::read_to_string(dir.path().join("map.csv")).unwrap();
    assert!(map.starts_with("pitch,roll,stand,lie,sit\n"));
    assert_eq!(map.lines().count(), 26);

    let o = rcif(dir.path(), &["-q", "energy", "--model", "table1.json", "--pitch", "0", "--roll", "0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["neurons"].as_array().unwrap().len(), 3);
}

#[test]
fn seeds_change_noisy_outputs_only_when_they_differ() {
    let dir = with_table1();
    let infer = |seed: &str| {
        stdout(&rcif(
            dir.path(),
            &["-q", "--seed", seed, "infer", "--model", "table1.json", "--pitch", "0.2", "--roll", "0.1", "--noise-sigma", "0.05"],
        ))
    };
    assert_eq!(infer("1"), infer("1"));
    assert_ne!(infer("1"), infer("2"));
}

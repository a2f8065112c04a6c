use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn movac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_movac")).args(args).env("MOVAC_LOG", "error").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"
[run]
name = "tiny"
seed = 5
total_episodes = 1

[env]
name = "treasure-grid"
horizon = 30

[algo]
horizon = 20
n_envs = 2
hidden = [8]
epochs = 2
critic_epochs = 2
minibatch = 8
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn train(dir: &Path, config: &str) -> String {
    let cfg = write(dir, "run.toml", config);
    let out = dir.join("out").to_string_lossy().into_owned();
    let o = movac(&["train", "--config", &cfg, "--out", &out, "--workers", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn missing_config_names_the_path() {
    let o = movac(&["train", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/run.toml"));
}

#[test]
fn invalid_config_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[env]\nname = \"treasure-grid\"\n[algo]\nlambda = 2.0\n");
    let o = movac(&["train", "--config", &cfg, "--out", &dir.path().join("o").to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.toml:4:"), "{}", stderr(&o));
}

#[test]
fn one_batch_run_writes_one_row_per_objective() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(dir.path(), SMALL);
    let csv = fs::read_to_string(Path::new(&out).join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(Path::new(&out).join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["batches"], 1);
}

#[test]
fn same_seed_gives_identical_summaries() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (oa, ob) = (train(a.path(), SMALL), train(b.path(), SMALL));
    for f in ["summary.json", "metrics.csv"] {
        assert_eq!(fs::read(Path::new(&oa).join(f)).unwrap(), fs::read(Path::new(&ob).join(f)).unwrap());
    }
}

#[test]
fn eval_prints_a_table_and_radar_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(dir.path(), SMALL);
    let ckpt = Path::new(&out).join("checkpoint.mvac").to_string_lossy().into_owned();
    let radar = dir.path().join("radar.json").to_string_lossy().into_owned();
    let cfg = dir.path().join("run.toml").to_string_lossy().into_owned();
    let o = movac(&["eval", "--checkpoint", &ckpt, "--config", &cfg, "--episodes", "3", "--out", &radar]);
    assert!(o.status.success(), "{}", stderr(&o));
    // the grid is deterministic and so is the evaluated policy
    for line in stdout(&o).lines().skip(1) {
        let std: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
        assert_eq!(std, 0.0);
    }
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&radar).unwrap()).unwrap();
    assert_eq!(doc["objectives"].as_array().unwrap().len(), 2);
    assert_eq!(doc["raw"][0].as_array().unwrap().len(), 2);
}

#[test]
fn three_objective_radar() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[run]\ntotal_episodes = 1\n[env]\nname = \"point-mass-1d\"\nhorizon = 12\n\
                  [algo]\nhorizon = 12\nn_envs = 1\nhidden = [4]\nepochs = 1\ncritic_epochs = 1\nminibatch = 4\n";
    let out = train(dir.path(), config);
    let ckpt = Path::new(&out).join("checkpoint.mvac").to_string_lossy().into_owned();
    let radar = dir.path().join("radar.json").to_string_lossy().into_owned();
    let o = movac(&["eval", "--checkpoint", &ckpt, "--env", "point-mass-1d", "--episodes", "2", "--out", &radar]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&radar).unwrap()).unwrap();
    assert_eq!(doc["objectives"].as_array().unwrap().len(), 3);
    assert_eq!(doc["values"].as_array().unwrap().len(), 3);
}

#[test]
fn eval_rejects_bad_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(dir.path(), SMALL);
    let ckpt = Path::new(&out).join("checkpoint.mvac");
    let mut bytes = fs::read(&ckpt).unwrap();
    bytes[..4].copy_from_slice(b"JUNK");
    let bad = write(dir.path(), "bad.mvac", "");
    fs::write(&bad, &bytes).unwrap();
    let o = movac(&["eval", "--checkpoint", &bad, "--env", "treasure-grid"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("bad magic"), "{}", stderr(&o));

    let o = movac(&["eval", "--checkpoint", &ckpt.to_string_lossy(), "--env", "linear-quad"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let o = movac(&["eval", "--checkpoint", &ckpt.to_string_lossy(), "--env", "treasure-grid", "--episodes", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn aols_reports_members_and_marginal_weights() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "set.json", "[[1,0],[0,1],[0.6,0.6]]");
    let out = dir.path().join("us.json").to_string_lossy().into_owned();
    let o = movac(&["aols", "--input", &input, "--eps", "1e-6", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let weights: Vec<Vec<f64>> = text
        .split("marginal weights:")
        .nth(1)
        .unwrap()
        .lines()
        .filter(|l| l.trim_start().starts_with('['))
        .map(|l| serde_json::from_str(l.trim()).unwrap())
        .collect();
    assert_eq!(weights.len(), 4);
    for expected in [[1.0, 0.0], [0.0, 1.0], [0.6, 0.4], [0.4, 0.6]] {
        assert!(weights.iter().any(|w| (w[0] - expected[0]).abs() < 1e-9 && (w[1] - expected[1]).abs() < 1e-9));
    }
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["members"].as_array().unwrap().len(), 3);
}

#[test]
fn aols_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let single = write(dir.path(), "one.json", "[[0.3,0.7]]");
    let o = movac(&["aols", "--input", &single]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.split("marginal weights:").next().unwrap().matches('[').count(), 1);
    assert!(text.contains("[1.0, 0.0]") && text.contains("[0.0, 1.0]"));

    let dominated = write(dir.path(), "dom.json", "[[1,1],[0.5,0.5]]");
    let o = movac(&["aols", "--input", &dominated]);
    assert_eq!(stdout(&o).split("marginal weights:").next().unwrap().matches('[').count(), 1);

    let broken = write(dir.path(), "broken.json", "{not json");
    assert_eq!(movac(&["aols", "--input", &broken]).status.code(), Some(2));
}

#[test]
fn export_selects_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(dir.path(), SMALL);
    let o = movac(&["export", "--run", &out, "--what", "delta-r"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(Path::new(&out).join("delta-r.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("batch,sequence,delta_r"));

    let target = dir.path().join("w.csv").to_string_lossy().into_owned();
    assert!(movac(&["export", "--run", &out, "--what", "w-matrix", "--out", &target]).status.success());
    let csv = fs::read_to_string(&target).unwrap();
    assert_eq!(csv.lines().next(), Some("batch,sequence,w_11,w_12,w_21,w_22"));
    assert!(csv.lines().all(|l| l.split(',').count() == 6));

    let o = movac(&["export", "--run", &out, "--what", "gradients"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("delta-r"));

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(movac(&["export", "--run", &empty.path().to_string_lossy(), "--what", "returns"]).status.code(), Some(2));
}

#[test]
fn accepted_configs_train_and_evaluate() {
    // a small fuzz set of configs the validator accepts
    let envs = ["treasure-grid", "point-mass-1d", "linear-quad"];
    for (k, env) in envs.iter().enumerate() {
        for (horizon, n_envs) in [(6, 1), (12, 2)] {
            let dir = tempfile::tempdir().unwrap();
            let config = format!(
                "[run]\nseed = {k}\ntotal_episodes = 2\n[env]\nname = \"{env}\"\n\
                 [algo]\nhorizon = {horizon}\nn_envs = {n_envs}\nhidden = [4]\nepochs = 1\ncritic_epochs = 1\nminibatch = 5\n"
            );
            let cfg = write(dir.path(), "run.toml", &config);
            let out = dir.path().join("out").to_string_lossy().into_owned();
            let o = movac(&["train", "--config", &cfg, "--out", &out]);
            assert!(o.status.success(), "{env}: {}", stderr(&o));
            let ckpt = Path::new(&out).join("checkpoint.mvac").to_string_lossy().into_owned();
            let o = movac(&["eval", "--checkpoint", &ckpt, "--config", &cfg, "--episodes", "1"]);
            assert!(o.status.success(), "{env}: {}", stderr(&o));
        }
    }
}

//! End-to-end runs of the `poselex` binary on a small synthetic dataset.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const CONFIG: &str = "\
# small dataset so every command runs in well under a second
synth_subjects = 4
synth_instances = 3
k_multiplier = 2
sweep_multipliers = 1, 2
manifest = data/manifest.jsonl
instructions = data/instructions.json
ground_truth = data/ground_truth.json
";

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    /// A temp dir holding `config.txt` and a generated dataset in `data/`.
    fn new() -> Self {
        Workspace::with_config(CONFIG)
    }

    fn with_config(config: &str) -> Self {
        let ws = Workspace {
            dir: tempfile::tempdir().unwrap(),
        };
        fs::write(ws.path("config.txt"), config).unwrap();
        ws.ok(&["synth", "--out", "data"]);
        ws
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn run(&self, args: &[&str]) -> Output {
        let (command, rest) = args.split_first().unwrap();
        Command::new(env!("CARGO_BIN_EXE_poselex"))
            .current_dir(self.dir.path())
            .env("RUST_LOG", "warn")
            .arg(command)
            .arg("--config")
            .arg(self.path("config.txt"))
            .args(rest.iter().map(|a| resolve(self.dir.path(), a)))
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out
    }

    /// Runs a command that must fail and returns its stderr.
    fn fails(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
        String::from_utf8_lossy(&out.stderr).into_owned()
    }

    fn instructions(&self) -> BTreeMap<String, Vec<String>> {
        let text = fs::read_to_string(self.path("data/instructions.json")).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        serde_json::from_value(v["classes"].clone()).unwrap()
    }

    fn write_instructions(&self, rel: &str, classes: &BTreeMap<String, Vec<String>>) {
        let v = serde_json::json!({ "classes": classes });
        fs::write(self.path(rel), serde_json::to_string_pretty(&v).unwrap()).unwrap();
    }
}

/// Relative file arguments are made absolute so they do not depend on the
/// config's directory.
fn resolve(base: &Path, arg: &str) -> String {
    if arg.starts_with("--") {
        arg.to_string()
    } else {
        base.join(arg).to_string_lossy().into_owned()
    }
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn csv_column(path: &Path, column: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(column).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn training_twice_gives_identical_artifacts() {
    let ws = Workspace::new();
    ws.ok(&["train", "--out", "run1"]);
    ws.ok(&["train", "--out", "run2"]);
    let first = read_dir_bytes(&ws.path("run1"));
    assert!(first.len() >= 4, "artifacts: {:?}", first.keys());
    assert_eq!(first, read_dir_bytes(&ws.path("run2")));
}

#[test]
fn trace_is_non_decreasing() {
    let ws = Workspace::new();
    ws.ok(&["train", "--out", "model"]);
    let trace = csv_column(&ws.path("model/trace.csv"), 1);
    assert!(trace.len() >= 2);
    assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{trace:?}");
}

#[test]
fn eval_report_is_consistent_with_its_confusion_matrix() {
    let ws = Workspace::new();
    ws.ok(&["eval", "--out", "eval"]);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(ws.path("eval/eval_report.json")).unwrap()).unwrap();
    let confusion: Vec<Vec<usize>> = serde_json::from_value(report["confusion"].clone()).unwrap();
    let total: usize = confusion.iter().flatten().sum();
    let correct: usize = (0..confusion.len()).map(|i| confusion[i][i]).sum();
    assert_eq!(total as u64, report["test_instances"].as_u64().unwrap());
    assert_eq!(report["accuracy"].as_f64().unwrap(), correct as f64 / total as f64);
    // Two of four subjects are held out, each with three instances per class.
    for row in &confusion {
        assert_eq!(row.iter().sum::<usize>(), 2 * 3);
    }
    assert_eq!(report["train_subjects"].as_array().unwrap().len(), 2);
    assert!(report["lexicon_recovery"].as_f64().is_some());
}

#[test]
fn sweep_writes_one_row_per_multiplier() {
    let ws = Workspace::new();
    ws.ok(&["sweep-k", "--out", "sweep"]);
    let text = fs::read_to_string(ws.path("sweep/sweep_k.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,accuracy,seed"));
    let ks: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ks, ["12", "24"]);
}

#[test]
fn missing_instruction_names_the_class() {
    let ws = Workspace::new();
    let mut classes = ws.instructions();
    assert!(classes.remove("Kick").is_some());
    ws.write_instructions("partial.json", &classes);
    let stderr = ws.fails(&["train", "--instructions", "partial.json", "--out", "model"]);
    assert!(stderr.contains("Kick"), "{stderr}");
}

#[test]
fn classify_accepts_composites_and_rejects_unknown_symbols() {
    let ws = Workspace::new();
    ws.ok(&["train", "--out", "model"]);
    let classes = ws.instructions();
    let composite: Vec<String> = classes["Wind up"]
        .iter()
        .chain(&classes["Kick"][1..])
        .cloned()
        .collect();
    let novel = BTreeMap::from([("Wind up then kick".to_string(), composite)]);
    ws.write_instructions("novel.json", &novel);
    ws.ok(&["classify", "--novel", "novel.json", "--out", "model"]);
    let lines = fs::read_to_string(ws.path("model/classification.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 4 * 8 * 3);
    let first: Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
    assert!(first["log_scores"].get("Wind up then kick").is_some());

    let bad = BTreeMap::from([("Spin".to_string(), vec!["T1".to_string(), "T99".to_string()])]);
    ws.write_instructions("bad.json", &bad);
    let stderr = ws.fails(&["classify", "--novel", "bad.json", "--out", "model"]);
    assert!(stderr.contains("T99"), "{stderr}");
}

#[test]
fn classify_on_empty_manifest_reports_nothing() {
    let ws = Workspace::new();
    ws.ok(&["train", "--out", "model"]);
    fs::write(ws.path("empty.jsonl"), "").unwrap();
    ws.ok(&["classify", "--manifest", "empty.jsonl", "--out", "model"]);
    assert_eq!(fs::read_to_string(ws.path("model/classification.jsonl")).unwrap(), "");
}

#[test]
fn single_subject_cannot_be_split() {
    let ws = Workspace::with_config(&CONFIG.replace("synth_subjects = 4", "synth_subjects = 1"));
    let stderr = ws.fails(&["eval", "--out", "eval"]);
    assert!(stderr.contains("split"), "{stderr}");
}

#[test]
fn bad_inputs_exit_nonzero() {
    let ws = Workspace::new();
    fs::write(ws.path("bad.txt"), "no_such_key = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_poselex"))
        .args(["train", "--config"])
        .arg(ws.path("bad.txt"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));

    let stderr = ws.fails(&["train", "--manifest", "missing.jsonl", "--out", "model"]);
    assert!(stderr.contains("missing.jsonl"), "{stderr}");

    fs::write(ws.path("broken.jsonl"), "{not json\n").unwrap();
    let stderr = ws.fails(&["train", "--manifest", "broken.jsonl", "--out", "model"]);
    assert!(stderr.contains("line 1"), "{stderr}");
}

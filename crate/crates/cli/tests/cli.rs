use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TOY: &str = "\
source_id,dest_id,year,source_lat,source_lon,dest_lat,dest_lon,species
A,B,2020,52.0,-1.0,52.1,-1.1,trout
B,C,2020,52.1,-1.1,52.3,-0.9,trout
C,D,2020,52.3,-0.9,52.6,-1.4,carp
D,E,2020,52.6,-1.4,53.0,-1.0,
A,C,2020,52.0,-1.0,52.3,-0.9,trout
A,A,2020,52.0,-1.0,52.0,-1.0,trout
A,B,2021,52.0,-1.0,52.1,-1.1,trout
B,D,2021,52.1,-1.1,52.6,-1.4,trout
A,C,2022,52.0,-1.0,52.3,-0.9,trout
C,E,2022,52.3,-0.9,53.0,-1.0,carp
B,C,2022,52.1,-1.1,52.3,-0.9,trout
";

const SPLIT: &str = "
[split]
train = [2020, 2020]
val = [2021, 2021]
test = [2022, 2022]
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spatial-katz"))
}

fn run_cli(args: &[&str], config: &Path) -> Output {
    bin().args(args)
        .arg("--config")
        .arg(config)
        .args(["--log-level", "warn"])
        .output()
        .unwrap()
}

fn setup(dir: &Path, config: &str) -> std::path::PathBuf {
    fs::write(dir.join("toy.csv"), TOY).unwrap();
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn single_model_toy_run_writes_one_column() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("input = \"toy.csv\"\nmodels = [\"KI\"]\n{SPLIT}");
    let cfg = setup(dir.path(), &text);
    let out = run_cli(&["run"], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let root = dir.path().join("out");
    assert!(!root.join("INCOMPLETE").exists());
    assert_eq!(fs::read_to_string(root.join("config.toml")).unwrap(), text);
    let reports: Vec<_> = fs::read_dir(root.join("reports")).unwrap().collect();
    assert_eq!(reports.len(), 1);

    let summary = fs::read_to_string(root.join("summary.csv")).unwrap();
    let rows: Vec<Vec<&str>> = summary.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["Metric", "KI"]);
    let names: Vec<&str> = rows[1..].iter().map(|r| r[0]).collect();
    assert_eq!(names, ["Threshold", "Precision", "Recall", "F1-Score", "AUPR", "AUCROC"]);

    let report = json(&root.join("reports/KI.json"));
    for (row, key) in rows[1..].iter().zip(["threshold", "precision", "recall", "f1", "aupr", "auroc"]) {
        assert_eq!(row[1].parse::<f64>().unwrap(), report[key].as_f64().unwrap(), "{key}");
    }
    // Test split has 4 nodes, hence 12 ordered pairs with 3 links.
    let c = &report["confusion"];
    let total: u64 = ["tp", "fp", "fn", "tn"].iter().map(|k| c[k].as_u64().unwrap()).sum();
    assert_eq!(total, 12);
    assert_eq!(c["tp"].as_u64().unwrap() + c["fn"].as_u64().unwrap(), 3);

    let scores = fs::read_to_string(root.join("scores/KI.csv")).unwrap();
    assert_eq!(scores.lines().count(), 13);
    assert!(root.join("curves/KI_roc.csv").exists() && root.join("curves/KI_pr.csv").exists());
}

#[test]
fn overlapping_split_is_refused_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("input = \"toy.csv\"\n{}", SPLIT.replace("val = [2021, 2021]", "val = [2020, 2021]"));
    let cfg = setup(dir.path(), &text);
    let out = run_cli(&["run"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("split"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn empty_split_is_a_data_error_and_marks_output_incomplete() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("input = \"toy.csv\"\n{}", SPLIT.replace("test = [2022, 2022]", "test = [2030, 2030]"));
    let cfg = setup(dir.path(), &text);
    let out = run_cli(&["run"], &cfg);
    assert_eq!(out.status.code(), Some(2));
    let marker = fs::read_to_string(dir.path().join("out/INCOMPLETE")).unwrap();
    assert!(marker.contains("captures no edges"), "{marker}");
}

#[test]
fn divergent_beta_is_a_numeric_error() {
    // The directed toy train graph is acyclic, so any beta converges there.
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "input = \"toy.csv\"\nmodels = [\"KI\"]\nadjacency = \"undirected\"\n{SPLIT}\n[katz]\nbeta_mode = {{ kind = \"explicit\", beta = 5.0 }}\n"
    );
    let cfg = setup(dir.path(), &text);
    let out = run_cli(&["run"], &cfg);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_and_unknown_keys_are_config_errors() {
    let out = bin().arg("run").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), &format!("input = \"toy.csv\"\nbogus = 1\n{SPLIT}"));
    assert_eq!(run_cli(&["run"], &cfg).status.code(), Some(1));
    let cfg = setup(dir.path(), &format!("input = \"missing.csv\"\n{SPLIT}"));
    assert_eq!(run_cli(&["run"], &cfg).status.code(), Some(1));
}

#[test]
fn malformed_rows_are_skipped_and_listed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), &format!("input = \"toy.csv\"\nmodels = [\"KI\"]\n{SPLIT}"));
    let bad = format!("{TOY}X,Y,2022,91.0,0.0,52.0,0.0,\nX,Z,20x2,52.0,0.0,52.0,0.0,\n");
    fs::write(dir.path().join("toy.csv"), bad).unwrap();
    let out = run_cli(&["run"], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rejected = fs::read_to_string(dir.path().join("out/rejected_rows.csv")).unwrap();
    assert_eq!(rejected.lines().count(), 3, "{rejected}");
    let run = json(&dir.path().join("out/run.json"));
    assert_eq!(run["ingest"]["rejected"], 2);
    assert_eq!(run["ingest"]["accepted"], 11);
}

#[test]
fn eval_of_exported_scores_reproduces_the_run_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), &format!("input = \"toy.csv\"\nmodels = [\"KI\", \"EWKI\"]\n{SPLIT}"));
    assert!(run_cli(&["run"], &cfg).status.success());
    let report = json(&dir.path().join("out/reports/EWKI.json"));

    let text = format!(
        "input = \"toy.csv\"\noutput_dir = \"evaluated\"\n{SPLIT}\n[eval]\nscores = \"out/scores/EWKI.csv\"\nthreshold = {}\n",
        report["threshold"]
    );
    let eval_cfg = dir.path().join("eval.toml");
    fs::write(&eval_cfg, text).unwrap();
    let out = run_cli(&["eval"], &eval_cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let again = json(&dir.path().join("evaluated/reports/EWKI.json"));
    for key in ["confusion", "precision", "recall", "f1", "auroc", "aupr"] {
        assert_eq!(again[key], report[key], "{key}");
    }
    assert_eq!(again["threshold_tuned_on"], Value::Null);
}

#[test]
fn score_command_writes_tables_without_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), &format!("input = \"toy.csv\"\nmodels = [\"WKI\", \"KIWKI\"]\n{SPLIT}"));
    let root = dir.path().join("scored");
    let out = run_cli(&["score", "--out", root.to_str().unwrap()], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(root.join("scores/WKI.csv").exists() && root.join("scores/KIWKI.csv").exists());
    assert!(!root.join("scores/KI.csv").exists());
    assert!(!root.join("reports").exists());
    let run = json(&root.join("run.json"));
    assert_eq!(run["universes"]["test"]["pairs"], 12);
}

#[test]
fn synth_honours_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("synth.toml");
    fs::write(&cfg, "[synth]\nseed = 1\nn_nodes = 40\nyears = [2020, 2022]\ntotal_movements = 300\n").unwrap();
    let gen = |out: &str, seed: Option<&str>| {
        let mut args = vec!["synth", "--out", out];
        if let Some(s) = seed {
            args.extend(["--seed-override", s]);
        }
        let o = run_cli(&args, &cfg);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(dir.path().join(out).join("movements.csv")).unwrap()
    };
    let a = gen(dir.path().join("a").to_str().unwrap(), None);
    let b = gen(dir.path().join("b").to_str().unwrap(), Some("1"));
    let c = gen(dir.path().join("c").to_str().unwrap(), Some("2"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let truth = json(&dir.path().join("c/truth.json"));
    assert_eq!(truth["seed"], 2);
    assert_eq!(truth["movements"], 300);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 301);
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["synthetic.toml", "reference.toml"] {
        let text = fs::read_to_string(root.join(name)).unwrap();
        let cfg: spatial_katz_cli::RunConfig = toml::from_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(cfg.split.is_some(), "{name}");
        if name == "reference.toml" {
            assert_eq!(cfg.katz, spatial_katz::katz::KatzConfig::default());
            assert_eq!(cfg.schema, Default::default());
        }
    }
}

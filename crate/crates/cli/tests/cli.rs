use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use wso_core::io::{file_digest, read_stack, sha256_hex};
use wso_core::maps::{JointMap, PredictionMap};

fn wso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wso")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = wso(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn dir_digests(dir: &Path) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), file_digest(&f).unwrap()))
        .collect();
    v.sort();
    v
}

/// Noiseless 80x80 phantom, 20 pure biopsies per gene A, dataset and a
/// linear model.
struct Fixture {
    _tmp: TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        std::fs::write(root.join("cfg.txt"), "width = 80\nheight = 80\nseed = 3\nnoise = 0\ntexture = 0\n").unwrap();
        ok(&["synth", "--config", p(&root.join("cfg.txt")), "--out", p(&root.join("stack"))]);
        let f = Fixture { _tmp: tmp, root };
        ok(&[
            "sample", "--stack", &f.manifest(), "--gene", "geneA", "--biopsies", "20", "--unlabeled", "20", "--normal", "20",
            "--purity", "1.0", "--min-separation", "2", "--seed", "4", "--out", &f.path("centers"),
        ]);
        ok(&["extract", "--stack", &f.manifest(), "--centers", &f.path("centers/centers.csv"), "--out", &f.path("data")]);
        ok(&["train", "--data", &f.path("data/dataset.csv"), "--out", &f.path("model"), "--kernel", "linear", "--c1", "10", "--gene", "geneA"]);
        f
    }

    fn path(&self, rel: &str) -> String {
        self.root.join(rel).to_str().unwrap().to_string()
    }

    fn manifest(&self) -> String {
        self.path("stack/stack.manifest")
    }
}

#[test]
fn synth_defaults_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["synth", "--out", p(&a)]);
    ok(&["synth", "--out", p(&b)]);
    assert_eq!(dir_digests(&a), dir_digests(&b));
    let stack = read_stack(&a.join("stack.manifest")).unwrap();
    assert_eq!(stack.channels.len(), 5);
    assert_eq!((stack.width(), stack.height()), (128, 128));
    for m in [&stack.brain, &stack.ce, &stack.ne, &stack.necrosis, &stack.contralateral] {
        assert!(!m.is_empty());
    }
    assert_eq!(stack.truth.len(), 2);
    let prov = std::fs::read_to_string(a.join("provenance.txt")).unwrap();
    assert!(prov.starts_with("schema_version = 1\ncommand = synth\n"));
}

#[test]
fn synth_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.txt");
    std::fs::write(&cfg, "width = 16\n").unwrap();
    let out = wso(&["synth", "--config", p(&cfg), "--out", p(&tmp.path().join("s"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("32"));
    std::fs::write(&cfg, "width = 64\ncolour = 3\n").unwrap();
    let out = wso(&["synth", "--config", p(&cfg), "--out", p(&tmp.path().join("s"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"colour\""));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(wso(&["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(wso(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(wso(&["--help"]).status.code(), Some(0));
}

#[test]
fn extract_shapes_and_errors() {
    let f = Fixture::new();
    let centers = "# schema: wso-centers/1\nrole,class,row,col\n".to_string()
        + &(0..10).map(|i| format!("unlabeled,NA,{},{}\n", 30 + i, 20)).collect::<String>();
    let cpath = f.root.join("ten.csv");
    std::fs::write(&cpath, &centers).unwrap();
    ok(&["extract", "--stack", &f.manifest(), "--centers", p(&cpath), "--out", &f.path("ten")]);
    let csv = std::fs::read_to_string(f.root.join("ten/dataset.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 11);
    assert!(lines.iter().all(|l| l.split(',').count() == 284));
    let manifest = std::fs::read_to_string(f.root.join("ten/features.manifest")).unwrap();
    let header: Vec<&str> = lines[0].split(',').skip(4).collect();
    for (i, line) in manifest.lines().enumerate() {
        assert_eq!(line.split_once(',').unwrap().0, i.to_string());
        assert_eq!(header[i], format!("f{i:03}"));
    }
    ok(&["extract", "--stack", &f.manifest(), "--centers", p(&cpath), "--out", &f.path("ten2")]);
    assert_eq!(dir_digests(&f.root.join("ten")), dir_digests(&f.root.join("ten2")));

    std::fs::write(&cpath, format!("{centers}normal,0,2,2\n")).unwrap();
    let out = wso(&["extract", "--stack", &f.manifest(), "--centers", p(&cpath), "--out", &f.path("bad")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 13"));
}

#[test]
fn train_cv_and_schema_errors() {
    let f = Fixture::new();
    let out = ok(&["train", "--data", &f.path("data/dataset.csv"), "--out", &f.path("m2"), "--kernel", "linear", "--c1", "10"]);
    assert!(out.contains("training_accuracy,1.000"), "{out}");
    let summary = ok(&["cv", "--data", &f.path("data/dataset.csv"), "--out", &f.path("cv"), "--kernel", "linear", "--c1", "10", "--folds", "10", "--repeats", "30"]);
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3);
    for (line, metric) in lines.iter().zip(["accuracy", "sensitivity", "specificity"]) {
        let (name, value) = line.split_once(',').unwrap();
        assert_eq!(name, metric);
        // "0.800 (0.013)"
        let (mean, std) = value.split_once(" (").unwrap();
        assert_eq!(mean.len(), 5);
        assert!(std.ends_with(')') && std.len() == 6);
    }

    let bad = f.root.join("bad.csv");
    let text = std::fs::read_to_string(f.root.join("data/dataset.csv")).unwrap();
    std::fs::write(&bad, text.replace("wso-dataset/1", "wso-dataset/7")).unwrap();
    assert_eq!(wso(&["train", "--data", p(&bad), "--out", &f.path("m3")]).status.code(), Some(3));
    let mut lines: Vec<&str> = text.lines().collect();
    let broken = lines[5].replacen("biopsy", "tumour", 1);
    lines[5] = &broken;
    std::fs::write(&bad, lines.join("\n")).unwrap();
    let out = wso(&["train", "--data", p(&bad), "--out", &f.path("m3")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 6"));
}

#[test]
fn tune_writes_report() {
    let f = Fixture::new();
    let out = ok(&[
        "tune", "--data", &f.path("data/dataset.csv"), "--out", &f.path("tune"), "--kernel", "linear", "--folds", "4",
        "--c1-grid", "0.1,1,10", "--c2-grid", "0.1,1", "--screen-threshold", "0.5",
    ]);
    assert!(out.starts_with("c1,"));
    let csv = std::fs::read_to_string(f.root.join("tune/tune.csv")).unwrap();
    assert!(csv.starts_with("# schema: wso-tune/1\n"));
    assert!(csv.lines().last().unwrap().starts_with("chosen,"));
}

#[test]
fn maps_joint_and_jobs() {
    let f = Fixture::new();
    let model = format!("geneA={}", f.path("model/model.txt"));
    let same = format!("geneB={}", f.path("model/model.txt"));
    ok(&["map", "--model", &model, "--model", &same, "--stack", &f.manifest(), "--out", &f.path("map1"), "--joint", "geneA", "geneB"]);
    ok(&["map", "--model", &model, "--model", &same, "--stack", &f.manifest(), "--out", &f.path("map3"), "--joint", "geneA", "geneB", "--jobs", "3"]);
    assert_eq!(dir_digests(&f.root.join("map1")), dir_digests(&f.root.join("map3")));

    let summary = std::fs::read_to_string(f.root.join("map1/map_geneA_summary.txt")).unwrap();
    let field = |k: &str| -> f64 {
        let line = summary.lines().find(|l| l.trim_start().starts_with(&format!("\"{k}\""))).unwrap();
        line.split(": ").nth(1).unwrap().trim_end_matches(',').parse().unwrap()
    };
    assert!((field("altered") + field("non_altered") + field("class0") - 1.0).abs() <= 1e-12);
    assert!(summary.contains(&sha256_hex(&std::fs::read(f.root.join("model/model.txt")).unwrap())));

    let joint = JointMap::from_csv(&std::fs::read_to_string(f.root.join("map1/joint_geneA_geneB.csv")).unwrap()).unwrap();
    assert!(joint.cells().iter().all(|&c| c == -1 || c == 0 || c == 3));
    let map = PredictionMap::from_csv(&std::fs::read_to_string(f.root.join("map1/map_geneA.csv")).unwrap()).unwrap();
    let pgm = std::fs::read(f.root.join("map1/map_geneA.pgm")).unwrap();
    assert_eq!(pgm.len(), "P5\n80 80\n255\n".len() + map.labels().len());
}

#[test]
fn map_rejects_layout_mismatch_and_retrains() {
    let f = Fixture::new();
    let text = std::fs::read_to_string(f.root.join("model/model.txt")).unwrap();
    let contrasts = "contrasts = T1+C,T2,MD,FA,rCBV";
    assert!(text.contains(contrasts));
    let other = "contrasts = A,B,C,D,E";
    let digest = wso_core::io::layout_digest(&["A", "B", "C", "D", "E"].map(String::from));
    let old_digest = wso_core::io::layout_digest(&["T1+C", "T2", "MD", "FA", "rCBV"].map(String::from));
    let swapped = text.replace(contrasts, other).replace(&old_digest, &digest);
    let bad = f.root.join("other.txt");
    std::fs::write(&bad, swapped).unwrap();
    let out = wso(&["map", "--model", &format!("geneA={}", p(&bad)), "--stack", &f.manifest(), "--out", &f.path("mm")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("digest"));

    let model = format!("geneA={}", f.path("model/model.txt"));
    ok(&["map", "--model", &model, "--stack", &f.manifest(), "--out", &f.path("re"), "--retrain", &f.path("data/dataset.csv"), "--retrain-count", "20", "--seed", "2"]);
    assert!(f.root.join("re/model_geneA.txt").exists());
    assert!(f.root.join("re/map_geneA.pgm").exists());
}

#[test]
fn explain_is_deterministic() {
    let f = Fixture::new();
    for (mode, dir) in [("exact", "e"), ("sampled", "s")] {
        for rep in ["1", "2"] {
            ok(&[
                "explain", "--model", &f.path("model/model.txt"), "--data", &f.path("data/dataset.csv"), "--out", &f.path(&format!("{dir}{rep}")),
                "--mode", mode, "--draws", "20", "--limit", "3", "--seed", "9",
            ]);
        }
        assert_eq!(dir_digests(&f.root.join(format!("{dir}1"))), dir_digests(&f.root.join(format!("{dir}2"))));
    }
    let csv = std::fs::read_to_string(f.root.join("s1/shap.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("biopsy@")).count(), 3);
    let out = wso(&["explain", "--model", &f.path("model/model.txt"), "--data", &f.path("data/dataset.csv"), "--out", &f.path("x"), "--aggregation", "abs-then-sum"]);
    assert_eq!(out.status.code(), Some(2));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_reproj");

const SMALL_CORPUS: &[&str] = &[
    "--labeled",
    "160",
    "--parallel",
    "240",
    "--test",
    "60",
    "--vocab-size",
    "60",
    "--positive-words",
    "8",
    "--negative-words",
    "8",
];

fn reproj(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("REPROJ_OUT_ROOT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, seed: &str) -> Output {
    let mut args = vec!["gen-synth", "--out", s(dir), "--seed", seed];
    args.extend_from_slice(SMALL_CORPUS);
    reproj(&args)
}

struct Fixture {
    tmp: TempDir,
    config: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let data = tmp.path().join("data");
        assert!(gen(&data, "3").status.success());
        let config = tmp.path().join("run.conf");
        let d = data.display();
        std::fs::write(
            &config,
            format!(
                "# tiny model\nembed_dim = 8\nsentence_hidden = 8\nreview_hidden = 8\nmax_sentences = 12\nmax_words = 6\n\
                 labeled_epochs = 2\nprojection_epochs = 2\npretrain_epochs = 1\njoint_epochs = 2\n\
                 labeled = {d}/train.src.jsonl\nparallel_source = {d}/parallel.src.txt\nparallel_target = {d}/parallel.tgt.txt\n\
                 source_test = {d}/test.src.jsonl\ntarget_test = {d}/test.tgt.jsonl\n"
            ),
        )
        .unwrap();
        Self { tmp, config }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.tmp.path().join(rel)
    }

    fn train(&self, out: &str, extra: &[&str]) -> Output {
        let out = self.path(out);
        let mut args = vec!["train", "--config", s(&self.config), "--out", s(&out)];
        args.extend_from_slice(extra);
        reproj(&args)
    }
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn gen_synth_same_seed_same_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(gen(&a, "7").status.success());
    assert!(gen(&b, "7").status.success());
    let ma = std::fs::read(a.join("manifest.json")).unwrap();
    assert_eq!(ma, std::fs::read(b.join("manifest.json")).unwrap());
    assert!(gen(&tmp.path().join("c"), "8").status.success());
    assert_ne!(ma, std::fs::read(tmp.path().join("c/manifest.json")).unwrap());
    assert_eq!(manifest(&a)["seed"], 7);
}

#[test]
fn invalid_noise_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = reproj(&["gen-synth", "--out", s(tmp.path()), "--noise", "1.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("manifest.json").exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(reproj(&[]).status.code(), Some(2));
    assert_eq!(reproj(&["train", "--no-such-flag", "1"]).status.code(), Some(2));
    assert_eq!(reproj(&["train", "--embed-dim", "wide"]).status.code(), Some(2));
    assert_eq!(reproj(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_unknown_key_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.conf");
    std::fs::write(&cfg, "embedding_size = 8\n").unwrap();
    let o = reproj(&["train", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("embedding_size"));
}

#[test]
fn missing_inputs_are_data_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = reproj(&[
        "train",
        "--labeled",
        "/nonexistent/train.jsonl",
        "--parallel-source",
        "/nonexistent/a.txt",
        "--parallel-target",
        "/nonexistent/b.txt",
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = reproj(&["train", "--out", s(tmp.path())]);
    assert_eq!(o.status.code(), Some(2), "missing required setting");
}

#[test]
fn divergence_is_numeric_error() {
    let f = Fixture::new();
    let o = f.train("nan", &["--learning-rate", "1e30"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn two_stage_records_freeze_epoch_and_stage1() {
    let f = Fixture::new();
    let o = f.train("ts", &["--regime", "two-stage"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = f.path("ts");
    let m = manifest(&dir);
    assert_eq!(m["results"]["freeze_epoch"], 2);
    assert_eq!(m["config"]["regime"], "two-stage");
    assert_eq!(m["seed"], 0);
    for name in ["model.ckpt", "stage1.ckpt", "losses.csv"] {
        assert!(dir.join(name).exists(), "{name}");
        assert!(m["outputs"][name].is_string(), "{name}");
    }
    assert_eq!(m["inputs"].as_object().unwrap().len(), 5);
    let csv = std::fs::read_to_string(dir.join("losses.csv")).unwrap();
    assert!(csv.starts_with("epoch,step,labeled_loss,projection_loss,total\n"));
}

#[test]
fn joint_alpha_zero_log_matches_labeled_only() {
    let f = Fixture::new();
    assert!(f.train("j", &["--regime", "joint", "--alpha", "0"]).status.success());
    assert!(f.train("l", &["--regime", "labeled-only"]).status.success());
    let a = std::fs::read(f.path("j/losses.csv")).unwrap();
    assert_eq!(a, std::fs::read(f.path("l/losses.csv")).unwrap());
    assert_eq!(
        std::fs::read(f.path("j/model.ckpt")).unwrap(),
        std::fs::read(f.path("l/model.ckpt")).unwrap()
    );
}

#[test]
fn evaluate_neighbors_interpolate() {
    let f = Fixture::new();
    assert!(f.train("ts", &["--regime", "two-stage"]).status.success());
    let model = f.path("ts/model.ckpt");
    let stage1 = f.path("ts/stage1.ckpt");
    let test = f.path("data/test.tgt.jsonl");

    let ev = f.path("ev");
    let o = reproj(&[
        "evaluate",
        "--checkpoint",
        s(&model),
        "--test",
        s(&test),
        "--lang",
        "tgt",
        "--out",
        s(&ev),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("accuracy"));
    let report = std::fs::read_to_string(ev.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("tp,fp,tn,fn,precision,recall,f1,accuracy"));
    let v: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(v[0] + v[1] + v[2] + v[3], 60.0);
    assert!((v[7] - (v[0] + v[2]) / 60.0).abs() < 1e-12);

    let ev1 = f.path("ev1");
    let o = reproj(&[
        "evaluate",
        "--checkpoint",
        s(&stage1),
        "--test",
        s(&test),
        "--lang",
        "tgt",
        "--out",
        s(&ev1),
    ]);
    assert!(o.status.success());
    let o = reproj(&[
        "evaluate",
        "--checkpoint",
        s(&model),
        "--test",
        s(&test),
        "--lang",
        "xx",
        "--out",
        s(&ev1),
    ]);
    assert_ne!(o.status.code(), Some(0));
    let missing = f.path("missing");
    let o = reproj(&[
        "evaluate",
        "--checkpoint",
        s(&f.path("none.ckpt")),
        "--test",
        s(&test),
        "--lang",
        "tgt",
        "--out",
        s(&missing),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!missing.exists(), "failed command left an output directory");

    let nb = f.path("nb");
    let o = reproj(&[
        "neighbors",
        "--checkpoint",
        s(&model),
        "--source-lang",
        "src",
        "--target-lang",
        "tgt",
        "-k",
        "10",
        "s0000",
        "s0001",
        "--out",
        s(&nb),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 20);
    for q in ["s0000", "s0001"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{q}\t"))).count(), 10);
    }
    let o = reproj(&[
        "neighbors",
        "--checkpoint",
        s(&model),
        "--source-lang",
        "src",
        "--target-lang",
        "tgt",
        "zzz",
        "--out",
        s(&missing),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!missing.exists());

    let ip = f.path("ip");
    let (a, b) = (ev.join("scores.jsonl"), ev1.join("scores.jsonl"));
    let o = reproj(&[
        "interpolate",
        "--dev-a",
        s(&a),
        "--dev-b",
        s(&b),
        "--dev-labels",
        s(&test),
        "--test-a",
        s(&a),
        "--test-b",
        s(&b),
        "--out",
        s(&ip),
    ]);
    assert!(o.status.success());
    let header = stdout(&o).lines().next().unwrap().to_string();
    assert!(header.starts_with("# lambda* = "), "{header}");
    let lambda: f64 = manifest(&ip)["results"]["lambda"].as_f64().unwrap();
    assert!(header.contains(&format!("{lambda:.2}")));
    let table = std::fs::read_to_string(ip.join("interpolated.tsv")).unwrap();
    assert_eq!(table.lines().next(), Some(header.as_str()));
    assert_eq!(table.lines().count(), 2 + 60);
}

#[test]
fn build_vocab_uses_env_out_root() {
    let f = Fixture::new();
    let root = f.path("root");
    let o = Command::new(BIN)
        .args(["build-vocab", "--config", s(&f.config)])
        .env("REPROJ_OUT_ROOT", &root)
        .output()
        .unwrap();
    assert!(o.status.success());
    let dir = root.join("build-vocab");
    assert!(dir.join("vocab.src.txt").exists());
    assert!(dir.join("vocab.tgt.txt").exists());
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn sweep_rows_match_grid() {
    let f = Fixture::new();
    let out = f.path("sw");
    let o = reproj(&[
        "sweep",
        "--config",
        s(&f.config),
        "--embed-dims",
        "4,8",
        "--encode-dims",
        "4,6,8",
        "--runs",
        "2",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("embed_dim,encode_dim,runs,mean_acc,std_acc"));
    assert_eq!(lines.count(), 6);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mcover::data::{write_idx, IdxDataset, Provenance};

fn mcover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcover"))
        .args(args)
        .env_remove("MCOVER_DATA")
        .output()
        .expect("binary runs")
}

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn header(csv: &str) -> String {
    format!("{}\n", csv.lines().next().unwrap())
}

const TINY_PERCEPTRON: &[&str] = &[
    "perceptron", "--n", "31", "--alpha", "1.2", "--m", "2", "--dest-s", "3", "--sperm", "4", "--tmax", "0.3",
    "--tmin", "0.1", "--dt", "0.05", "--trials", "3", "--timing", "false",
];

/// A 10-class 6x6 IDX pair under `dir/tiny`.
fn tiny_images(dir: &Path) -> PathBuf {
    let root = dir.join("tiny");
    std::fs::create_dir_all(&root).unwrap();
    for (prefix, count) in [("train", 60), ("t10k", 30)] {
        let labels: Vec<u8> = (0..count).map(|i| (i % 10) as u8).collect();
        let images: Vec<u8> = (0..count * 36)
            .map(|i| {
                let (img, px) = (i / 36, i % 36);
                if px % 10 == labels[img] as usize { 250 } else { ((i * 31) % 40) as u8 }
            })
            .collect();
        let ds = IdxDataset {
            rows: 6,
            cols: 6,
            images,
            labels,
            provenance: Provenance::synthetic(),
        };
        write_idx(
            &ds,
            root.join(format!("{prefix}-images-idx3-ubyte")),
            root.join(format!("{prefix}-labels-idx1-ubyte")),
        )
        .unwrap();
    }
    root
}

#[test]
fn perceptron_schema_and_reproducibility() {
    let a = mcover(TINY_PERCEPTRON);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let csv = String::from_utf8(a.stdout).unwrap();
    assert_eq!(header(&csv), golden("perceptron.header"));
    assert_eq!(csv.lines().count(), 4);
    let b = mcover(TINY_PERCEPTRON);
    assert_eq!(csv.as_bytes(), &b.stdout[..], "reruns must be byte-identical");
}

#[test]
fn committee_divergence_exits_3_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let o = mcover(&[
        "committee", "--n", "15", "--k", "3", "--m", "2", "--p-train", "20", "--p-test", "20", "--epochs", "2",
        "--batch", "10", "--trials", "2", "--lr", "inf", "--sperm", "3", "--dest-s", "4", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(header(&csv), golden("committee.header"));
    assert_eq!(csv.matches(",diverged,").count(), 2);
}

#[test]
fn committee_runs_clean() {
    let o = mcover(&[
        "committee", "--n", "15", "--k", "3", "--method", "sgd", "--p-train", "30", "--p-test", "30", "--epochs",
        "2", "--batch", "10", "--trials", "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().matches(",ok,").count(), 2);
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(mcover(&["perceptron", "--bogus", "1"]).status.code(), Some(2));
    assert_eq!(mcover(&["perceptron", "--set", "k=3"]).status.code(), Some(2));
    assert_eq!(mcover(&["perceptron", "--sigma", "-1"]).status.code(), Some(2));
    assert_eq!(mcover(&["committee", "--k", "4"]).status.code(), Some(2));
    assert_eq!(mcover(&["mlp", "--arch", "36,8,10"]).status.code(), Some(2), "no data dir");
    assert_eq!(mcover(&["perceptron", "--config", "/nonexistent.cfg"]).status.code(), Some(2));
    assert_eq!(mcover(&["sweep", "--model", "perceptron", "--param", "gamma", "--values", "1", "--out", "x.csv"]).status.code(), Some(2));
}

#[test]
fn config_file_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let mut args = TINY_PERCEPTRON.to_vec();
    args.extend(["--out", out.to_str().unwrap()]);
    assert!(mcover(&args).status.success());
    let cfg = dir.path().join("p.csv.cfg");
    let again = dir.path().join("q.csv");
    let o = mcover(&["perceptron", "--config", cfg.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn mlp_uses_the_data_root_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    tiny_images(dir.path());
    let ck = dir.path().join("net");
    let o = Command::new(env!("CARGO_BIN_EXE_mcover"))
        .args([
            "mlp", "--data", "tiny", "--arch", "36,8,10", "--blocks", "4,2", "--m", "3", "--epochs", "2", "--batch",
            "16", "--trials", "2", "--checkpoint", ck.to_str().unwrap(), "--nesterov",
        ])
        .env("MCOVER_DATA", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(header(&csv), golden("mlp.header"));
    let (_, nets) = mcover::mlp::checkpoint::load(dir.path().join("net.trial1.mcvr")).unwrap();
    assert_eq!(nets.len(), 3);
    assert_eq!(nets[0].dims(), vec![36, 8, 10]);
}

#[test]
fn sweep_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let long = dir.path().join("m.csv");
    let o = mcover(&[
        "sweep", "--model", "perceptron", "--param", "sigma", "--grid", "1:3:3", "--set", "n=31", "--set",
        "alpha=1.2", "--set", "dest_s=3", "--set", "tmax=0.3", "--set", "tmin=0.1", "--set", "dt=0.05", "--set",
        "trials=2", "--out", long.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(dir.path().join("m.summary.csv")).unwrap();
    assert_eq!(header(&summary), golden("summary.header"));
    assert_eq!(summary.lines().count(), 4);
    let long_csv = std::fs::read_to_string(&long).unwrap();
    assert!(long_csv.starts_with("sweep_param,sweep_value,"));
    assert_eq!(long_csv.lines().count(), 7);
    // summaries are derived from the long file alone
    let s = mcover(&["summarize", long.to_str().unwrap()]);
    assert!(s.status.success());
    assert_eq!(String::from_utf8(s.stdout).unwrap(), summary);
}

#[test]
fn shipped_configs_are_valid() {
    use mcover::harness::{ExperimentConfig, Model};
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let model: Model = text
            .lines()
            .find_map(|l| l.strip_prefix("model = "))
            .expect("config names its model")
            .parse()
            .unwrap();
        let mut cfg = ExperimentConfig::new(model);
        cfg.apply_file(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 4);
}

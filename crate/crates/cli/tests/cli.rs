use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cnnmrf::data::read_labels;
use cnnmrf::metrics::{confusion, oa};

fn cnnmrf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cnnmrf"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cnnmrf(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_scene(dir: &Path) {
    ok(
        dir,
        &[
            "synth", "--out-cube", "c.hsic", "--out-labels", "l.csv", "--height", "24", "--width", "24",
            "--bands", "12", "--classes", "3", "--smoothness", "6", "--seed", "4",
        ],
    );
}

const FAST: [&str; 10] = [
    "--set", "max_epochs=12", "--set", "initial_epochs=6", "--set", "period=3", "--set", "learning_rate=0.03",
    "--set", "batch_size=10",
];

fn run_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec!["run", "--cube", "c.hsic", "--labels", "l.csv", "--output", out, "--mu", "0.5"];
    args.extend_from_slice(&FAST);
    args.extend_from_slice(extra);
    args
}

#[test]
fn run_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_scene(dir);
    ok(dir, &run_args("a", &[]));
    ok(dir, &run_args("b", &[]));
    for file in ["metrics.csv", "checkpoints.csv", "loss.csv", "repeat-0/labels.csv", "repeat-0/labels.ppm"] {
        let a = fs::read(dir.join("a").join(file)).unwrap();
        let b = fs::read(dir.join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn reported_oa_matches_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_scene(dir);
    ok(dir, &run_args("out", &[]));
    let run = dir.join("out/repeat-0");
    let test = read_labels(run.join("test_labels.csv")).unwrap();
    let pred = read_labels(run.join("labels.csv")).unwrap();
    let recomputed = 100.0 * oa(&confusion(&test, &pred, 3).unwrap()).unwrap();
    let metrics = fs::read_to_string(dir.join("out/metrics.csv")).unwrap();
    let row = metrics.lines().nth(1).unwrap();
    let reported: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!((recomputed - reported).abs() < 1e-5, "{recomputed} vs {reported}");
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_scene(dir);
    fs::write(dir.join("run.cfg"), "# desk run\nmu = 20\nseed = 3\n").unwrap();
    let mut args = run_args("out", &["--config", "run.cfg", "--method", "cnn"]);
    args.retain(|a| *a != "--mu" && *a != "0.5");
    args.extend_from_slice(&["--mu", "5"]);
    ok(dir, &args);
    let echo = fs::read_to_string(dir.join("out/config.txt")).unwrap();
    assert!(echo.lines().any(|l| l == "mu = 5"), "{echo}");
    assert!(echo.lines().any(|l| l == "seed = 3"), "{echo}");
    assert!(echo.lines().any(|l| l == "method = cnn"), "{echo}");
}

#[test]
fn unknown_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("bad.cfg"), "muu = 20\n").unwrap();
    let out = cnnmrf(dir, &["run", "--config", "bad.cfg"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("muu"));

    let out = cnnmrf(dir, &["run", "--set", "mu=lots"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu"));
}

#[test]
fn stepwise_commands_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_scene(dir);
    let mut train = vec!["train", "--cube", "c.hsic", "--labels", "l.csv", "--network", "n.cnnw", "--epochs", "15"];
    train.extend_from_slice(&FAST);
    ok(dir, &train);
    ok(dir, &["classify", "--cube", "c.hsic", "--network", "n.cnnw", "--out", "p.prob", "--labels-out", "a.csv"]);
    for (method, out) in [("mrf", "mrf.csv"), ("median", "med.csv"), ("majority", "maj.csv")] {
        ok(dir, &["regularize", "--probmap", "p.prob", "--method", method, "--mu", "0.5", "--out", out]);
        let labels = read_labels(dir.join(out)).unwrap();
        assert_eq!((labels.height(), labels.width()), (24, 24));
    }
    // With no smoothing weight the MRF returns the argmax map.
    ok(dir, &["regularize", "--probmap", "p.prob", "--mu", "0", "--out", "zero.csv"]);
    assert_eq!(fs::read(dir.join("zero.csv")).unwrap(), fs::read(dir.join("a.csv")).unwrap());

    let report = ok(dir, &["evaluate", "--truth", "l.csv", "--pred", "mrf.csv"]);
    assert!(report.lines().any(|l| l.starts_with("OA")), "{report}");
    ok(dir, &["render", "--labels", "mrf.csv", "--out", "mrf.ppm"]);
    let ppm = fs::read(dir.join("mrf.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n24 24\n255\n"));
    assert_eq!(ppm.len(), b"P6\n24 24\n255\n".len() + 24 * 24 * 3);
}

#[test]
fn sweep_writes_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_scene(dir);
    let mut args = vec![
        "sweep", "--cube", "c.hsic", "--labels", "l.csv", "--output", "sw", "--method", "cnn", "--param", "patch_size",
        "--values", "3,5",
    ];
    args.extend_from_slice(&FAST);
    ok(dir, &args);
    let csv = fs::read_to_string(dir.join("sw/sweep_patch_size.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "parameter,value,oa,aa,kappa,argmax_oa");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("patch_size,3,"));

    let out = cnnmrf(dir, &["sweep", "--param", "depth", "--values", "5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("depth_preset"));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use osc::io::read_matrix;
use osc_cli::bench::{read_raw_csv, read_summary_csv, summarize};
use serde_json::Value;
use tempfile::TempDir;

fn osc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = osc(args);
    assert!(
        out.status.success(),
        "osc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn labels(path: &str) -> Vec<usize> {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.csv"), p(&dir, "b.csv"));
    ok(&["generate", "--seed", "7", "--out", &a]);
    ok(&["generate", "--seed", "7", "--out", &b]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(p(&dir, "a.labels.json")).unwrap(),
        fs::read(p(&dir, "b.labels.json")).unwrap()
    );
}

#[test]
fn generate_shapes_and_echo() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "x.csv");
    let run = ok(&[
        "generate", "--subspaces", "5", "--points", "20", "--dim", "100", "--out", &out,
    ]);
    let m = read_matrix(&out).unwrap();
    assert_eq!(m.shape(), (100, 100));
    let echoed: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(echoed["num_subspaces"], 5);
    assert_eq!(echoed["ambient_dim"], 100);
    assert_eq!(labels(&p(&dir, "x.labels.json")).len(), 100);
}

#[test]
fn generate_from_library_keeps_library_rows() {
    let dir = TempDir::new().unwrap();
    let lib = p(&dir, "spectra.csv");
    let rows: Vec<String> = (0..321)
        .map(|r| {
            (0..30)
                .map(|c| format!("{:?}", 0.1 + ((r * 31 + c * 17) % 97) as f64 / 97.0))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    fs::write(&lib, rows.join("\n")).unwrap();
    let out = p(&dir, "semi.json");
    ok(&["generate", "--library", &lib, "--out", &out, "--psnr", "30"]);
    assert_eq!(read_matrix(&out).unwrap().shape(), (321, 100));
}

#[test]
fn generate_rejects_bad_arguments() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "x.csv");
    assert_eq!(osc(&["generate", "--out", &out, "--subspaces", "0"]).status.code(), Some(2));
    assert_eq!(osc(&["generate", "--out", &out, "--psnr", "loud"]).status.code(), Some(2));
    assert_eq!(osc(&["generate"]).status.code(), Some(2));
}

#[test]
fn cluster_recovers_clean_segments() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "x.csv");
    ok(&["generate", "--seed", "3", "--out", &data]);
    let lab = p(&dir, "pred.json");
    let diag = p(&dir, "diag.json");
    ok(&[
        "cluster", &data, "--method", "osc-relaxed", "--lambda1", "0.1", "--lambda2", "1", "--mu",
        "1", "--k", "5", "--labels", &lab, "--diagnostics", &diag, "--truth",
        &p(&dir, "x.labels.json"),
    ]);
    let d: Value = serde_json::from_str(&fs::read_to_string(&diag).unwrap()).unwrap();
    assert_eq!(d["sce"], 0.0);
    assert_eq!(d["converged"], true);
    assert!(d["iterations"].as_u64().unwrap() > 0);
    assert!(d["solve_ms"].as_f64().unwrap() >= 0.0);
    assert_eq!(labels(&lab).len(), 100);
}

#[test]
fn cluster_estimates_k_and_honours_k_one() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "x.csv");
    ok(&["generate", "--seed", "4", "--out", &data]);
    let lab = p(&dir, "pred.json");
    let run = ok(&["cluster", &data, "--estimate-k", "eigengap", "--labels", &lab]);
    let d: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(d["k"], 5);

    ok(&["cluster", &data, "--method", "lrr-sim", "--k", "1", "--labels", &lab]);
    let l = labels(&lab);
    assert!(l.iter().all(|&v| v == l[0]));
}

#[test]
fn cluster_runs_every_method() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "x.json");
    ok(&["generate", "--seed", "5", "--subspaces", "2", "--points", "8", "--dim", "20", "--out", &data]);
    for method in ["osc-relaxed", "osc-exact", "ssc", "spatsc", "lrr-sim"] {
        let lab = p(&dir, &format!("{method}.json"));
        ok(&["cluster", &data, "--method", method, "--k", "2", "--labels", &lab]);
        assert_eq!(labels(&lab).len(), 16);
    }
}

#[test]
fn cluster_exit_codes() {
    let dir = TempDir::new().unwrap();
    let data = p(&dir, "x.csv");
    ok(&["generate", "--seed", "1", "--subspaces", "2", "--points", "4", "--dim", "6", "--out", &data]);
    let lab = p(&dir, "l.json");
    assert_eq!(osc(&["cluster", &data, "--method", "kmeans", "--labels", &lab]).status.code(), Some(2));
    assert_eq!(osc(&["cluster", &p(&dir, "missing.csv"), "--labels", &lab]).status.code(), Some(2));
    assert_eq!(osc(&["cluster", &data, "--lambda1", "-1", "--labels", &lab]).status.code(), Some(2));

    // entries near 1e154 overflow the first iteration
    let huge = p(&dir, "huge.csv");
    fs::write(&huge, "1e154,-2e154,3e154,5e153\n-1e154,4e154,2e154,-3e154\n2e154,1e154,-4e154,1e154").unwrap();
    let out = osc(&["cluster", &huge, "--no-normalize", "--k", "2", "--labels", &lab]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("diverged") && stderr.contains("\"config\""));
}

fn write_bench_config(dir: &TempDir, body: &str) -> String {
    let path = p(dir, "bench.json");
    fs::write(&path, body).unwrap();
    path
}

const SMALL_DATA: &str =
    r#""data": {"num_subspaces": 2, "points_per_subspace": 6, "ambient_dim": 12, "subspace_dim": 2}"#;

#[test]
fn bench_summary_matches_raw() {
    let dir = TempDir::new().unwrap();
    let cfg = write_bench_config(
        &dir,
        &format!(
            r#"{{"methods": ["osc-relaxed", "lrr-sim"], "psnr_grid": ["inf", 20], "repeats": 3,
                "master_seed": 11, {SMALL_DATA}}}"#
        ),
    );
    let out_dir = p(&dir, "out");
    ok(&["bench", &cfg, "--out-dir", &out_dir]);
    let raw = read_raw_csv(&Path::new(&out_dir).join("raw.csv")).unwrap();
    assert_eq!(raw.len(), 12);
    assert!(raw.iter().all(|r| r.error.is_none() && r.sce.is_some()));
    let summary = read_summary_csv(&Path::new(&out_dir).join("summary.csv")).unwrap();
    assert_eq!(summary.len(), 4);
    assert_eq!(summary, summarize(&raw));
    assert!(summary.iter().any(|s| s.psnr == "inf"));
    assert!(Path::new(&out_dir).join("resolved_config.json").exists());
    assert!(!Path::new(&out_dir).join("timing.csv").exists());
}

#[test]
fn bench_is_reproducible_and_single_cell_summary_is_the_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_bench_config(
        &dir,
        &format!(r#"{{"methods": ["ssc"], "psnr_grid": [30], "repeats": 1, {SMALL_DATA}}}"#),
    );
    let (a, b) = (p(&dir, "a"), p(&dir, "b"));
    ok(&["bench", &cfg, "--out-dir", &a]);
    ok(&["bench", &cfg, "--out-dir", &b]);
    let ra = read_raw_csv(&Path::new(&a).join("raw.csv")).unwrap();
    let rb = read_raw_csv(&Path::new(&b).join("raw.csv")).unwrap();
    let strip = |rows: &[osc_cli::bench::RawRow]| {
        rows.iter()
            .map(|r| (r.data_seed, r.noise_seed, r.sce, r.k))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&ra), strip(&rb));
    let s = read_summary_csv(&Path::new(&a).join("summary.csv")).unwrap();
    assert_eq!(s.len(), 1);
    let v = ra[0].sce;
    assert_eq!((s[0].min, s[0].max, s[0].median, s[0].mean), (v, v, v, v));
}

#[test]
fn bench_timing_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = write_bench_config(
        &dir,
        &format!(
            r#"{{"methods": ["osc-relaxed"], "psnr_grid": ["inf"], "repeats": 1, {SMALL_DATA},
                "timing": {{"methods": ["osc-relaxed", "osc-exact"], "sizes": [8, 12], "repeats": 2}}}}"#
        ),
    );
    let out_dir = p(&dir, "out");
    ok(&["bench", &cfg, "--out-dir", &out_dir]);
    let mut r = csv::Reader::from_path(Path::new(&out_dir).join("timing.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let headers = r.headers().unwrap().clone();
    let ms = headers.iter().position(|h| h == "mean_ms").unwrap();
    assert!(rows.iter().all(|row| row[ms].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn bench_rejects_bad_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_bench_config(&dir, r#"{"methods": ["nope"]}"#);
    assert_eq!(osc(&["bench", &cfg, "--out-dir", &p(&dir, "o")]).status.code(), Some(2));
    let cfg = write_bench_config(&dir, r#"{"repeats": 0}"#);
    assert_eq!(osc(&["bench", &cfg, "--out-dir", &p(&dir, "o")]).status.code(), Some(2));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn rgc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgc"))
        .args(args)
        .env("RGC_THREADS", "2")
        .output()
        .expect("spawn rgc")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a headerless CSV with one sample per column.
fn write_columns(path: &Path, cols: &[Vec<f64>]) {
    let m = cols[0].len();
    let mut text = String::new();
    for i in 0..m {
        let row: Vec<String> = cols.iter().map(|c| format!("{}", c[i])).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

fn write_labels(path: &Path, labels: &[(usize, usize)]) {
    let mut text = String::from("index,label\n");
    for (i, l) in labels {
        text.push_str(&format!("{i},{l}\n"));
    }
    fs::write(path, text).unwrap();
}

fn read_labels(path: &Path) -> Vec<usize> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().trim().parse().unwrap())
        .collect()
}

/// Reads a MatrixMarket array file into column vectors.
fn read_array(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('%') && !l.trim().is_empty());
    let dims: Vec<usize> = lines
        .next()
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    let (m, n) = (dims[0], dims[1]);
    let vals: Vec<f64> = lines.map(|l| l.trim().parse().unwrap()).collect();
    assert_eq!(vals.len(), m * n);
    vals.chunks(m).map(|c| c.to_vec()).collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Two well separated groups of `per` samples in 6 dimensions.
fn two_groups(per: usize) -> Vec<Vec<f64>> {
    let mut cols = Vec::new();
    for g in 0..2 {
        for j in 0..per {
            let col = (0..6)
                .map(|i| {
                    let centre = if i % 2 == g { 5.0 } else { 0.0 };
                    centre + 0.1 * (((i * 7 + j * 13 + g * 5) % 11) as f64 - 5.0) / 5.0
                })
                .collect();
            cols.push(col);
        }
    }
    cols
}

fn data_file(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("x.csv");
    write_columns(&path, &two_groups(8));
    path
}

#[test]
fn learn_graph_writes_decomposition_graph_and_manifest() {
    let dir = TempDir::new().unwrap();
    let x = data_file(&dir);
    let out = dir.path().join("out");
    let r = rgc(&[
        "learn-graph",
        "--input",
        s(&x),
        "--beta",
        "0.1",
        "--k",
        "3",
        "--rho",
        "1.1",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["D.mtx", "E.mtx", "S.mtx", "history.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(
        history.lines().next(),
        Some("iter,objective,res_x,res_z,rank_D,nnz_E")
    );

    let m = read_json(&out.join("manifest.json"));
    let alpha = m["config"]["alpha"].as_f64().unwrap();
    assert!((alpha - 1.0 / 16f64.sqrt()).abs() < 1e-15);
    assert_eq!(m["command"], "learn-graph");
    assert_eq!(m["converged"], true);
    assert_eq!(m["seed"], 0);
}

#[test]
fn rpca_mode_writes_no_graph() {
    let dir = TempDir::new().unwrap();
    let x = data_file(&dir);
    let out = dir.path().join("out");
    let r = rgc(&[
        "learn-graph",
        "--input",
        s(&x),
        "--beta",
        "0",
        "--mode",
        "rpca",
        "--rho",
        "1.1",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(out.join("D.mtx").exists());
    assert!(!out.join("S.mtx").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let x = data_file(&dir);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let r = rgc(&[
            "learn-graph",
            "--input",
            s(&x),
            "--beta",
            "0.1",
            "--k",
            "3",
            "--rho",
            "1.1",
            "--seed",
            "7",
            "--out-dir",
            s(out),
        ]);
        assert_eq!(code(&r), 0);
    }
    for f in ["D.mtx", "E.mtx", "S.mtx", "history.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn replay_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let x = data_file(&dir);
    let out = dir.path().join("out");
    let r = rgc(&[
        "learn-graph",
        "--input",
        s(&x),
        "--beta",
        "0.1",
        "--k",
        "3",
        "--rho",
        "1.1",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0);
    let before = fs::read(out.join("S.mtx")).unwrap();
    fs::remove_file(out.join("S.mtx")).unwrap();
    let r = rgc(&["replay", s(&out.join("manifest.json"))]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(fs::read(out.join("S.mtx")).unwrap(), before);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let x = data_file(&dir);
    let out = dir.path().join("out");

    let r = rgc(&[
        "learn-graph",
        "--input",
        s(&x),
        "--beta",
        "0.1",
        "--k",
        "3",
        "--max-iters",
        "2",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 2);
    assert!(out.join("D.mtx").exists());
    assert_eq!(read_json(&out.join("manifest.json"))["converged"], false);

    let missing = dir.path().join("missing.csv");
    let r = rgc(&[
        "learn-graph",
        "--input",
        s(&missing),
        "--beta",
        "0.1",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 1);
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing.csv"));

    let r = rgc(&["learn-graph", "--input", s(&x), "--out-dir", s(&out)]);
    assert_eq!(code(&r), 1, "beta has no default");

    let r = rgc(&[
        "learn-graph",
        "--input",
        s(&x),
        "--beta",
        "-1",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 1);

    let r = rgc(&["--help"]);
    assert_eq!(code(&r), 0);
}

/// Two fully connected blocks of `per` nodes, rows normalized.
fn write_block_graph(path: &Path, per: usize) {
    let n = 2 * per;
    let w = 1.0 / (per - 1) as f64;
    let mut entries = Vec::new();
    for i in 0..n {
        let block = i / per;
        for j in block * per..(block + 1) * per {
            if j != i {
                entries.push(format!("{} {} {}", i + 1, j + 1, w));
            }
        }
    }
    let text = format!(
        "%%MatrixMarket matrix coordinate real general\n{n} {n} {}\n{}\n",
        entries.len(),
        entries.join("\n")
    );
    fs::write(path, text).unwrap();
}

#[test]
fn cluster_on_saved_graph() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("S.mtx");
    write_block_graph(&g, 5);
    // Cluster ids are arbitrary; truth uses the opposite naming.
    let truth = dir.path().join("truth.csv");
    write_labels(&truth, &(0..10).map(|i| (i, 1 - i / 5)).collect::<Vec<_>>());

    let out = dir.path().join("scored");
    let r = rgc(&[
        "cluster",
        "--graph",
        s(&g),
        "--clusters",
        "2",
        "--truth",
        s(&truth),
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let labels = read_labels(&out.join("labels.csv"));
    assert_eq!(labels.len(), 10);
    assert!(labels[..5].iter().all(|&l| l == labels[0]));
    assert!(labels[5..].iter().all(|&l| l == labels[5]));
    assert_ne!(labels[0], labels[5]);

    let metrics = read_json(&out.join("metrics.json"));
    let keys: Vec<&String> = metrics.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["acc", "nmi", "purity"]);
    for k in ["acc", "nmi", "purity"] {
        assert_eq!(metrics[k].as_f64(), Some(1.0), "{k}");
    }

    let out = dir.path().join("unscored");
    let r = rgc(&[
        "cluster",
        "--graph",
        s(&g),
        "--clusters",
        "2",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0);
    assert!(out.join("labels.csv").exists());
    assert!(!out.join("metrics.json").exists());
}

#[test]
fn cluster_learns_graph_from_data() {
    let dir = TempDir::new().unwrap();
    let x = data_file(&dir);
    let truth = dir.path().join("truth.csv");
    write_labels(&truth, &(0..16).map(|i| (i, i / 8)).collect::<Vec<_>>());
    let out = dir.path().join("out");
    let r = rgc(&[
        "cluster",
        "--input",
        s(&x),
        "--beta",
        "0.1",
        "--k",
        "3",
        "--rho",
        "1.1",
        "--clusters",
        "2",
        "--truth",
        s(&truth),
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(
        read_json(&out.join("metrics.json"))["acc"].as_f64(),
        Some(1.0)
    );

    let r = rgc(&[
        "cluster",
        "--input",
        s(&x),
        "--beta",
        "0",
        "--mode",
        "rpca",
        "--clusters",
        "2",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 1, "rpca learns no graph");
}

#[test]
fn ssl_propagates_one_label_per_component() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("S.mtx");
    write_block_graph(&g, 5);
    let labels = dir.path().join("labels.csv");
    write_labels(&labels, &[(0, 0), (9, 1)]);
    let truth = dir.path().join("truth.csv");
    write_labels(&truth, &(0..10).map(|i| (i, i / 5)).collect::<Vec<_>>());
    let out = dir.path().join("out");

    let r = rgc(&[
        "ssl",
        "--graph",
        s(&g),
        "--labels",
        s(&labels),
        "--lambda",
        "0.1",
        "--truth",
        s(&truth),
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(
        read_labels(&out.join("labels.csv")),
        [0, 0, 0, 0, 0, 1, 1, 1, 1, 1]
    );
    let metrics = read_json(&out.join("metrics.json"));
    assert_eq!(metrics["acc"].as_f64(), Some(1.0));
    assert_eq!(metrics["scored"], 8);
    let soft = fs::read_to_string(out.join("soft_labels.csv")).unwrap();
    assert_eq!(soft.lines().count(), 10);

    let r = rgc(&[
        "ssl",
        "--graph",
        s(&g),
        "--labels",
        s(&labels),
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 1, "lambda is required");

    let empty = dir.path().join("none.csv");
    write_labels(&empty, &[]);
    let r = rgc(&[
        "ssl",
        "--graph",
        s(&g),
        "--labels",
        s(&empty),
        "--lambda",
        "0.1",
        "--classes",
        "2",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 1, "no labeled samples");
}

fn write_pgm(path: &Path, w: usize, h: usize, pixels: &[u8]) {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    fs::write(path, bytes).unwrap();
}

#[test]
fn recover_static_background_from_frames() {
    let dir = TempDir::new().unwrap();
    let frames = dir.path().join("frames");
    fs::create_dir(&frames).unwrap();
    let (w, h, count) = (10usize, 10usize, 16usize);
    let background: Vec<u8> = (0..w * h)
        .map(|p| 60 + ((p % w) * 8 + (p / w) * 5) as u8)
        .collect();
    for f in 0..count {
        let mut px = background.clone();
        // A 2x2 bright blob moving across the frame.
        let (bx, by) = ((f * 3) % (w - 1), (f * 2) % (h - 1));
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            px[(by + dy) * w + bx + dx] = 255;
        }
        write_pgm(&frames.join(format!("frame{f:02}.pgm")), w, h, &px);
    }
    let out = dir.path().join("out");
    let r = rgc(&[
        "recover",
        "--input",
        s(&frames),
        "--beta",
        "0.01",
        "--k",
        "3",
        "--max-iters",
        "1000",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));

    let bg: Vec<f64> = background.iter().map(|&v| v as f64 / 255.0).collect();
    let bg_norm = bg.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d = read_array(&out.join("D.mtx"));
    assert_eq!(d.len(), count);
    for (f, col) in d.iter().enumerate() {
        let err = col
            .iter()
            .zip(&bg)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(
            err / bg_norm < 1e-2,
            "frame {f}: relative error {}",
            err / bg_norm
        );
    }
    for sub in ["D_images", "E_images"] {
        assert_eq!(fs::read_dir(out.join(sub)).unwrap().count(), count, "{sub}");
    }
    assert!(out.join("D_images/D_frame00.png").exists());
}

#[test]
fn recover_clean_low_rank_data_leaves_e_near_zero() {
    let dir = TempDir::new().unwrap();
    let x = dir.path().join("x.csv");
    // Rank two, no corruption.
    let cols: Vec<Vec<f64>> = (0..20)
        .map(|j| {
            let (a, b) = ((j as f64 * 0.37).sin(), (j as f64 * 0.11).cos());
            (0..15)
                .map(|i| a * (1.0 + i as f64 * 0.2) + b * ((i % 4) as f64 - 1.5))
                .collect()
        })
        .collect();
    write_columns(&x, &cols);
    let out = dir.path().join("out");
    let r = rgc(&[
        "recover",
        "--input",
        s(&x),
        "--beta",
        "0",
        "--mode",
        "rpca",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let e = read_array(&out.join("E.mtx"));
    let e1: f64 = e.iter().flatten().map(|v| v.abs()).sum();
    let x1: f64 = cols.iter().flatten().map(|v| v.abs()).sum();
    assert!(e1 / x1 < 1e-3, "||E||_1 / ||X||_1 = {}", e1 / x1);
}

#[test]
fn metrics_command() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = dir.path().join("out");

    write_labels(&a, &[(0, 0), (1, 0), (2, 1), (3, 2)]);
    let r = rgc(&[
        "metrics",
        "--pred",
        s(&a),
        "--truth",
        s(&a),
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0);
    let m = read_json(&out.join("metrics.json"));
    for k in ["acc", "nmi", "purity"] {
        assert_eq!(m[k].as_f64(), Some(1.0), "{k}");
    }

    write_labels(&a, &[(0, 0), (1, 0), (2, 1), (3, 1)]);
    write_labels(&b, &[(0, 0), (1, 1), (2, 0), (3, 1)]);
    let r = rgc(&[
        "metrics",
        "--pred",
        s(&a),
        "--truth",
        s(&b),
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0);
    let printed: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(printed["acc"].as_f64(), Some(0.5));
    assert!(printed["nmi"].as_f64().unwrap().abs() < 1e-12);

    write_labels(&b, &[]);
    let r = rgc(&[
        "metrics",
        "--pred",
        s(&a),
        "--truth",
        s(&b),
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 1);

    write_labels(&b, &[(0, 0), (1, 1), (2, 0)]);
    let r = rgc(&[
        "metrics",
        "--pred",
        s(&a),
        "--truth",
        s(&b),
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 1, "length mismatch");
}

#[test]
fn ssl_keeps_given_labels_at_large_lambda() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("S.mtx");
    write_block_graph(&g, 5);
    // Labels that disagree with the block structure.
    let given: Vec<usize> = (0..10).map(|i| i % 2).collect();
    let labels = dir.path().join("labels.csv");
    write_labels(
        &labels,
        &given.iter().copied().enumerate().collect::<Vec<_>>(),
    );
    let out = dir.path().join("out");
    let r = rgc(&[
        "ssl",
        "--graph",
        s(&g),
        "--labels",
        s(&labels),
        "--lambda",
        "1e6",
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(read_labels(&out.join("labels.csv")), given);
}

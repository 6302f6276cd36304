use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hj-sweep"))
        .args(args)
        .env_remove("HJ_SWEEP_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(Result::unwrap).collect()
}

fn column(path: &Path, name: &str) -> usize {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().position(|h| h == name).unwrap()
}

#[test]
fn lists_every_builtin_problem() {
    let o = hj(&["list-problems"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for p in [
        "ex1_",
        "ex2_",
        "ex3_",
        "ex4_",
        "ex5_",
        "ex6a_",
        "ex6b_",
        "ex7_",
        "ex8_pwave",
        "ex8_svwave",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(p)),
            "{p} missing from\n{text}"
        );
    }
}

#[test]
fn usage_errors_exit_64() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let cases: &[&[&str]] = &[
        &["run", "--problem", "ex99", "--out", out],
        &["run", "--problem", "ex4", "--n", "40,40", "--out", out],
        &["run", "--problem", "ex4", "--n", "80,40", "--out", out],
        &["run", "--problem", "ex4", "--n", "10,20", "--out", out],
        &["run", "--problem", "ex4", "--cfl", "-1", "--out", out],
        &["run", "--n", "20", "--out", out],
        &[
            "run",
            "--problem",
            "ex4",
            "--scheme",
            "leapfrog",
            "--out",
            out,
        ],
        &["scan-cfl", "--problem", "ex4", "--n", "20", "--out", out],
        &[
            "scan-cfl",
            "--problem",
            "ex4",
            "--n",
            "20",
            "--cfl",
            "1,1",
            "--out",
            out,
        ],
        &["frobnicate"],
    ];
    for args in cases {
        let o = hj(args);
        assert_eq!(code(&o), 64, "{args:?}: {}", stderr(&o));
    }
    assert!(
        fs::read_dir(dir.path()).unwrap().next().is_none(),
        "usage errors must not write output"
    );
}

#[test]
fn help_exits_zero() {
    assert_eq!(code(&hj(&["--help"])), 0);
    assert_eq!(code(&hj(&["run", "--help"])), 0);
}

#[test]
fn bad_worker_count_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hj-sweep"))
        .args(["run", "--problem", "ex4", "--n", "20", "--out"])
        .arg(dir.path())
        .env("HJ_SWEEP_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
    assert!(stderr(&o).contains("HJ_SWEEP_WORKERS"));
}

#[test]
fn run_writes_table_histories_and_manifest() {
    let dir = TempDir::new().unwrap();
    let o = hj(&[
        "run",
        "--problem",
        "ex4",
        "--n",
        "20,40",
        "--stride",
        "10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let table = dir.path().join("convergence.csv");
    let rows = csv_rows(&table);
    assert_eq!(rows.len(), 2);
    let (n, status, l1, order, l1_full) = (
        column(&table, "n"),
        column(&table, "status"),
        column(&table, "l1"),
        column(&table, "order_l1"),
        column(&table, "l1_full"),
    );
    assert_eq!(&rows[0][n], "20");
    assert_eq!(&rows[1][n], "40");
    assert!(rows.iter().all(|r| &r[status] == "converged"));
    assert_eq!(&rows[0][order], "");
    let order: f64 = rows[1][order].parse().unwrap();
    assert!(order > 4.0, "observed order {order}");
    // The short column is the full one rounded to three digits.
    for r in &rows {
        let full: f64 = r[l1_full].parse().unwrap();
        let short: f64 = r[l1].parse().unwrap();
        assert!((full - short).abs() <= 5e-3 * full, "{full} vs {short}");
        assert!(r[l1].contains("e-"));
    }

    for n in [20, 40] {
        let text = fs::read_to_string(dir.path().join(format!("history_n{n}_cfl1.jsonl"))).unwrap();
        let lines: Vec<Value> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert!(lines.len() > 2);
        for key in ["iteration", "delta", "residual", "l1_error"] {
            assert!(lines[0].get(key).is_some(), "history line lacks {key}");
        }
        let its: Vec<u64> = lines
            .iter()
            .map(|l| l["iteration"].as_u64().unwrap())
            .collect();
        assert!(its.windows(2).all(|w| w[0] < w[1]));
    }

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["problem"], "ex4_point_source");
    assert_eq!(
        manifest["config"]["mesh_ladder"],
        serde_json::json!([20, 40])
    );
    let hash = manifest["input_hash"].as_str().unwrap();
    assert!(hash.starts_with("sha256:") && hash.len() == 7 + 64);
    assert_eq!(manifest["runs"].as_array().unwrap().len(), 2);
    assert!(manifest["runs"][0]["wall_time"].as_f64().is_some());
    assert!(dir.path().join("timing.csv").exists());
}

#[test]
fn reruns_give_identical_tables() {
    let run = |workers: &str| {
        let dir = TempDir::new().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_hj-sweep"))
            .args([
                "scan-cfl",
                "--problem",
                "ex7",
                "--n",
                "20,30",
                "--cfl",
                "0.8,1",
                "--out",
            ])
            .arg(dir.path())
            .env("HJ_SWEEP_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
        let manifest: Value = serde_json::from_slice(&read("manifest.json")).unwrap();
        (
            read("convergence.csv"),
            read("scan.csv"),
            manifest["input_hash"].clone(),
        )
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_eq!(a, run("3"));
}

#[test]
fn input_hash_tracks_the_configuration() {
    let hash = |tol: &str| {
        let dir = TempDir::new().unwrap();
        let o = hj(&[
            "run",
            "--problem",
            "ex7",
            "--n",
            "20",
            "--tol",
            tol,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(code(&o) <= 2);
        let m: Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        m["input_hash"].as_str().unwrap().to_owned()
    };
    assert_eq!(hash("1e-12"), hash("1e-12"));
    assert_ne!(hash("1e-12"), hash("1e-10"));
}

#[test]
fn scan_reports_divergence_and_the_fastest_cfl() {
    let dir = TempDir::new().unwrap();
    let o = hj(&[
        "scan-cfl",
        "--problem",
        "ex4",
        "--n",
        "24",
        "--cfl",
        "1,3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged at node"));

    let scan = dir.path().join("scan.csv");
    let rows = csv_rows(&scan);
    let (cfl, status, fastest, l1) = (
        column(&scan, "cfl"),
        column(&scan, "status"),
        column(&scan, "fastest"),
        column(&scan, "l1"),
    );
    let row = |c: &str| rows.iter().find(|r| &r[cfl] == c).unwrap();
    assert_eq!(&row("1")[status], "converged");
    assert_eq!(&row("1")[fastest], "true");
    assert_eq!(&row("3")[status], "diverged");
    assert_eq!(&row("3")[fastest], "false");
    assert_eq!(&row("3")[l1], "");
    assert!(String::from_utf8_lossy(&o.stdout).contains("fastest converging cfl = 1"));
}

#[test]
fn iteration_cap_exits_2() {
    let dir = TempDir::new().unwrap();
    let o = hj(&[
        "run",
        "--problem",
        "ex4",
        "--n",
        "20",
        "--max-iter",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    let table = dir.path().join("convergence.csv");
    let rows = csv_rows(&table);
    assert_eq!(&rows[0][column(&table, "status")], "not_converged");
    // The cap is checked between four-pass cycles.
    assert_eq!(&rows[0][column(&table, "iterations")], "8");
}

#[test]
fn problem_file_matches_builtin() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("quad.toml");
    fs::write(
        &file,
        r#"
name = "quad"
domain = [-1.0, 1.0, -1.0, 1.0]
hamiltonian = "eikonal"
f = "sqrt(x^2 + y^2)"
exact = "(x^2 + y^2) / 2"
gamma_points = [[0.0, 0.0]]

[[pinned_box]]
center = [0.0, 0.0]
half_h = 2.0
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_hj-sweep"))
        .args(["run", "--n", "20,30", "--problem-file"])
        .arg(&file)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = out.join("convergence.csv");
    let l1 = column(&table, "l1_full");
    for r in csv_rows(&table) {
        let e: f64 = r[l1].parse().unwrap();
        assert!(e < 1e-4, "quadratic solution error {e}");
    }
    let m: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["problem"], "quad");
    assert!(m["config"]["problem_file"]
        .as_str()
        .unwrap()
        .ends_with("quad.toml"));
}

#[test]
fn malformed_problem_file_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("bad.toml");
    fs::write(&file, "name = \"bad\"\ndomain = [0.0, 1.0]\nf = \"1 +\"\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hj-sweep"))
        .args(["run", "--n", "20", "--problem-file"])
        .arg(&file)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
    assert!(!dir.path().join("out").exists());
}

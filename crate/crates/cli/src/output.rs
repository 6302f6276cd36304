//! Tables, histories and the run manifest.
//!
//! Every CSV cell is a pure function of the configuration, so reruns give
//! byte-identical tables. Wall-clock times only appear in `timing.csv` and
//! the manifest.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::study::{fastest, ProblemSource, RunConfig, RunRecord};

/// Three significant digits with a two-digit exponent, `3.65e-06`.
pub fn sci3(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn opt(x: Option<f64>, f: impl Fn(f64) -> String) -> String {
    x.map(f).unwrap_or_default()
}

fn full(x: f64) -> String {
    format!("{x:e}")
}

fn order2(x: f64) -> String {
    format!("{x:.2}")
}

pub fn history_file_name(r: &RunRecord) -> String {
    format!("history_n{}_cfl{}.jsonl", r.n, r.cfl)
}

pub fn print_table(config: &RunConfig, records: &[RunRecord]) {
    println!(
        "{} {} {} (tol {:e})",
        config.problem.name, config.scheme, config.mode, config.tol
    );
    println!(
        "{:>6} {:>5} {:>10} {:>6} {:>10} {:>6} {:>7} {:>9}  status",
        "cfl", "N", "L1", "order", "Linf", "order", "iter", "time[s]"
    );
    for r in records {
        println!(
            "{:>6} {:>5} {:>10} {:>6} {:>10} {:>6} {:>7} {:>9.3}  {}",
            r.cfl,
            r.n,
            opt(r.l1, sci3),
            opt(r.order_l1, order2),
            opt(r.linf, sci3),
            opt(r.order_linf, order2),
            r.iterations,
            r.wall_time,
            r.status.label()
        );
    }
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

fn write_history(path: &Path, r: &RunRecord) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for c in &r.history {
        let line = json!({
            "iteration": c.iteration,
            "delta": c.delta,
            "residual": c.residual,
            "l1_error": c.l1_error,
        });
        writeln!(w, "{line}")?;
    }
    w.flush()
}

/// Configuration as echoed in the manifest and hashed.
fn config_echo(config: &RunConfig) -> Value {
    let (problem, file) = match &config.source {
        ProblemSource::Builtin(name) => (name.clone(), Value::Null),
        ProblemSource::File { path, .. } => (
            config.problem.name.clone(),
            json!(path.display().to_string()),
        ),
    };
    json!({
        "problem": problem,
        "problem_file": file,
        "scheme": config.scheme.name(),
        "mesh_ladder": config.ladder,
        "cfl": config.cfls,
        "mode": config.mode.to_string(),
        "tol": config.tol,
        "max_iter": config.max_iter,
        "history_stride": config.stride,
    })
}

/// SHA-256 over a git-style blob header and `payload`.
pub fn content_hash(payload: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", payload.len()).as_bytes());
    h.update(payload);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn input_hash(config: &RunConfig) -> String {
    let mut payload = serde_json::to_vec(&config_echo(config)).expect("JSON values serialise");
    if let ProblemSource::File { contents, .. } = &config.source {
        payload.push(0);
        payload.extend_from_slice(contents);
    }
    content_hash(&payload)
}

pub fn write_study(config: &RunConfig, records: &[RunRecord], command: &str) -> io::Result<()> {
    fs::create_dir_all(&config.out)?;
    let header = [
        "cfl",
        "n",
        "status",
        "iterations",
        "l1",
        "order_l1",
        "linf",
        "order_linf",
        "l1_full",
        "order_l1_full",
        "linf_full",
        "order_linf_full",
        "final_delta",
        "hweno_evaluations",
        "linear_evaluations",
    ];
    write_csv(
        &config.out.join("convergence.csv"),
        &header,
        records.iter().map(|r| {
            vec![
                r.cfl.to_string(),
                r.n.to_string(),
                r.status.label().into(),
                r.iterations.to_string(),
                opt(r.l1, sci3),
                opt(r.order_l1, order2),
                opt(r.linf, sci3),
                opt(r.order_linf, order2),
                opt(r.l1, full),
                opt(r.order_l1, full),
                opt(r.linf, full),
                opt(r.order_linf, full),
                full(r.final_delta),
                r.hweno_evaluations.to_string(),
                r.linear_evaluations.to_string(),
            ]
        }),
    )?;
    write_csv(
        &config.out.join("timing.csv"),
        &["cfl", "n", "wall_time"],
        records.iter().map(|r| {
            vec![
                r.cfl.to_string(),
                r.n.to_string(),
                format!("{:.6}", r.wall_time),
            ]
        }),
    )?;
    for r in records {
        write_history(&config.out.join(history_file_name(r)), r)?;
    }
    let manifest = json!({
        "tool": "hj-sweep",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config_echo(config),
        "input_hash": format!("sha256:{}", input_hash(config)),
        "runs": records.iter().map(|r| json!({
            "n": r.n,
            "cfl": r.cfl,
            "status": r.status.label(),
            "iterations": r.iterations,
            "wall_time": r.wall_time,
            "history": history_file_name(r),
        })).collect::<Vec<_>>(),
    });
    let mut w = BufWriter::new(File::create(config.out.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()
}

/// `scan.csv`: one row per run, with `fastest` marking the cheapest
/// converged CFL number on each mesh.
pub fn write_scan_summary(config: &RunConfig, records: &[RunRecord]) -> io::Result<()> {
    let header = [
        "n",
        "cfl",
        "status",
        "iterations",
        "evaluations",
        "final_delta",
        "l1",
        "linf",
        "fastest",
    ];
    let rows = records.iter().map(|r| {
        let best = fastest(records, r.n).is_some_and(|c| c.to_bits() == r.cfl.to_bits());
        vec![
            r.n.to_string(),
            r.cfl.to_string(),
            r.status.label().into(),
            r.iterations.to_string(),
            r.evaluations().to_string(),
            full(r.final_delta),
            opt(r.l1, sci3),
            opt(r.linf, sci3),
            best.to_string(),
        ]
    });
    write_csv(&config.out.join("scan.csv"), &header, rows)?;
    for &n in &config.ladder {
        match fastest(records, n) {
            Some(c) => println!("N={n}: fastest converging cfl = {c}"),
            None => println!("N={n}: no cfl converged"),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_significant_digits() {
        assert_eq!(sci3(3.65e-6), "3.65e-06");
        assert_eq!(sci3(5.7512e-8), "5.75e-08");
        assert_eq!(sci3(1.0), "1.00e+00");
        assert_eq!(sci3(123456.0), "1.23e+05");
        assert_eq!(sci3(0.0), "0.00e+00");
        assert_eq!(sci3(-2.5e-11), "-2.50e-11");
    }

    #[test]
    fn hash_matches_git_blob_construction() {
        // printf 'blob 5\0hello' | sha256sum
        assert_eq!(
            content_hash(b"hello"),
            "8aec4e4876f854f688d0ebfc8f37598f38e5fd6903cccc850ca36591175aeb60"
        );
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }
}

//! Problems described in a TOML file.
//!
//! ```toml
//! name = "ring"
//! domain = [-1.0, 1.0, -1.0, 1.0]
//! hamiltonian = "eikonal"          # or "qp" / "qsv" together with `medium`
//! # medium = [15.0638, 10.8373, 1.6381, 3.1258]   # a11, a33, a13, a44
//! f = "1"                          # expression in x and y
//! # f_raster = "speed.csv"         # node values on a uniform grid over the domain
//! exact = "abs(sqrt(x^2 + y^2) - 0.5)"
//! # boundary = "0"                 # pinned values, defaults to `exact`
//! gamma_distance = "sqrt(x^2 + y^2) - 0.5"
//! # gamma_points = [[0.0, 0.0]]
//!
//! [[pinned_box]]
//! center = [0.0, 0.0]
//! half = 0.15                      # or half_h = 1.5 (multiples of h)
//!
//! [mask]
//! inside = [-0.9, 0.9, -0.9, 0.9]
//! outside = [[-0.15, 0.15, -0.15, 0.15]]
//! ```
//!
//! Raster files hold comma- or whitespace-separated values, one row per `y`
//! level from `ymin` upward, sampled at the nodes of a uniform grid spanning
//! the domain; `f` is interpolated bilinearly.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use exmex::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use super::{HamiltonianSpec, PinnedBox, ProblemSpec, ScalarFn};
use crate::grid::{GammaSet, Rect};
use crate::hamiltonian::{ContinuousHamiltonian, ElasticMedium, WaveMode};

#[derive(Debug, Error)]
pub enum ProblemFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed problem file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("field `{field}`: {message}")]
    Expression { field: String, message: String },
    #[error("raster {path}: {message}")]
    Raster { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSpec {
    name: String,
    #[serde(default)]
    summary: String,
    domain: [f64; 4],
    #[serde(default = "default_hamiltonian")]
    hamiltonian: String,
    medium: Option<[f64; 4]>,
    f: Option<String>,
    f_raster: Option<PathBuf>,
    exact: Option<String>,
    boundary: Option<String>,
    #[serde(default)]
    gamma_points: Vec<[f64; 2]>,
    gamma_distance: Option<String>,
    #[serde(default)]
    pinned_box: Vec<BoxSpec>,
    mask: Option<MaskSpec>,
}

fn default_hamiltonian() -> String {
    "eikonal".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxSpec {
    center: [f64; 2],
    half: Option<f64>,
    half_h: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaskSpec {
    inside: Option<[f64; 4]>,
    #[serde(default)]
    outside: Vec<[f64; 4]>,
}

fn rect(r: [f64; 4]) -> Rect {
    Rect::new(r[0], r[1], r[2], r[3])
}

/// Compiles an expression in `x` and `y`.
pub fn compile_expression(field: &str, text: &str) -> Result<ScalarFn, ProblemFileError> {
    let err = |message: String| ProblemFileError::Expression {
        field: field.into(),
        message,
    };
    let expr = exmex::parse::<f64>(text).map_err(|e| err(e.to_string()))?;
    let slots = expr
        .var_names()
        .iter()
        .map(|v| match v.as_str() {
            "x" => Ok(0usize),
            "y" => Ok(1usize),
            other => Err(err(format!(
                "unknown variable `{other}`, only x and y are bound"
            ))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    // surface evaluation errors now rather than inside the solver
    let args: Vec<f64> = slots.iter().map(|_| 0.5).collect();
    expr.eval(&args).map_err(|e| err(e.to_string()))?;
    Ok(Arc::new(move |x, y| {
        let xy = [x, y];
        let args: Vec<f64> = slots.iter().map(|&s| xy[s]).collect();
        expr.eval(&args).unwrap_or(f64::NAN)
    }))
}

/// Bilinear interpolant of node values on a uniform grid over `domain`.
pub fn raster_interpolant(domain: Rect, rows: Vec<Vec<f64>>) -> Result<ScalarFn, String> {
    let ny = rows.len();
    let nx = rows.first().map_or(0, Vec::len);
    if nx < 2 || ny < 2 {
        return Err(format!(
            "raster needs at least 2 x 2 values, got {nx} x {ny}"
        ));
    }
    if let Some(k) = rows.iter().position(|r| r.len() != nx) {
        return Err(format!(
            "row {k} has {} values, expected {nx}",
            rows[k].len()
        ));
    }
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    let hx = (domain.xmax - domain.xmin) / (nx - 1) as f64;
    let hy = (domain.ymax - domain.ymin) / (ny - 1) as f64;
    Ok(Arc::new(move |x, y| {
        let s = ((x - domain.xmin) / hx).clamp(0.0, (nx - 1) as f64);
        let t = ((y - domain.ymin) / hy).clamp(0.0, (ny - 1) as f64);
        let i = (s.floor() as usize).min(nx - 2);
        let j = (t.floor() as usize).min(ny - 2);
        let (a, b) = (s - i as f64, t - j as f64);
        let at = |ii: usize, jj: usize| data[jj * nx + ii];
        (1.0 - a) * (1.0 - b) * at(i, j)
            + a * (1.0 - b) * at(i + 1, j)
            + (1.0 - a) * b * at(i, j + 1)
            + a * b * at(i + 1, j + 1)
    }))
}

fn parse_raster(text: &str) -> Result<Vec<Vec<f64>>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| format!("line {}: `{s}`: {e}", n + 1))
                })
                .collect()
        })
        .collect()
}

/// Parses a problem description; relative raster paths resolve against
/// `base_dir`.
pub fn parse_problem(text: &str, base_dir: &Path) -> Result<ProblemSpec, ProblemFileError> {
    let spec: FileSpec = toml::from_str(text)?;
    let domain = rect(spec.domain);
    if !(domain.xmax > domain.xmin && domain.ymax > domain.ymin) {
        return Err(ProblemFileError::Invalid(
            "domain must be [xmin, xmax, ymin, ymax] with positive extent".into(),
        ));
    }

    let hamiltonian = match spec.hamiltonian.as_str() {
        "eikonal" => HamiltonianSpec::Eikonal,
        mode @ ("qp" | "qsv") => {
            let m = spec.medium.ok_or_else(|| {
                ProblemFileError::Invalid(format!(
                    "hamiltonian `{mode}` needs `medium = [a11, a33, a13, a44]`"
                ))
            })?;
            HamiltonianSpec::LaxFriedrichs(ContinuousHamiltonian::Elastic {
                medium: ElasticMedium::new(m[0], m[1], m[2], m[3]),
                mode: if mode == "qp" {
                    WaveMode::QuasiP
                } else {
                    WaveMode::QuasiSV
                },
            })
        }
        other => {
            return Err(ProblemFileError::Invalid(format!(
                "unknown hamiltonian `{other}` (expected eikonal, qp or qsv)"
            )))
        }
    };

    let f = match (&spec.f, &spec.f_raster) {
        (Some(expr), None) => compile_expression("f", expr)?,
        (None, Some(path)) => {
            let path = base_dir.join(path);
            let text = std::fs::read_to_string(&path).map_err(|source| ProblemFileError::Io {
                path: path.clone(),
                source,
            })?;
            let rows = parse_raster(&text).map_err(|message| ProblemFileError::Raster {
                path: path.clone(),
                message,
            })?;
            raster_interpolant(domain, rows)
                .map_err(|message| ProblemFileError::Raster { path, message })?
        }
        _ => {
            return Err(ProblemFileError::Invalid(
                "give exactly one of `f` and `f_raster`".into(),
            ))
        }
    };

    let exact = spec
        .exact
        .as_deref()
        .map(|e| compile_expression("exact", e))
        .transpose()?;
    let pinned_value = match (&spec.boundary, &exact) {
        (Some(b), _) => compile_expression("boundary", b)?,
        (None, Some(e)) => e.clone(),
        (None, None) => Arc::new(|_, _| 0.0),
    };

    let mut parts = Vec::new();
    if !spec.gamma_points.is_empty() {
        parts.push(GammaSet::Points(spec.gamma_points.clone()));
    }
    if let Some(d) = &spec.gamma_distance {
        let d = compile_expression("gamma_distance", d)?;
        parts.push(GammaSet::Curve(Arc::new(move |x, y| d(x, y))));
    }
    let gamma = match parts.len() {
        0 => {
            return Err(ProblemFileError::Invalid(
                "inflow set is empty: give `gamma_points` and/or `gamma_distance`".into(),
            ))
        }
        1 => parts.pop().expect("one part"),
        _ => GammaSet::Union(parts),
    };

    let pinned_boxes = spec
        .pinned_box
        .iter()
        .map(|b| match (b.half, b.half_h) {
            (Some(w), None) => Ok(PinnedBox::absolute(b.center[0], b.center[1], w)),
            (None, Some(m)) => Ok(PinnedBox::mesh_multiple(b.center[0], b.center[1], m)),
            _ => Err(ProblemFileError::Invalid(
                "pinned_box needs exactly one of `half` and `half_h`".into(),
            )),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let (inside, outside) = match spec.mask {
        Some(m) => (
            m.inside.map(rect),
            m.outside.into_iter().map(rect).collect(),
        ),
        None => (None, Vec::new()),
    };
    let error_mask = Arc::new(move |x: f64, y: f64| {
        inside.is_none_or(|r| r.contains(x, y)) && !outside.iter().any(|r: &Rect| r.contains(x, y))
    });

    Ok(ProblemSpec {
        name: spec.name,
        summary: spec.summary,
        domain,
        hamiltonian,
        f,
        gamma,
        pinned_value,
        pinned_grad: None,
        exact_phi: exact,
        exact_grad: None,
        pinned_boxes,
        error_mask,
    })
}

/// Reads and parses a problem file.
pub fn load_problem(path: &Path) -> Result<ProblemSpec, ProblemFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ProblemFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_problem(&text, path.parent().unwrap_or(Path::new(".")))
}

//! Benchmark problems, masked error norms and reference travel times.

mod builtin;
pub mod custom;
mod reference;

use std::fmt;
use std::sync::Arc;

use crate::error::{GridError, SolveError};
use crate::grid::{classify_points, CategoryMap, GammaSet, Grid2D, GridFunction, Rect, RegionFn};
use crate::hamiltonian::ContinuousHamiltonian;

pub use builtin::registry;
pub use reference::{pwave_reference, SlownessSurface, PWAVE_MEDIUM, SVWAVE_MEDIUM};

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Half-width of a pinned box, either fixed or a multiple of the mesh size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoxHalfWidth {
    Absolute(f64),
    MeshMultiple(f64),
}

/// Square around `center` where exact values are assigned.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinnedBox {
    pub center: [f64; 2],
    pub half: BoxHalfWidth,
}

impl PinnedBox {
    pub fn absolute(cx: f64, cy: f64, half: f64) -> Self {
        Self {
            center: [cx, cy],
            half: BoxHalfWidth::Absolute(half),
        }
    }

    pub fn mesh_multiple(cx: f64, cy: f64, multiple: f64) -> Self {
        Self {
            center: [cx, cy],
            half: BoxHalfWidth::MeshMultiple(multiple),
        }
    }

    pub fn rect(&self, grid: &Grid2D) -> Rect {
        let half = match self.half {
            BoxHalfWidth::Absolute(w) => w,
            BoxHalfWidth::MeshMultiple(m) => m * grid.h(),
        };
        Rect::centered(self.center[0], self.center[1], half)
    }
}

/// Continuous Hamiltonian of a problem together with the numerical flux
/// family used to discretise it.
#[derive(Clone, Debug)]
pub enum HamiltonianSpec {
    /// `|grad phi| = f` with the Godunov flux.
    Eikonal,
    /// General `H(grad phi) = f` with the Lax-Friedrichs flux.
    LaxFriedrichs(ContinuousHamiltonian),
}

/// A static Hamilton-Jacobi boundary value problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub summary: String,
    pub domain: Rect,
    pub hamiltonian: HamiltonianSpec,
    pub f: ScalarFn,
    pub gamma: GammaSet,
    /// Values assigned on the inflow set, its `2h` band and pinned boxes.
    pub pinned_value: ScalarFn,
    /// Gradient at pinned nodes; when absent it is reconstructed from
    /// `pinned_value` by fifth-order WENO.
    pub pinned_grad: Option<GradientFn>,
    pub exact_phi: Option<ScalarFn>,
    pub exact_grad: Option<GradientFn>,
    pub pinned_boxes: Vec<PinnedBox>,
    /// Points where errors are measured (pinned nodes are always skipped).
    pub error_mask: RegionFn,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("hamiltonian", &self.hamiltonian)
            .field("gamma", &self.gamma)
            .field("pinned_boxes", &self.pinned_boxes)
            .field("has_exact", &self.exact_phi.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn pinned_rects(&self, grid: &Grid2D) -> Vec<Rect> {
        self.pinned_boxes.iter().map(|b| b.rect(grid)).collect()
    }

    pub fn classify(&self, grid: &Grid2D) -> Result<CategoryMap, GridError> {
        classify_points(grid, &self.gamma, &self.pinned_rects(grid))
    }

    /// `n x n` mesh on the problem domain.
    pub fn grid(&self, n: usize) -> Result<Grid2D, GridError> {
        Grid2D::square(n, self.domain)
    }
}

/// Looks a built-in problem up by full name (`ex1_sine_source`) or by its
/// unambiguous short prefix (`ex1`).
pub fn by_name(name: &str) -> Option<ProblemSpec> {
    let all = registry();
    if let Some(p) = all.iter().find(|p| p.name == name) {
        return Some(p.clone());
    }
    let mut hits = all
        .into_iter()
        .filter(|p| p.name.split('_').next() == Some(name));
    match (hits.next(), hits.next()) {
        (Some(p), None) => Some(p),
        _ => None,
    }
}

/// Mean and max absolute error over the measured points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    pub l1: f64,
    pub linf: f64,
    pub points: usize,
}

/// One row of a convergence table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub n: usize,
    pub l1: f64,
    pub linf: f64,
    pub order_l1: Option<f64>,
    pub order_linf: Option<f64>,
    pub iterations: usize,
    pub wall_time: f64,
}

impl ErrorReport {
    /// Fills the order columns against the next coarser row.
    pub fn with_orders_from(mut self, coarser: Option<&ErrorReport>) -> Self {
        if let Some(c) = coarser {
            self.order_l1 = Some(convergence_order(c.l1, self.l1));
            self.order_linf = Some(convergence_order(c.linf, self.linf));
        }
        self
    }
}

/// `log2(coarse / fine)`, the observed order under mesh doubling.
pub fn convergence_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Error of `phi` against `reference` over updated nodes accepted by `mask`.
pub fn masked_difference(
    phi: &GridFunction,
    grid: &Grid2D,
    categories: &CategoryMap,
    mask: impl Fn(f64, f64) -> bool,
    reference: impl Fn(f64, f64) -> f64,
) -> ErrorNorms {
    let (mut sum, mut max, mut points) = (0.0, 0.0f64, 0usize);
    for idx in grid.interior_indices() {
        if !categories.get(idx).is_updated() {
            continue;
        }
        let (i, j) = grid.coords(idx);
        let (x, y) = (grid.x(i), grid.y(j));
        if !mask(x, y) {
            continue;
        }
        let e = (phi[idx] - reference(x, y)).abs();
        sum += e;
        max = max.max(e);
        points += 1;
    }
    ErrorNorms {
        l1: if points == 0 {
            0.0
        } else {
            sum / points as f64
        },
        linf: max,
        points,
    }
}

/// Error of `phi` against the problem's exact solution.
pub fn masked_error(
    phi: &GridFunction,
    problem: &ProblemSpec,
    grid: &Grid2D,
) -> Result<ErrorNorms, SolveError> {
    let exact = problem
        .exact_phi
        .as_ref()
        .ok_or_else(|| SolveError::NoExactSolution(problem.name.clone()))?;
    let categories = problem.classify(grid)?;
    Ok(masked_difference(
        phi,
        grid,
        &categories,
        |x, y| (problem.error_mask)(x, y),
        |x, y| exact(x, y),
    ))
}

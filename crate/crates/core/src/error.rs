use thiserror::Error;

use crate::solver::Solution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 5 points per axis, got {nx} x {ny}")]
    TooFewPoints { nx: usize, ny: usize },
    #[error("domain must have positive finite extent")]
    DegenerateDomain,
    #[error("inflow point ({x}, {y}) lies outside the domain")]
    GammaOutsideDomain { x: f64, y: f64 },
    #[error("inflow set does not touch any mesh node")]
    GammaMissesMesh,
    #[error("extrapolation degree {0} is not supported (0..=4)")]
    ExtrapolationDegree(usize),
    #[error("grid function has {actual} values, grid expects {expected}")]
    LengthMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("problem `{0}` has no exact solution")]
    NoExactSolution(String),
    #[error("no convergence after {} iterations (delta = {:e})", .0.stats.iterations, .0.stats.final_delta())]
    NotConverged(Box<Solution>),
    #[error("iteration diverged at node ({i}, {j}) after {} iterations", .solution.stats.iterations)]
    Diverged {
        i: isize,
        j: isize,
        solution: Box<Solution>,
    },
}

impl SolveError {
    /// Partial result carried by non-convergence and divergence.
    pub fn partial(&self) -> Option<&Solution> {
        match self {
            Self::NotConverged(s) => Some(s),
            Self::Diverged { solution, .. } => Some(solution),
            _ => None,
        }
    }
}

//! Fifth-order Hermite WENO fixed-point sweeping for static Hamilton-Jacobi
//! equations `H(grad phi) = f` on rectangles.
//!
//! ```no_run
//! use hj_sweep::problems::by_name;
//! use hj_sweep::solver::{solve, SchemeConfig, SchemeKind};
//!
//! let problem = by_name("ex1").unwrap();
//! let grid = problem.grid(40).unwrap();
//! let solution = solve(&problem, grid, &SchemeConfig::new(SchemeKind::FeFsm)).unwrap();
//! println!("{} iterations, L1 = {:e}", solution.stats.iterations, solution.error().unwrap().l1);
//! ```

// `!(x > 0.0)` is how parameter checks reject NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod init;
pub mod problems;
pub mod reconstruction;
pub mod solver;

pub use error::{GridError, SolveError};
pub use grid::{Grid2D, GridFunction, PointCategory, Rect};
pub use problems::{by_name, registry, ProblemSpec};
pub use reconstruction::{ReconstructionMode, WeightParams};
pub use solver::{solve, SchemeConfig, SchemeKind, Solution};

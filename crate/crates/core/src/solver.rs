//! Fixed-point sweeping schemes and the convergence loop.
//!
//! Every scheme advances `phi <- a phi_anchor + b phi + c dt L(phi, u, v)` at
//! the updated nodes, where `L = f - H^` and `phi_anchor` is the value at the
//! start of the step (Jacobi) or of the directional pass (sweeping). After a
//! node's `phi` changes its stored derivatives are refreshed by the upwind
//! rule in [`update_derivatives`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::GridError;
use crate::error::SolveError;
use crate::grid::{CategoryMap, Extrapolator, Grid2D, GridFunction};
use crate::hamiltonian::{dissipation_bounds, DerivativeBox, HamiltonianKind};
use crate::init::{
    first_order_fsm_eikonal, first_order_fsm_lf, init_derivatives, sweep_ranges,
    weno5_pinned_derivative,
};
use crate::problems::{masked_difference, ErrorNorms, HamiltonianSpec, ProblemSpec};
use crate::reconstruction::{reconstruct_point, OneSided, ReconCounters, ReconstructionSettings};

pub const DEFAULT_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_HISTORY_STRIDE: usize = 4;

/// Lattice size used when sampling `|H_1|`, `|H_2|` for the LF bounds.
const DISSIPATION_SAMPLES: usize = 201;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    FeJacobi,
    FeFsm,
    RkJacobi,
    RkFsm,
    /// Sweeping with the convex-combination RK3 stages.
    RkFsmT,
}

impl SchemeKind {
    pub const ALL: [Self; 5] = [
        Self::FeJacobi,
        Self::FeFsm,
        Self::RkJacobi,
        Self::RkFsm,
        Self::RkFsmT,
    ];

    /// Iterations counted per unit of work between convergence checks: one
    /// Jacobi step, or one cycle over the four sweep directions.
    pub fn iterations_per_unit(self) -> usize {
        match self {
            Self::FeJacobi => 1,
            Self::RkJacobi => 3,
            Self::FeFsm => 4,
            Self::RkFsm | Self::RkFsmT => 12,
        }
    }

    pub fn is_sweeping(self) -> bool {
        matches!(self, Self::FeFsm | Self::RkFsm | Self::RkFsmT)
    }

    pub fn default_cfl(self) -> f64 {
        match self {
            Self::FeJacobi => 0.1,
            _ => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::FeJacobi => "fe-jacobi",
            Self::FeFsm => "fe-fsm",
            Self::RkJacobi => "rk-jacobi",
            Self::RkFsm => "rk-fsm",
            Self::RkFsmT => "rk-fsm-t",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                format!(
                    "unknown scheme `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

/// Whether Jacobi steps evaluate node updates on the rayon pool.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecPolicy {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for ExecPolicy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Self::Parallel
        } else {
            Self::Sequential
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    pub cfl: f64,
    pub reconstruction: ReconstructionSettings,
    pub tol: f64,
    /// Checked between cycles, so sweeping schemes may finish the cycle
    /// that crosses it.
    pub max_iter: usize,
    /// Record a checkpoint every this many iterations; 0 keeps only the
    /// final state.
    pub history_stride: usize,
    pub exec: ExecPolicy,
}

impl SchemeConfig {
    pub fn new(scheme: SchemeKind) -> Self {
        Self {
            scheme,
            cfl: scheme.default_cfl(),
            reconstruction: ReconstructionSettings::default(),
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            history_stride: DEFAULT_HISTORY_STRIDE,
            exec: ExecPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: String| Err(SolveError::InvalidConfig(m));
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return bad(format!("CFL number must be positive, got {}", self.cfl));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        self.reconstruction
            .weights
            .validate()
            .map_err(SolveError::InvalidConfig)
    }
}

/// `phi` and its stored derivatives over the extended index space.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionState {
    pub phi: GridFunction,
    pub u: GridFunction,
    pub v: GridFunction,
}

impl SolutionState {
    pub fn refresh_ghosts(&mut self, grid: &Grid2D, ghosts: &GhostClosure) {
        ghosts.phi.fill(self.phi.as_mut_slice(), grid);
        ghosts.derivative.fill(self.u.as_mut_slice(), grid);
        ghosts.derivative.fill(self.v.as_mut_slice(), grid);
    }
}

/// Extrapolation used for the ghost layers of `phi` and of the stored
/// derivatives.
///
/// The default is cubic for `phi` and quadratic for `u`, `v`, i.e. the
/// derivative ghosts are as accurate as the derivative of the `phi` ghosts.
/// Quartic `phi` ghosts make the Gauss-Seidel sweeps unstable at outflow
/// corners: the boundary node's weight on itself through the ghost is too
/// large for `cfl = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhostClosure {
    pub phi: Extrapolator,
    pub derivative: Extrapolator,
}

impl GhostClosure {
    pub fn new(phi_degree: usize, derivative_degree: usize) -> Result<Self, GridError> {
        Ok(Self {
            phi: Extrapolator::new(phi_degree)?,
            derivative: Extrapolator::new(derivative_degree)?,
        })
    }
}

impl Default for GhostClosure {
    fn default() -> Self {
        Self::new(3, 2).expect("supported degrees")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Checkpoint {
    pub iteration: usize,
    pub delta: f64,
    /// Mean `|L|` over updated nodes.
    pub residual: f64,
    pub l1_error: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationStats {
    pub iterations: usize,
    pub converged: bool,
    pub checkpoints: Vec<Checkpoint>,
    pub counters: ReconCounters,
}

impl IterationStats {
    pub fn final_delta(&self) -> f64 {
        self.checkpoints.last().map_or(f64::NAN, |c| c.delta)
    }

    pub fn delta_history(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.delta).collect()
    }

    pub fn residual_history(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.residual).collect()
    }

    pub fn error_history(&self) -> Vec<Option<f64>> {
        self.checkpoints.iter().map(|c| c.l1_error).collect()
    }
}

/// A problem laid out on a mesh: categories, source term, numerical
/// Hamiltonian, start values and measured nodes.
#[derive(Clone, Debug)]
pub struct Discretization {
    grid: Grid2D,
    categories: CategoryMap,
    f: Vec<f64>,
    hamiltonian: HamiltonianKind,
    updated: Vec<usize>,
    sweeps: [Vec<usize>; 4],
    exact: Option<Vec<f64>>,
    measured: Vec<usize>,
    initial: SolutionState,
    exact_state: Option<SolutionState>,
    ghosts: GhostClosure,
}

impl Discretization {
    pub fn new(problem: &ProblemSpec, grid: Grid2D) -> Result<Self, SolveError> {
        let categories = problem.classify(&grid)?;
        let sample = |field: &dyn Fn(f64, f64) -> f64| {
            let mut out = GridFunction::zeros(&grid);
            for idx in grid.interior_indices() {
                let (i, j) = grid.coords(idx);
                out[idx] = field(grid.x(i), grid.y(j));
            }
            out
        };
        let f = sample(&|x, y| (problem.f)(x, y)).into_vec();

        let mut pinned = GridFunction::zeros(&grid);
        let mut pu = GridFunction::zeros(&grid);
        let mut pv = GridFunction::zeros(&grid);
        for idx in grid.interior_indices() {
            if !categories.get(idx).is_pinned() {
                continue;
            }
            let (i, j) = grid.coords(idx);
            let (x, y) = (grid.x(i), grid.y(j));
            pinned[idx] = (problem.pinned_value)(x, y);
            let g = match &problem.pinned_grad {
                Some(g) => g(x, y),
                None => {
                    let val = &problem.pinned_value;
                    [
                        weno5_pinned_derivative(|s| val(s, y), x, grid.dx()),
                        weno5_pinned_derivative(|s| val(x, s), y, grid.dy()),
                    ]
                }
            };
            pu[idx] = g[0];
            pv[idx] = g[1];
        }

        let (phi, hamiltonian) = match &problem.hamiltonian {
            HamiltonianSpec::Eikonal => (
                first_order_fsm_eikonal(&grid, &categories, &f, &pinned),
                HamiltonianKind::GodunovEikonal,
            ),
            HamiltonianSpec::LaxFriedrichs(h) => {
                let (a0, b0) = dissipation_bounds(h, DerivativeBox::UNIT, DISSIPATION_SAMPLES);
                let phi = first_order_fsm_lf(&grid, &categories, &f, h, a0, b0, &pinned);
                let (u, v) = init_derivatives(&phi, &grid);
                let upd = |g: &GridFunction| {
                    grid.interior_indices()
                        .filter(|&idx| categories.get(idx).is_updated())
                        .map(|idx| g[idx])
                        .collect::<Vec<_>>()
                };
                let bounds = DerivativeBox::bounding(upd(&u), upd(&v));
                let (alpha, beta) = dissipation_bounds(h, bounds, DISSIPATION_SAMPLES);
                (
                    phi,
                    HamiltonianKind::LaxFriedrichs {
                        h: h.clone(),
                        alpha,
                        beta,
                    },
                )
            }
        };
        let (mut u, mut v) = init_derivatives(&phi, &grid);
        for idx in grid.interior_indices() {
            if categories.get(idx).is_pinned() {
                u[idx] = pu[idx];
                v[idx] = pv[idx];
            }
        }
        let initial = SolutionState { phi, u, v };

        let exact = problem.exact_phi.as_ref().map(|e| sample(&|x, y| e(x, y)));
        let exact_state = match (&problem.exact_phi, &problem.exact_grad) {
            (Some(e), Some(g)) => {
                let mut s = SolutionState {
                    phi: GridFunction::from_fn(&grid, |x, y| e(x, y)),
                    u: GridFunction::from_fn(&grid, |x, y| g(x, y)[0]),
                    v: GridFunction::from_fn(&grid, |x, y| g(x, y)[1]),
                };
                for idx in grid.interior_indices() {
                    if categories.get(idx).is_pinned() {
                        s.phi[idx] = pinned[idx];
                        s.u[idx] = pu[idx];
                        s.v[idx] = pv[idx];
                    }
                }
                Some(s)
            }
            _ => None,
        };

        let mut disc = Self::from_parts(grid, categories, f, hamiltonian, initial)?;
        disc.exact = exact.map(GridFunction::into_vec);
        disc.exact_state = exact_state;
        disc.refill_start_ghosts();
        let grid = &disc.grid;
        disc.measured = disc
            .updated
            .iter()
            .copied()
            .filter(|&idx| {
                let (i, j) = grid.coords(idx);
                (problem.error_mask)(grid.x(i), grid.y(j))
            })
            .collect();
        Ok(disc)
    }

    /// Assembles a discretization from explicit data. `f` is indexed by
    /// storage offset; pinned nodes keep their values from `initial`.
    pub fn from_parts(
        grid: Grid2D,
        categories: CategoryMap,
        f: Vec<f64>,
        hamiltonian: HamiltonianKind,
        initial: SolutionState,
    ) -> Result<Self, SolveError> {
        for len in [
            categories.len(),
            f.len(),
            initial.phi.as_slice().len(),
            initial.u.as_slice().len(),
            initial.v.as_slice().len(),
        ] {
            if len != grid.len() {
                return Err(GridError::LengthMismatch {
                    expected: grid.len(),
                    actual: len,
                }
                .into());
            }
        }
        let updated: Vec<usize> = grid
            .interior_indices()
            .filter(|&idx| categories.get(idx).is_updated())
            .collect();
        let sweeps = std::array::from_fn(|d| {
            let (is, js) = sweep_ranges(&grid, d);
            let mut order = Vec::with_capacity(updated.len());
            for &i in &is {
                for &j in &js {
                    let idx = grid.index(i, j);
                    if categories.get(idx).is_updated() {
                        order.push(idx);
                    }
                }
            }
            order
        });
        let mut disc = Self {
            measured: updated.clone(),
            grid,
            categories,
            f,
            hamiltonian,
            updated,
            sweeps,
            exact: None,
            initial,
            exact_state: None,
            ghosts: GhostClosure::default(),
        };
        disc.refill_start_ghosts();
        Ok(disc)
    }

    /// Switches the ghost extrapolation.
    pub fn with_ghosts(mut self, ghosts: GhostClosure) -> Self {
        self.ghosts = ghosts;
        self.refill_start_ghosts();
        self
    }

    pub fn ghosts(&self) -> &GhostClosure {
        &self.ghosts
    }

    fn refill_start_ghosts(&mut self) {
        self.initial.refresh_ghosts(&self.grid, &self.ghosts);
        if let Some(s) = self.exact_state.as_mut() {
            s.refresh_ghosts(&self.grid, &self.ghosts);
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn categories(&self) -> &CategoryMap {
        &self.categories
    }

    pub fn hamiltonian(&self) -> &HamiltonianKind {
        &self.hamiltonian
    }

    pub fn source(&self) -> &[f64] {
        &self.f
    }

    /// Storage offsets of the updated nodes.
    pub fn updated(&self) -> &[usize] {
        &self.updated
    }

    pub fn initial_state(&self) -> SolutionState {
        self.initial.clone()
    }

    /// Exact values and gradients, pinned nodes as assigned, when the
    /// problem provides them.
    pub fn exact_state(&self) -> Option<SolutionState> {
        self.exact_state.clone()
    }

    pub fn time_step(&self, cfl: f64) -> Result<f64, SolveError> {
        let (alpha, beta) = self.hamiltonian.dissipation();
        time_step(cfl, alpha, beta, self.grid.dx(), self.grid.dy())
    }

    /// Masked error against the exact solution.
    pub fn error(&self, phi: &GridFunction) -> Option<ErrorNorms> {
        let exact = self.exact.as_ref()?;
        let (mut sum, mut max) = (0.0, 0.0f64);
        for &idx in &self.measured {
            let e = (phi[idx] - exact[idx]).abs();
            sum += e;
            max = max.max(e);
        }
        let n = self.measured.len();
        Some(ErrorNorms {
            l1: if n == 0 { 0.0 } else { sum / n as f64 },
            linf: max,
            points: n,
        })
    }

    /// Masked error against an arbitrary reference field.
    pub fn error_against(
        &self,
        phi: &GridFunction,
        mask: impl Fn(f64, f64) -> bool,
        reference: impl Fn(f64, f64) -> f64,
    ) -> ErrorNorms {
        masked_difference(phi, &self.grid, &self.categories, mask, reference)
    }

    /// Mean `|f - H^|` over updated nodes. Refreshes the ghosts of `state`.
    pub fn mean_abs_residual(&self, state: &mut SolutionState, config: &SchemeConfig) -> f64 {
        if self.updated.is_empty() {
            return 0.0;
        }
        state.refresh_ghosts(&self.grid, &self.ghosts);
        let (phi, u, v) = (state.phi.as_slice(), state.u.as_slice(), state.v.as_slice());
        let (res, _) = map_points(config.exec, &self.updated, |idx, cnt| {
            self.residual_at(phi, u, v, idx, &config.reconstruction, cnt)
                .abs()
        });
        res.iter().sum::<f64>() / res.len() as f64
    }

    #[inline]
    fn reconstruct(
        &self,
        phi: &[f64],
        u: &[f64],
        v: &[f64],
        idx: usize,
        settings: &ReconstructionSettings,
        counters: &mut ReconCounters,
    ) -> OneSided {
        reconstruct_point(
            phi,
            u,
            v,
            &self.grid,
            idx,
            self.categories.get(idx),
            settings,
            counters,
        )
    }

    #[inline]
    fn residual_at(
        &self,
        phi: &[f64],
        u: &[f64],
        v: &[f64],
        idx: usize,
        settings: &ReconstructionSettings,
        counters: &mut ReconCounters,
    ) -> f64 {
        let d = self.reconstruct(phi, u, v, idx, settings, counters);
        // The monotone fluxes clamp with f64::max, which would swallow a NaN
        // from overflowing smoothness indicators and hide the blow-up.
        if !(d.xm.is_finite() && d.xp.is_finite() && d.ym.is_finite() && d.yp.is_finite()) {
            return f64::NAN;
        }
        self.hamiltonian
            .residual(self.f[idx], d.xm, d.xp, d.ym, d.yp)
    }
}

/// `cfl / (alpha / dx + beta / dy)`.
pub fn time_step(cfl: f64, alpha: f64, beta: f64, dx: f64, dy: f64) -> Result<f64, SolveError> {
    let rate = alpha / dx + beta / dy;
    if !(rate > 0.0 && rate.is_finite() && cfl > 0.0) {
        return Err(SolveError::InvalidConfig(format!(
            "time step undefined for cfl = {cfl}, alpha = {alpha}, beta = {beta}"
        )));
    }
    Ok(cfl / rate)
}

/// Upwind choice of a stored derivative: the minus side when both one-sided
/// values are positive, the plus side when both are negative, otherwise
/// the old value.
#[inline]
pub fn pick_derivative(minus: f64, plus: f64, old: f64) -> f64 {
    if minus > 0.0 && plus > 0.0 {
        minus
    } else if minus < 0.0 && plus < 0.0 {
        plus
    } else {
        old
    }
}

#[inline]
pub fn update_derivatives(d: &OneSided, u_old: f64, v_old: f64) -> (f64, f64) {
    (
        pick_derivative(d.xm, d.xp, u_old),
        pick_derivative(d.ym, d.yp, v_old),
    )
}

/// First non-finite `phi` among the updated nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub i: isize,
    pub j: isize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    /// Mean `|phi_after - phi_before|` over updated nodes.
    pub delta: f64,
    pub counters: ReconCounters,
}

#[derive(Clone, Copy, Debug)]
struct Stage {
    anchor: f64,
    current: f64,
    increment: f64,
}

const fn stage(anchor: f64, current: f64, increment: f64) -> Stage {
    Stage {
        anchor,
        current,
        increment,
    }
}

const FORWARD_EULER: [Stage; 1] = [stage(0.0, 1.0, 1.0)];
const RK3_CONVEX: [Stage; 3] = [
    stage(0.0, 1.0, 1.0),
    stage(0.75, 0.25, 0.25),
    stage(1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0),
];
const RK3_INCREMENTS: [Stage; 3] = [
    stage(0.0, 1.0, 1.0),
    stage(0.0, 1.0, 0.25),
    stage(0.0, 1.0, 2.0 / 3.0),
];

const CHUNK: usize = 512;

fn map_points<T, F>(exec: ExecPolicy, points: &[usize], f: F) -> (Vec<T>, ReconCounters)
where
    T: Send,
    F: Fn(usize, &mut ReconCounters) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    if exec == ExecPolicy::Parallel {
        let parts: Vec<(Vec<T>, ReconCounters)> = points
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut c = ReconCounters::default();
                let out = chunk.iter().map(|&idx| f(idx, &mut c)).collect();
                (out, c)
            })
            .collect();
        let mut total = ReconCounters::default();
        let mut out = Vec::with_capacity(points.len());
        for (part, c) in parts {
            out.extend(part);
            total.merge(c);
        }
        return (out, total);
    }
    let _ = exec;
    let mut c = ReconCounters::default();
    let out = points.iter().map(|&idx| f(idx, &mut c)).collect();
    (out, c)
}

fn jacobi_stage(
    disc: &Discretization,
    state: &mut SolutionState,
    anchor: &[f64],
    st: Stage,
    dt: f64,
    config: &SchemeConfig,
) -> ReconCounters {
    let grid = &disc.grid;
    let settings = &config.reconstruction;
    state.refresh_ghosts(grid, &disc.ghosts);
    let (new_phi, mut counters) = {
        let (phi, u, v) = (state.phi.as_slice(), state.u.as_slice(), state.v.as_slice());
        map_points(config.exec, &disc.updated, |idx, cnt| {
            let l = disc.residual_at(phi, u, v, idx, settings, cnt);
            st.anchor * anchor[idx] + st.current * phi[idx] + st.increment * dt * l
        })
    };
    for (&idx, val) in disc.updated.iter().zip(new_phi) {
        state.phi[idx] = val;
    }
    disc.ghosts.phi.fill(state.phi.as_mut_slice(), grid);
    let (new_uv, c2) = {
        let (phi, u, v) = (state.phi.as_slice(), state.u.as_slice(), state.v.as_slice());
        map_points(config.exec, &disc.updated, |idx, cnt| {
            let d = disc.reconstruct(phi, u, v, idx, settings, cnt);
            update_derivatives(&d, u[idx], v[idx])
        })
    };
    for (&idx, (nu, nv)) in disc.updated.iter().zip(new_uv) {
        state.u[idx] = nu;
        state.v[idx] = nv;
    }
    counters.merge(c2);
    counters
}

fn sweep_stage(
    disc: &Discretization,
    state: &mut SolutionState,
    anchor: &[f64],
    st: Stage,
    dt: f64,
    config: &SchemeConfig,
    direction: usize,
) -> ReconCounters {
    let settings = &config.reconstruction;
    let (grid, ghosts) = (&disc.grid, &disc.ghosts);
    state.refresh_ghosts(grid, ghosts);
    let mut counters = ReconCounters::default();
    let SolutionState { phi, u, v } = state;
    let (phi, u, v) = (phi.as_mut_slice(), u.as_mut_slice(), v.as_mut_slice());
    // Ghosts fed by a node are refilled as soon as the node changes, so the
    // sweep stays Gauss-Seidel up to the domain edge.
    for &idx in &disc.sweeps[direction % 4] {
        let (i, j) = grid.coords(idx);
        let l = disc.residual_at(phi, u, v, idx, settings, &mut counters);
        phi[idx] = st.anchor * anchor[idx] + st.current * phi[idx] + st.increment * dt * l;
        ghosts.phi.fill_near(phi, grid, i, j);
        let d = disc.reconstruct(phi, u, v, idx, settings, &mut counters);
        (u[idx], v[idx]) = update_derivatives(&d, u[idx], v[idx]);
        ghosts.derivative.fill_near(u, grid, i, j);
        ghosts.derivative.fill_near(v, grid, i, j);
    }
    counters
}

fn mean_change(disc: &Discretization, before: &[f64], after: &GridFunction) -> f64 {
    if disc.updated.is_empty() {
        return 0.0;
    }
    let sum: f64 = disc
        .updated
        .iter()
        .map(|&idx| (after[idx] - before[idx]).abs())
        .sum();
    sum / disc.updated.len() as f64
}

fn locate_divergence(disc: &Discretization, phi: &GridFunction) -> Option<Divergence> {
    disc.updated
        .iter()
        .find(|&&idx| !phi[idx].is_finite())
        .map(|&idx| {
            let (i, j) = disc.grid.coords(idx);
            Divergence { i, j }
        })
}

fn finish(
    disc: &Discretization,
    before: &[f64],
    state: &SolutionState,
    counters: ReconCounters,
) -> Result<StepOutcome, Divergence> {
    let delta = mean_change(disc, before, &state.phi);
    if !delta.is_finite() {
        if let Some(d) = locate_divergence(disc, &state.phi) {
            return Err(d);
        }
    }
    Ok(StepOutcome { delta, counters })
}

fn jacobi_step(
    disc: &Discretization,
    state: &mut SolutionState,
    config: &SchemeConfig,
    stages: &[Stage],
) -> Result<StepOutcome, Divergence> {
    let dt = disc.time_step(config.cfl).expect("validated time step");
    let before = state.phi.as_slice().to_vec();
    let mut counters = ReconCounters::default();
    for &st in stages {
        counters.merge(jacobi_stage(disc, state, &before, st, dt, config));
    }
    finish(disc, &before, state, counters)
}

fn sweep_pass(
    disc: &Discretization,
    state: &mut SolutionState,
    config: &SchemeConfig,
    direction: usize,
    stages: &[Stage],
) -> Result<StepOutcome, Divergence> {
    let dt = disc.time_step(config.cfl).expect("validated time step");
    let before = state.phi.as_slice().to_vec();
    let mut counters = ReconCounters::default();
    for &st in stages {
        counters.merge(sweep_stage(disc, state, &before, st, dt, config, direction));
    }
    finish(disc, &before, state, counters)
}

/// One forward-Euler Jacobi step; all node updates read the old state.
pub fn fe_jacobi_step(
    disc: &Discretization,
    state: &mut SolutionState,
    config: &SchemeConfig,
) -> Result<StepOutcome, Divergence> {
    jacobi_step(disc, state, config, &FORWARD_EULER)
}

/// One third-order Runge-Kutta Jacobi step (three stages).
pub fn rk_jacobi_step(
    disc: &Discretization,
    state: &mut SolutionState,
    config: &SchemeConfig,
) -> Result<StepOutcome, Divergence> {
    jacobi_step(disc, state, config, &RK3_CONVEX)
}

/// One forward-Euler Gauss-Seidel pass in sweep `direction` (0..4).
pub fn fe_fsm_pass(
    disc: &Discretization,
    state: &mut SolutionState,
    config: &SchemeConfig,
    direction: usize,
) -> Result<StepOutcome, Divergence> {
    sweep_pass(disc, state, config, direction, &FORWARD_EULER)
}

/// Three Gauss-Seidel sub-passes in the same direction with increments
/// `dt`, `dt / 4` and `2 dt / 3`, each applied to the previous sub-pass.
pub fn rk_fsm_pass(
    disc: &Discretization,
    state: &mut SolutionState,
    config: &SchemeConfig,
    direction: usize,
) -> Result<StepOutcome, Divergence> {
    sweep_pass(disc, state, config, direction, &RK3_INCREMENTS)
}

/// Three Gauss-Seidel sub-passes combined with the pass's start values by
/// the convex RK3 coefficients.
pub fn rk_fsm_t_pass(
    disc: &Discretization,
    state: &mut SolutionState,
    config: &SchemeConfig,
    direction: usize,
) -> Result<StepOutcome, Divergence> {
    sweep_pass(disc, state, config, direction, &RK3_CONVEX)
}

/// Result of a solve.
#[derive(Clone, Debug)]
pub struct Solution {
    pub state: SolutionState,
    pub stats: IterationStats,
    pub discretization: Arc<Discretization>,
    pub time_step: f64,
}

impl Solution {
    pub fn grid(&self) -> &Grid2D {
        self.discretization.grid()
    }

    /// Masked error against the exact solution, when known.
    pub fn error(&self) -> Option<ErrorNorms> {
        self.discretization.error(&self.state.phi)
    }
}

/// Lays `problem` out on `grid`, starts from the first-order guess and
/// iterates to convergence.
pub fn solve(
    problem: &ProblemSpec,
    grid: Grid2D,
    config: &SchemeConfig,
) -> Result<Solution, SolveError> {
    config.validate()?;
    let disc = Arc::new(Discretization::new(problem, grid)?);
    let state = disc.initial_state();
    solve_from(disc, state, config)
}

/// Iterates from `state` until `delta` drops below `config.tol` or
/// `config.max_iter` iterations have been spent.
///
/// Jacobi schemes are checked after every step. Sweeping schemes are checked
/// after each cycle of four directional passes, and `delta` is the largest
/// per-pass mean change within the cycle, so a pattern that drifts during one
/// sweep and returns during another is not mistaken for a steady state.
pub fn solve_from(
    disc: Arc<Discretization>,
    mut state: SolutionState,
    config: &SchemeConfig,
) -> Result<Solution, SolveError> {
    config.validate()?;
    let dt = disc.time_step(config.cfl)?;
    let mut stats = IterationStats::default();
    let mut direction = 0usize;
    let mut next_checkpoint = config.history_stride;
    let mut delta = 0.0;

    let record = |stats: &mut IterationStats, state: &mut SolutionState, delta: f64| {
        let residual = disc.mean_abs_residual(state, config);
        let l1_error = disc.error(&state.phi).map(|e| e.l1);
        stats.checkpoints.push(Checkpoint {
            iteration: stats.iterations,
            delta,
            residual,
            l1_error,
        });
    };

    if !disc.updated.is_empty() {
        loop {
            if stats.iterations >= config.max_iter {
                break;
            }
            let outcome = match config.scheme {
                SchemeKind::FeJacobi => fe_jacobi_step(&disc, &mut state, config),
                SchemeKind::RkJacobi => rk_jacobi_step(&disc, &mut state, config),
                sweeping => {
                    let pass = match sweeping {
                        SchemeKind::FeFsm => fe_fsm_pass,
                        SchemeKind::RkFsm => rk_fsm_pass,
                        _ => rk_fsm_t_pass,
                    };
                    let mut cycle = Ok(StepOutcome {
                        delta: 0.0,
                        counters: ReconCounters::default(),
                    });
                    for _ in 0..4 {
                        let out = pass(&disc, &mut state, config, direction);
                        direction = (direction + 1) % 4;
                        match (out, &mut cycle) {
                            (Ok(o), Ok(acc)) => {
                                if !(o.delta <= acc.delta) {
                                    acc.delta = o.delta;
                                }
                                acc.counters.merge(o.counters);
                            }
                            (Err(d), _) => {
                                cycle = Err(d);
                                break;
                            }
                            _ => unreachable!(),
                        }
                    }
                    cycle
                }
            };
            stats.iterations += config.scheme.iterations_per_unit();
            let step = match outcome {
                Ok(o) => o,
                Err(Divergence { i, j }) => {
                    return Err(diverged(&disc, state, stats, dt, i, j));
                }
            };
            stats.counters.merge(step.counters);
            delta = step.delta;
            if !delta.is_finite() {
                let Divergence { i, j } =
                    locate_divergence(&disc, &state.phi).unwrap_or(Divergence { i: -1, j: -1 });
                return Err(diverged(&disc, state, stats, dt, i, j));
            }
            if config.history_stride > 0 && stats.iterations >= next_checkpoint {
                record(&mut stats, &mut state, delta);
                next_checkpoint =
                    (stats.iterations / config.history_stride + 1) * config.history_stride;
            }
            if delta < config.tol {
                stats.converged = true;
                break;
            }
        }
    } else {
        stats.converged = true;
    }
    if stats.checkpoints.last().map(|c| c.iteration) != Some(stats.iterations) {
        record(&mut stats, &mut state, delta);
    }
    state.refresh_ghosts(disc.grid(), &disc.ghosts);
    let solution = Solution {
        state,
        stats,
        discretization: disc,
        time_step: dt,
    };
    if solution.stats.converged {
        Ok(solution)
    } else {
        Err(SolveError::NotConverged(Box::new(solution)))
    }
}

fn diverged(
    disc: &Arc<Discretization>,
    state: SolutionState,
    stats: IterationStats,
    dt: f64,
    i: isize,
    j: isize,
) -> SolveError {
    SolveError::Diverged {
        i,
        j,
        solution: Box::new(Solution {
            state,
            stats,
            discretization: disc.clone(),
            time_step: dt,
        }),
    }
}

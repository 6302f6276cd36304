//! First-order fast-sweeping start values and derivative initialisation.

use crate::grid::{CategoryMap, Grid2D, GridFunction};
use crate::hamiltonian::ContinuousHamiltonian;

/// Value assigned to unknown nodes before the first sweep.
pub const FAR_VALUE: f64 = 1e10;

const EIKONAL_STOP: f64 = 1e-12;
const LF_STOP: f64 = 1e-6;
const MAX_CYCLES: usize = 20_000;

/// Start values, stored derivatives included.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialGuess {
    pub phi: GridFunction,
    pub u: GridFunction,
    pub v: GridFunction,
}

/// Lexicographic order of sweep `direction` (0..4): `i` is the outer loop.
pub(crate) fn sweep_ranges(grid: &Grid2D, direction: usize) -> (Vec<isize>, Vec<isize>) {
    let fwd = |n: usize| (0..n as isize).collect::<Vec<_>>();
    let rev = |n: usize| (0..n as isize).rev().collect::<Vec<_>>();
    let (nx, ny) = (grid.nx(), grid.ny());
    match direction % 4 {
        0 => (fwd(nx), fwd(ny)),
        1 => (rev(nx), fwd(ny)),
        2 => (rev(nx), rev(ny)),
        _ => (fwd(nx), rev(ny)),
    }
}

/// Root `t >= max(a, b)` of `((t-a)/dx)^2 + ((t-b)/dy)^2 = f^2`, falling back
/// to the one-sided update when the two-sided root is not causal.
pub fn eikonal_local_solve(a: f64, b: f64, f: f64, dx: f64, dy: f64) -> f64 {
    let one_sided = (a + f * dx).min(b + f * dy);
    if one_sided <= a.max(b) {
        return one_sided;
    }
    let (wx, wy) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    let qa = wx + wy;
    let qb = -2.0 * (a * wx + b * wy);
    let qc = a * a * wx + b * b * wy - f * f;
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    (-qb + disc.sqrt()) / (2.0 * qa)
}

fn seeded(grid: &Grid2D, categories: &CategoryMap, pinned: &GridFunction) -> GridFunction {
    let mut phi = GridFunction::filled(grid, FAR_VALUE);
    for idx in grid.interior_indices() {
        if categories.get(idx).is_pinned() {
            phi[idx] = pinned[idx];
        }
    }
    phi
}

/// First-order Godunov sweeping for `|grad phi| = f`. `f` is indexed by
/// storage offset; only pinned entries of `pinned` are read.
pub fn first_order_fsm_eikonal(
    grid: &Grid2D,
    categories: &CategoryMap,
    f: &[f64],
    pinned: &GridFunction,
) -> GridFunction {
    let mut phi = seeded(grid, categories, pinned);
    eikonal_sweeps(grid, categories, f, &mut phi);
    phi
}

/// Runs four-direction Eikonal sweeps on `phi` until no value moves by more
/// than `1e-12`. Returns the number of sweep cycles.
pub fn eikonal_sweeps(
    grid: &Grid2D,
    categories: &CategoryMap,
    f: &[f64],
    phi: &mut GridFunction,
) -> usize {
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let (dx, dy) = (grid.dx(), grid.dy());
    let orders: Vec<_> = (0..4).map(|d| sweep_ranges(grid, d)).collect();
    for cycle in 1..=MAX_CYCLES {
        let mut change = 0.0f64;
        for (is, js) in &orders {
            for &i in is {
                for &j in js {
                    let idx = grid.index(i, j);
                    if !categories.get(idx).is_updated() {
                        continue;
                    }
                    let nb = |di: isize, dj: isize| {
                        let (ii, jj) = (i + di, j + dj);
                        if ii < 0 || jj < 0 || ii >= nx || jj >= ny {
                            f64::INFINITY
                        } else {
                            phi[grid.index(ii, jj)]
                        }
                    };
                    let a = nb(-1, 0).min(nb(1, 0));
                    let b = nb(0, -1).min(nb(0, 1));
                    let cand = eikonal_local_solve(a, b, f[idx], dx, dy);
                    if cand < phi[idx] {
                        change = change.max(phi[idx] - cand);
                        phi[idx] = cand;
                    }
                }
            }
        }
        if change <= EIKONAL_STOP {
            return cycle;
        }
    }
    MAX_CYCLES
}

/// First-order Lax-Friedrichs sweeping for `H(grad phi) = f`.
#[allow(clippy::too_many_arguments)]
pub fn first_order_fsm_lf(
    grid: &Grid2D,
    categories: &CategoryMap,
    f: &[f64],
    h: &ContinuousHamiltonian,
    alpha: f64,
    beta: f64,
    pinned: &GridFunction,
) -> GridFunction {
    let mut phi = seeded(grid, categories, pinned);
    lf_sweeps(grid, categories, f, h, alpha, beta, &mut phi);
    phi
}

/// Lax-Friedrichs sweeps on `phi` until the largest change in a cycle falls
/// below `1e-6`. Edge nodes are closed by the extrapolation
/// `phi_0 = min(max(2 phi_1 - phi_2, phi_2), phi_0)` after every sweep.
/// Returns the number of sweep cycles.
pub fn lf_sweeps(
    grid: &Grid2D,
    categories: &CategoryMap,
    f: &[f64],
    h: &ContinuousHamiltonian,
    alpha: f64,
    beta: f64,
    phi: &mut GridFunction,
) -> usize {
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let (dx, dy) = (grid.dx(), grid.dy());
    let denom = alpha / dx + beta / dy;
    let orders: Vec<_> = (0..4).map(|d| sweep_ranges(grid, d)).collect();
    for cycle in 1..=MAX_CYCLES {
        let mut change = 0.0f64;
        for (is, js) in &orders {
            for &i in is {
                if i == 0 || i == nx - 1 {
                    continue;
                }
                for &j in js {
                    if j == 0 || j == ny - 1 {
                        continue;
                    }
                    let idx = grid.index(i, j);
                    if !categories.get(idx).is_updated() {
                        continue;
                    }
                    let (pe, pw) = (phi.at(grid, i + 1, j), phi.at(grid, i - 1, j));
                    let (pn, ps) = (phi.at(grid, i, j + 1), phi.at(grid, i, j - 1));
                    let ubar = (pe - pw) / (2.0 * dx);
                    let vbar = (pn - ps) / (2.0 * dy);
                    let cand = (f[idx] - h.eval(ubar, vbar)
                        + alpha * (pe + pw) / (2.0 * dx)
                        + beta * (pn + ps) / (2.0 * dy))
                        / denom;
                    if cand < phi[idx] {
                        change = change.max(phi[idx] - cand);
                        phi[idx] = cand;
                    }
                }
            }
            change = change.max(close_edges(grid, categories, phi));
        }
        if change < LF_STOP {
            return cycle;
        }
    }
    MAX_CYCLES
}

fn close_edges(grid: &Grid2D, categories: &CategoryMap, phi: &mut GridFunction) -> f64 {
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let mut change = 0.0f64;
    let mut close = |e: (isize, isize), n1: (isize, isize), n2: (isize, isize)| {
        let idx = grid.index(e.0, e.1);
        if !categories.get(idx).is_updated() {
            return;
        }
        let (p1, p2) = (phi.at(grid, n1.0, n1.1), phi.at(grid, n2.0, n2.1));
        let cand = (2.0 * p1 - p2).max(p2);
        if cand < phi[idx] {
            change = change.max(phi[idx] - cand);
            phi[idx] = cand;
        }
    };
    for j in 0..ny {
        close((0, j), (1, j), (2, j));
        close((nx - 1, j), (nx - 2, j), (nx - 3, j));
    }
    for i in 0..nx {
        close((i, 0), (i, 1), (i, 2));
        close((i, ny - 1), (i, ny - 2), (i, ny - 3));
    }
    change
}

/// Forward differences of `phi`, backward on the last column (for `u`) and
/// the last row (for `v`). Ghost entries are left at zero.
pub fn init_derivatives(phi: &GridFunction, grid: &Grid2D) -> (GridFunction, GridFunction) {
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let mut u = GridFunction::zeros(grid);
    let mut v = GridFunction::zeros(grid);
    for j in 0..ny {
        for i in 0..nx {
            let idx = grid.index(i, j);
            u[idx] = if i + 1 < nx {
                (phi.at(grid, i + 1, j) - phi[idx]) / grid.dx()
            } else {
                (phi[idx] - phi.at(grid, i - 1, j)) / grid.dx()
            };
            v[idx] = if j + 1 < ny {
                (phi.at(grid, i, j + 1) - phi[idx]) / grid.dy()
            } else {
                (phi[idx] - phi.at(grid, i, j - 1)) / grid.dy()
            };
        }
    }
    (u, v)
}

/// Classical fifth-order WENO one-sided derivatives `(phi_x-, phi_x+)` from
/// point values at `x_i + (k - 3) h`, `k = 0..7`.
pub fn weno5_derivatives(p: [f64; 7], h: f64) -> (f64, f64) {
    let d: [f64; 6] = std::array::from_fn(|k| (p[k + 1] - p[k]) / h);
    let minus = weno5_combine(d[0], d[1], d[2], d[3], d[4]);
    let plus = weno5_combine(d[5], d[4], d[3], d[2], d[1]);
    (minus, plus)
}

fn weno5_combine(v1: f64, v2: f64, v3: f64, v4: f64, v5: f64) -> f64 {
    const EPS: f64 = 1e-6;
    let c1 = v1 / 3.0 - 7.0 * v2 / 6.0 + 11.0 * v3 / 6.0;
    let c2 = -v2 / 6.0 + 5.0 * v3 / 6.0 + v4 / 3.0;
    let c3 = v3 / 3.0 + 5.0 * v4 / 6.0 - v5 / 6.0;
    let sq = |x: f64| x * x;
    let s1 = 13.0 / 12.0 * sq(v1 - 2.0 * v2 + v3) + 0.25 * sq(v1 - 4.0 * v2 + 3.0 * v3);
    let s2 = 13.0 / 12.0 * sq(v2 - 2.0 * v3 + v4) + 0.25 * sq(v2 - v4);
    let s3 = 13.0 / 12.0 * sq(v3 - 2.0 * v4 + v5) + 0.25 * sq(3.0 * v3 - 4.0 * v4 + v5);
    let a1 = 0.1 / sq(EPS + s1);
    let a2 = 0.6 / sq(EPS + s2);
    let a3 = 0.3 / sq(EPS + s3);
    (a1 * c1 + a2 * c2 + a3 * c3) / (a1 + a2 + a3)
}

/// Derivative of an analytic field along one axis for pinned nodes: the
/// upwind WENO side when both sides agree in sign, the average otherwise.
pub fn weno5_pinned_derivative(sample: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let p: [f64; 7] = std::array::from_fn(|k| sample(x + (k as f64 - 3.0) * h));
    let (m, pl) = weno5_derivatives(p, h);
    if m > 0.0 && pl > 0.0 {
        m
    } else if m < 0.0 && pl < 0.0 {
        pl
    } else {
        0.5 * (m + pl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{classify_points, GammaSet, Rect};

    fn point_source(n: usize) -> (Grid2D, CategoryMap, Vec<f64>, GridFunction) {
        let grid = Grid2D::square(n, Rect::square(-1.0, 1.0)).unwrap();
        let cats = classify_points(&grid, &GammaSet::Points(vec![[0.0, 0.0]]), &[]).unwrap();
        let f = vec![1.0; grid.len()];
        let pinned = GridFunction::from_fn(&grid, f64::hypot);
        (grid, cats, f, pinned)
    }

    #[test]
    fn local_solve_branches() {
        let two = eikonal_local_solve(0.0, 0.0, 1.0, 0.1, 0.1);
        assert!((two - 0.02f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(eikonal_local_solve(0.0, 1.0, 1.0, 0.1, 0.1), 0.1);
        // anisotropic spacing still satisfies the quadratic
        let t = eikonal_local_solve(0.05, 0.02, 2.0, 0.1, 0.05);
        let r = ((t - 0.05) / 0.1).powi(2) + ((t - 0.02) / 0.05).powi(2);
        assert!((r - 4.0).abs() < 1e-12);
    }

    #[test]
    fn point_source_distance_is_first_order() {
        let (grid, cats, f, pinned) = point_source(41);
        let phi = first_order_fsm_eikonal(&grid, &cats, &f, &pinned);
        let mut worst = 0.0f64;
        for idx in grid.interior_indices() {
            let (i, j) = grid.coords(idx);
            worst = worst.max((phi[idx] - grid.x(i).hypot(grid.y(j))).abs());
            assert!(phi[idx] >= 0.0);
        }
        assert!(worst < 0.1, "max error {worst}");
    }

    #[test]
    fn eikonal_sweeps_are_idempotent() {
        let (grid, cats, f, pinned) = point_source(31);
        let mut phi = first_order_fsm_eikonal(&grid, &cats, &f, &pinned);
        let before = phi.clone();
        assert_eq!(eikonal_sweeps(&grid, &cats, &f, &mut phi), 1);
        assert_eq!(phi, before);
    }

    #[test]
    fn lf_start_tracks_eikonal_start() {
        let (grid, cats, f, pinned) = point_source(41);
        let eik = first_order_fsm_eikonal(&grid, &cats, &f, &pinned);
        let lf = first_order_fsm_lf(
            &grid,
            &cats,
            &f,
            &ContinuousHamiltonian::Eikonal,
            1.0,
            1.0,
            &pinned,
        );
        let mut worst = 0.0f64;
        for idx in grid.interior_indices() {
            assert!(lf[idx].is_finite());
            worst = worst.max((lf[idx] - eik[idx]).abs());
        }
        // both are first order in h = 0.05
        assert!(worst < 0.25, "max gap {worst}");
    }

    #[test]
    fn lf_constant_solution_is_fixed() {
        let grid = Grid2D::square(11, Rect::square(0.0, 1.0)).unwrap();
        let cats = CategoryMap::all_updated(&grid);
        let f = vec![0.0; grid.len()];
        let mut phi = GridFunction::filled(&grid, 3.0);
        let cycles = lf_sweeps(
            &grid,
            &cats,
            &f,
            &ContinuousHamiltonian::Eikonal,
            1.0,
            1.0,
            &mut phi,
        );
        assert_eq!(cycles, 1);
        assert!(phi.as_slice().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn derivatives_of_affine_and_quadratic() {
        let grid = Grid2D::square(11, Rect::square(0.0, 1.0)).unwrap();
        let lin = GridFunction::from_fn(&grid, |x, y| 2.0 * x - y);
        let (u, v) = init_derivatives(&lin, &grid);
        for idx in grid.interior_indices() {
            assert!((u[idx] - 2.0).abs() < 1e-12 && (v[idx] + 1.0).abs() < 1e-12);
        }
        let quad = GridFunction::from_fn(&grid, |x, _| x * x);
        let (u, _) = init_derivatives(&quad, &grid);
        assert!((u.at(&grid, 3, 4) - 0.7).abs() < 1e-12);
        // last column: backward difference (1 - 0.81) / 0.1
        assert!((u.at(&grid, 10, 4) - 1.9).abs() < 1e-12);
    }

    #[test]
    fn weno5_is_fifth_order_on_smooth_data() {
        let errs: Vec<f64> = [0.04, 0.02]
            .iter()
            .map(|&h| {
                let p: [f64; 7] = std::array::from_fn(|k| (0.4 + (k as f64 - 3.0) * h).sin());
                let (m, pl) = weno5_derivatives(p, h);
                (m - 0.4f64.cos()).abs().max((pl - 0.4f64.cos()).abs())
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 4.5, "order {order}");
    }

    #[test]
    fn weno5_pinned_derivative_at_kink_averages() {
        let d = weno5_pinned_derivative(f64::abs, 0.0, 0.1);
        assert!(d.abs() < 1e-12);
        let d = weno5_pinned_derivative(|x| 3.0 * x + 1.0, 0.2, 0.1);
        assert!((d - 3.0).abs() < 1e-12);
    }
}

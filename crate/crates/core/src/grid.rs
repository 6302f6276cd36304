//! Uniform 2-D mesh with a ghost layer, point categories and ghost extrapolation.
//!
//! Storage is row-major over the extended (interior + ghost) index space:
//! `x` varies fastest, so the x-neighbours of a point are adjacent in memory and
//! the y-neighbours are one [`Grid2D::stride`] apart.

use std::fmt;
use std::sync::Arc;

use crate::error::GridError;

/// Number of ghost layers on every side of the mesh.
pub const GHOST_WIDTH: usize = 2;

/// Axis-aligned rectangle `[xmin, xmax] x [ymin, ymax]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub const fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Self {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    pub const fn square(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, lo, hi)
    }

    /// Square of half-width `half` centred at `(cx, cy)`.
    pub fn centered(cx: f64, cy: f64, half: f64) -> Self {
        Self::new(cx - half, cx + half, cy - half, cy + half)
    }

    /// Closed containment with a small absolute slack so that grid points
    /// lying on the edge up to round-off count as inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        const SLACK: f64 = 1e-12;
        x >= self.xmin - SLACK
            && x <= self.xmax + SLACK
            && y >= self.ymin - SLACK
            && y <= self.ymax + SLACK
    }
}

/// Uniform rectangular mesh with `nx * ny` interior nodes including the
/// domain edges, plus [`GHOST_WIDTH`] ghost layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    domain: Rect,
    dx: f64,
    dy: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, domain: Rect) -> Result<Self, GridError> {
        if nx < 5 || ny < 5 {
            return Err(GridError::TooFewPoints { nx, ny });
        }
        if !(domain.xmax > domain.xmin && domain.ymax > domain.ymin)
            || ![domain.xmin, domain.xmax, domain.ymin, domain.ymax]
                .iter()
                .all(|v| v.is_finite())
        {
            return Err(GridError::DegenerateDomain);
        }
        let dx = (domain.xmax - domain.xmin) / (nx - 1) as f64;
        let dy = (domain.ymax - domain.ymin) / (ny - 1) as f64;
        Ok(Self {
            nx,
            ny,
            domain,
            dx,
            dy,
        })
    }

    /// `n x n` mesh on `domain`.
    pub fn square(n: usize, domain: Rect) -> Result<Self, GridError> {
        Self::new(n, n, domain)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    /// `max(dx, dy)`.
    pub fn h(&self) -> f64 {
        self.dx.max(self.dy)
    }

    pub fn ghost_width(&self) -> usize {
        GHOST_WIDTH
    }

    /// Row length of the extended storage.
    pub fn stride(&self) -> usize {
        self.nx + 2 * GHOST_WIDTH
    }

    pub fn rows(&self) -> usize {
        self.ny + 2 * GHOST_WIDTH
    }

    /// Number of stored values (interior and ghosts).
    pub fn len(&self) -> usize {
        self.stride() * self.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn interior_len(&self) -> usize {
        self.nx * self.ny
    }

    /// Storage offset of interior-relative indices; ghosts have `i < 0` or
    /// `i >= nx` (resp. `j`).
    #[inline]
    pub fn index(&self, i: isize, j: isize) -> usize {
        let g = GHOST_WIDTH as isize;
        debug_assert!(i >= -g && i < self.nx as isize + g);
        debug_assert!(j >= -g && j < self.ny as isize + g);
        ((j + g) as usize) * self.stride() + (i + g) as usize
    }

    /// Inverse of [`Grid2D::index`].
    #[inline]
    pub fn coords(&self, idx: usize) -> (isize, isize) {
        let g = GHOST_WIDTH as isize;
        let s = self.stride();
        ((idx % s) as isize - g, (idx / s) as isize - g)
    }

    #[inline]
    pub fn x(&self, i: isize) -> f64 {
        self.domain.xmin + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: isize) -> f64 {
        self.domain.ymin + j as f64 * self.dy
    }

    pub fn is_interior(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) < self.ny
    }

    /// Storage offsets of all interior points, `i` fastest.
    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ny as isize)
            .flat_map(move |j| (0..self.nx as isize).map(move |i| self.index(i, j)))
    }
}

/// Values over the extended index space of a [`Grid2D`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self::filled(grid, 0.0)
    }

    pub fn filled(grid: &Grid2D, value: f64) -> Self {
        Self {
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(x, y)` at every interior and ghost node.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (i, j) = grid.coords(idx);
                f(grid.x(i), grid.y(j))
            })
            .collect();
        Self { values }
    }

    pub fn from_vec(grid: &Grid2D, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, grid: &Grid2D, i: isize, j: isize) -> f64 {
        self.values[grid.index(i, j)]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for GridFunction {
    type Output = f64;

    #[inline]
    fn index(&self, idx: usize) -> &f64 {
        &self.values[idx]
    }
}

impl std::ops::IndexMut<usize> for GridFunction {
    #[inline]
    fn index_mut(&mut self, idx: usize) -> &mut f64 {
        &mut self.values[idx]
    }
}

/// Category of a node in the extended index space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointCategory {
    /// On the inflow set; exact value assigned.
    GammaExact,
    /// Outside the mesh; filled by extrapolation.
    Ghost,
    /// Within `2h` of the inflow set or inside a pinned box; exact value assigned.
    NearGammaExact,
    /// Updated point within `2h` of a [`PointCategory::NearGammaExact`] point.
    InteriorNearBand,
    /// Any other updated point.
    InteriorFar,
}

impl PointCategory {
    /// Points whose values are fixed for the whole solve.
    pub fn is_pinned(self) -> bool {
        matches!(self, Self::GammaExact | Self::NearGammaExact)
    }

    /// Points updated by the iteration.
    pub fn is_updated(self) -> bool {
        matches!(self, Self::InteriorNearBand | Self::InteriorFar)
    }
}

pub type DistanceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type RegionFn = Arc<dyn Fn(f64, f64) -> bool + Send + Sync>;

/// The inflow set on which the solution is prescribed.
#[derive(Clone)]
pub enum GammaSet {
    /// Finite set of isolated points.
    Points(Vec<[f64; 2]>),
    /// Unsigned distance to a curve.
    Curve(DistanceFn),
    /// Region predicate; its distance is measured to the mesh nodes inside it.
    Region(RegionFn),
    Union(Vec<GammaSet>),
}

impl fmt::Debug for GammaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Points(p) => f.debug_tuple("Points").field(p).finish(),
            Self::Curve(_) => f.write_str("Curve(..)"),
            Self::Region(_) => f.write_str("Region(..)"),
            Self::Union(parts) => f.debug_tuple("Union").field(parts).finish(),
        }
    }
}

impl GammaSet {
    /// Distance from `(x, y)` to the set. Region distances are rasterised on
    /// `grid` and are only resolved within `cap`; farther points report `cap`.
    pub fn distance(&self, x: f64, y: f64, grid: &Grid2D, cap: f64) -> f64 {
        match self {
            Self::Points(pts) => pts
                .iter()
                .map(|p| (x - p[0]).hypot(y - p[1]))
                .fold(f64::INFINITY, f64::min),
            Self::Curve(d) => d(x, y).abs(),
            Self::Region(inside) => {
                if inside(x, y) {
                    return 0.0;
                }
                let ri = (cap / grid.dx()).ceil() as isize;
                let rj = (cap / grid.dy()).ceil() as isize;
                let ci = ((x - grid.domain().xmin) / grid.dx()).round() as isize;
                let cj = ((y - grid.domain().ymin) / grid.dy()).round() as isize;
                let mut best = cap;
                for j in (cj - rj)..=(cj + rj) {
                    for i in (ci - ri)..=(ci + ri) {
                        if !grid.is_interior(i, j) {
                            continue;
                        }
                        let (px, py) = (grid.x(i), grid.y(j));
                        if inside(px, py) {
                            best = best.min((x - px).hypot(y - py));
                        }
                    }
                }
                best
            }
            Self::Union(parts) => parts
                .iter()
                .map(|g| g.distance(x, y, grid, cap))
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn isolated_points(&self) -> Vec<[f64; 2]> {
        match self {
            Self::Points(p) => p.clone(),
            Self::Union(parts) => parts.iter().flat_map(|g| g.isolated_points()).collect(),
            _ => Vec::new(),
        }
    }
}

/// Category of every node of the extended index space.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryMap {
    categories: Vec<PointCategory>,
}

impl CategoryMap {
    /// Category map with every interior node updated (no inflow set).
    pub fn all_updated(grid: &Grid2D) -> Self {
        let categories = (0..grid.len())
            .map(|idx| {
                let (i, j) = grid.coords(idx);
                if grid.is_interior(i, j) {
                    PointCategory::InteriorFar
                } else {
                    PointCategory::Ghost
                }
            })
            .collect();
        Self { categories }
    }

    pub fn get(&self, idx: usize) -> PointCategory {
        self.categories[idx]
    }

    pub fn as_slice(&self) -> &[PointCategory] {
        &self.categories
    }

    pub fn count(&self, cat: PointCategory) -> usize {
        self.categories.iter().filter(|&&c| c == cat).count()
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Number of nodes updated by the iteration.
    pub fn updated_count(&self) -> usize {
        self.categories.iter().filter(|c| c.is_updated()).count()
    }
}

/// Labels every node of `grid`.
///
/// Nodes at distance zero from `gamma` are [`PointCategory::GammaExact`]; nodes
/// within `2h` of it, or inside any of `pinned_boxes`, are
/// [`PointCategory::NearGammaExact`]. Remaining interior nodes within `2h` of a
/// near-gamma node form the near band.
pub fn classify_points(
    grid: &Grid2D,
    gamma: &GammaSet,
    pinned_boxes: &[Rect],
) -> Result<CategoryMap, GridError> {
    let dom = grid.domain();
    for p in gamma.isolated_points() {
        if !dom.contains(p[0], p[1]) {
            return Err(GridError::GammaOutsideDomain { x: p[0], y: p[1] });
        }
    }

    let h = grid.h();
    let band = 2.0 * h;
    let on_gamma_tol = 1e-12 * h.max(1.0);
    let band_tol = 1e-12 * h.max(1.0);

    let mut categories = vec![PointCategory::Ghost; grid.len()];
    for idx in grid.interior_indices() {
        let (i, j) = grid.coords(idx);
        let (x, y) = (grid.x(i), grid.y(j));
        let d = gamma.distance(x, y, grid, 2.0 * band);
        categories[idx] = if d <= on_gamma_tol {
            PointCategory::GammaExact
        } else if d <= band + band_tol || pinned_boxes.iter().any(|b| b.contains(x, y)) {
            PointCategory::NearGammaExact
        } else {
            PointCategory::InteriorFar
        };
    }
    if !categories.iter().any(|c| c.is_pinned()) {
        return Err(GridError::GammaMissesMesh);
    }

    let ri = (band / grid.dx() + 1e-9).floor() as isize;
    let rj = (band / grid.dy() + 1e-9).floor() as isize;
    let near: Vec<usize> = grid
        .interior_indices()
        .filter(|&idx| {
            if categories[idx] != PointCategory::InteriorFar {
                return false;
            }
            let (i, j) = grid.coords(idx);
            for jj in (j - rj)..=(j + rj) {
                for ii in (i - ri)..=(i + ri) {
                    if !grid.is_interior(ii, jj) {
                        continue;
                    }
                    if categories[grid.index(ii, jj)] != PointCategory::NearGammaExact {
                        continue;
                    }
                    let d = ((ii - i) as f64 * grid.dx()).hypot((jj - j) as f64 * grid.dy());
                    if d <= band + band_tol {
                        return true;
                    }
                }
            }
            false
        })
        .collect();
    for idx in near {
        categories[idx] = PointCategory::InteriorNearBand;
    }
    Ok(CategoryMap { categories })
}

/// Polynomial extrapolation from the `degree + 1` nodes nearest an edge into
/// the two ghost layers beyond it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extrapolator {
    degree: usize,
    /// Weights on nodes `0..5` (counted inward from the edge) for ghost `-1`.
    one: [f64; 5],
    /// Same for ghost `-2`.
    two: [f64; 5],
}

impl Extrapolator {
    pub const MAX_DEGREE: usize = 4;

    pub fn new(degree: usize) -> Result<Self, GridError> {
        if degree > Self::MAX_DEGREE {
            return Err(GridError::ExtrapolationDegree(degree));
        }
        Ok(Self {
            degree,
            one: lagrange_weights(degree, -1.0),
            two: lagrange_weights(degree, -2.0),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Fills every ghost of `values`. Rows are filled first (x-direction),
    /// then columns including the x-ghost columns, which fixes the corners.
    pub fn fill(&self, values: &mut [f64], grid: &Grid2D) {
        debug_assert_eq!(values.len(), grid.len());
        let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
        let s = grid.stride() as isize;
        for j in 0..ny {
            self.fill_line(values, grid.index(0, j) as isize, 1);
            self.fill_line(values, grid.index(nx - 1, j) as isize, -1);
        }
        let g = GHOST_WIDTH as isize;
        for i in -g..nx + g {
            self.fill_line(values, grid.index(i, 0) as isize, s);
            self.fill_line(values, grid.index(i, ny - 1) as isize, -s);
        }
    }

    /// Refills the ghosts of row `j` and column `i` that depend on node
    /// `(i, j)`. Corner ghosts are left alone; no axis-aligned stencil reads
    /// them.
    pub fn fill_near(&self, values: &mut [f64], grid: &Grid2D, i: isize, j: isize) {
        let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
        let reach = self.degree as isize + 1;
        let s = grid.stride() as isize;
        if i < reach {
            self.fill_line(values, grid.index(0, j) as isize, 1);
        }
        if i >= nx - reach {
            self.fill_line(values, grid.index(nx - 1, j) as isize, -1);
        }
        if j < reach {
            self.fill_line(values, grid.index(i, 0) as isize, s);
        }
        if j >= ny - reach {
            self.fill_line(values, grid.index(i, ny - 1) as isize, -s);
        }
    }

    /// `edge` is the boundary node, `step` points into the interior.
    #[inline]
    fn fill_line(&self, values: &mut [f64], edge: isize, step: isize) {
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..=self.degree {
            let v = values[(edge + k as isize * step) as usize];
            a += self.one[k] * v;
            b += self.two[k] * v;
        }
        values[(edge - step) as usize] = a;
        values[(edge - 2 * step) as usize] = b;
    }
}

/// Lagrange basis on nodes `0..=degree` evaluated at `t`.
fn lagrange_weights(degree: usize, t: f64) -> [f64; 5] {
    let mut w = [0.0; 5];
    for (k, wk) in w.iter_mut().enumerate().take(degree + 1) {
        *wk = (0..=degree)
            .filter(|&m| m != k)
            .map(|m| (t - m as f64) / (k as f64 - m as f64))
            .product();
    }
    w
}

/// Degree-4 extrapolation of every ghost of `values`.
pub fn extrapolate_ghosts(values: &mut [f64], grid: &Grid2D) {
    Extrapolator::new(4)
        .expect("degree 4 is supported")
        .fill(values, grid);
}

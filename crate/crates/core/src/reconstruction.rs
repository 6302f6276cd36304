//! Fifth-order Hermite WENO reconstruction of one-sided first derivatives.
//!
//! Each one-sided value at node `i` blends three candidates: the derivative of
//! a Hermite quintic built on four point values and two stored derivatives
//! (the big stencil), and the derivatives of two quadratics on three point
//! values each. Nonlinear weights are driven by smoothness indicators that
//! integrate the squared higher derivatives of each candidate over the cell
//! `[x_{i-1/2}, x_{i+1/2}]`.
//!
//! The smoothness indicators are evaluated in closed form. With the local
//! variable `xi = (x - x_i) / h` and the quintic written as
//! `p(xi) = sum a_k xi^k`, the indicator reduces to
//!
//! ```text
//! beta_1 = (4 a2^2 + 4 a2 a4 + 39 a3^2 + 63 a3 a5 + 3129/5 a4^2 + 438085/28 a5^2) / h^2
//! ```
//!
//! where `a2..a5` are fixed linear combinations of the stencil data.

use crate::grid::{Grid2D, PointCategory};

/// Linear weights and the regularisation constant of the nonlinear weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightParams {
    pub epsilon: f64,
    pub gamma: [f64; 3],
}

impl Default for WeightParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            gamma: [0.98, 0.01, 0.01],
        }
    }
}

impl WeightParams {
    pub fn new(epsilon: f64, gamma: [f64; 3]) -> Result<Self, String> {
        let p = Self { epsilon, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.epsilon > 0.0) {
            return Err(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.gamma.iter().any(|&g| !(g > 0.0)) {
            return Err(format!("linear weights must be positive: {:?}", self.gamma));
        }
        let sum: f64 = self.gamma.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!("linear weights must sum to 1, got {sum}"));
        }
        Ok(())
    }
}

/// Derivative candidates at `x_i`: Hermite quintic, then the two quadratics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateTriple {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// Data along one grid line around node `i`.
///
/// `phi[k]` and `deriv[k]` hold the values at `i - 2 + k`. The minus side
/// reads `phi[0..4]`, the plus side `phi[1..5]`; both use the Hermite data
/// `deriv[1]` and `deriv[3]`. The remaining derivative samples only feed the
/// hybrid selector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilSlice {
    pub phi: [f64; 5],
    pub deriv: [f64; 5],
    pub h: f64,
}

impl StencilSlice {
    /// Samples `phi` and its derivative at `x0 + (k - 2) h`.
    pub fn sample(phi: impl Fn(f64) -> f64, deriv: impl Fn(f64) -> f64, x0: f64, h: f64) -> Self {
        let xs: [f64; 5] = std::array::from_fn(|k| x0 + (k as f64 - 2.0) * h);
        Self {
            phi: xs.map(&phi),
            deriv: xs.map(&deriv),
            h,
        }
    }

    /// Derivative samples on the big stencil of `side`.
    pub fn big_stencil_derivs(&self, side: Side) -> [f64; 4] {
        let d = &self.deriv;
        match side {
            Side::Minus => [d[0], d[1], d[2], d[3]],
            Side::Plus => [d[1], d[2], d[3], d[4]],
        }
    }
}

pub fn candidates_minus(s: &StencilSlice) -> CandidateTriple {
    let [f0, f1, f2, f3, _] = s.phi;
    let h = s.h;
    let (g0, g1) = (h * s.deriv[1], h * s.deriv[3]);
    CandidateTriple {
        d1: (f0 + 18.0 * f1 - 9.0 * f2 - 10.0 * f3 + 9.0 * g0 + 3.0 * g1) / (-18.0 * h),
        d2: (f0 - 4.0 * f1 + 3.0 * f2) / (2.0 * h),
        d3: (f3 - f1) / (2.0 * h),
    }
}

pub fn candidates_plus(s: &StencilSlice) -> CandidateTriple {
    let [_, f0, f1, f2, f3] = s.phi;
    let h = s.h;
    let (g0, g1) = (h * s.deriv[1], h * s.deriv[3]);
    CandidateTriple {
        d1: (10.0 * f0 + 9.0 * f1 - 18.0 * f2 - f3 + 3.0 * g0 + 9.0 * g1) / (-18.0 * h),
        d2: (f2 - f0) / (2.0 * h),
        d3: (-3.0 * f1 + 4.0 * f2 - f3) / (2.0 * h),
    }
}

#[inline]
fn quintic_indicator(a2: f64, a3: f64, a4: f64, a5: f64, h: f64) -> f64 {
    (4.0 * a2 * a2
        + 4.0 * a2 * a4
        + 39.0 * a3 * a3
        + 63.0 * a3 * a5
        + (3129.0 / 5.0) * a4 * a4
        + (438085.0 / 28.0) * a5 * a5)
        / (h * h)
}

pub fn smoothness_indicators(s: &StencilSlice, side: Side) -> [f64; 3] {
    let h = s.h;
    let (g0, g1) = (h * s.deriv[1], h * s.deriv[3]);
    let p = &s.phi;
    match side {
        Side::Minus => {
            let [f0, f1, f2, f3] = [p[0], p[1], p[2], p[3]];
            let a2 = (4.0 * f1 - 8.0 * f2 + 4.0 * f3 + g0 - g1) / 4.0;
            let a3 = (4.0 * f0 + 27.0 * f1 - 36.0 * f2 + 5.0 * f3 + 27.0 * g0 + 3.0 * g1) / 36.0;
            let a4 = -(2.0 * f1 - 4.0 * f2 + 2.0 * f3 + g0 - g1) / 4.0;
            let a5 = -(2.0 * f0 + 9.0 * f1 - 18.0 * f2 + 7.0 * f3 + 9.0 * g0 - 3.0 * g1) / 36.0;
            let q2 = f0 - 2.0 * f1 + f2;
            let q3 = f1 - 2.0 * f2 + f3;
            [
                quintic_indicator(a2, a3, a4, a5, h),
                q2 * q2 / (h * h),
                q3 * q3 / (h * h),
            ]
        }
        Side::Plus => {
            let [f0, f1, f2, f3] = [p[1], p[2], p[3], p[4]];
            let a2 = (4.0 * f0 - 8.0 * f1 + 4.0 * f2 + g0 - g1) / 4.0;
            let a3 = -(5.0 * f0 - 36.0 * f1 + 27.0 * f2 + 4.0 * f3 - 3.0 * g0 - 27.0 * g1) / 36.0;
            let a4 = -(2.0 * f0 - 4.0 * f1 + 2.0 * f2 + g0 - g1) / 4.0;
            let a5 = (7.0 * f0 - 18.0 * f1 + 9.0 * f2 + 2.0 * f3 + 3.0 * g0 - 9.0 * g1) / 36.0;
            let q2 = f0 - 2.0 * f1 + f2;
            let q3 = f1 - 2.0 * f2 + f3;
            [
                quintic_indicator(a2, a3, a4, a5, h),
                q2 * q2 / (h * h),
                q3 * q3 / (h * h),
            ]
        }
    }
}

pub fn nonlinear_weights(beta: [f64; 3], params: &WeightParams) -> [f64; 3] {
    let t = 0.5 * ((beta[0] - beta[1]).abs() + (beta[0] - beta[2]).abs());
    let tau = t * t;
    let w: [f64; 3] =
        std::array::from_fn(|n| params.gamma[n] * (1.0 + tau / (params.epsilon + beta[n])));
    let sum = w[0] + w[1] + w[2];
    w.map(|v| v / sum)
}

pub fn hweno_value(c: &CandidateTriple, w: [f64; 3], params: &WeightParams) -> f64 {
    let [g1, g2, g3] = params.gamma;
    w[0] * (c.d1 / g1 - (g2 / g1) * c.d2 - (g3 / g1) * c.d3) + w[1] * c.d2 + w[2] * c.d3
}

pub fn linear_value(c: &CandidateTriple) -> f64 {
    c.d1
}

/// Which formula produced a one-sided value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReconstructionPath {
    Linear,
    Hweno,
}

/// The linear formula is used only away from the pinned band and where the
/// stored derivative is strictly single-signed on the big stencil.
pub fn hybrid_select(big_stencil_derivs: [f64; 4], category: PointCategory) -> ReconstructionPath {
    if category != PointCategory::InteriorFar {
        return ReconstructionPath::Hweno;
    }
    let d = big_stencil_derivs;
    if d.iter().all(|&v| v > 0.0) || d.iter().all(|&v| v < 0.0) {
        ReconstructionPath::Linear
    } else {
        ReconstructionPath::Hweno
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ReconstructionMode {
    #[default]
    Hweno,
    Hybrid,
}

impl std::str::FromStr for ReconstructionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hweno" => Ok(Self::Hweno),
            "hybrid" => Ok(Self::Hybrid),
            other => Err(format!("unknown reconstruction mode `{other}`")),
        }
    }
}

impl std::fmt::Display for ReconstructionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Hweno => "hweno",
            Self::Hybrid => "hybrid",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructionSettings {
    pub mode: ReconstructionMode,
    pub weights: WeightParams,
}

impl Default for ReconstructionSettings {
    fn default() -> Self {
        Self {
            mode: ReconstructionMode::Hweno,
            weights: WeightParams::default(),
        }
    }
}

/// Tally of one-sided evaluations by path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReconCounters {
    pub linear: u64,
    pub hweno: u64,
}

impl ReconCounters {
    pub fn merge(&mut self, other: ReconCounters) {
        self.linear += other.linear;
        self.hweno += other.hweno;
    }

    pub fn linear_fraction(&self) -> f64 {
        let total = self.linear + self.hweno;
        if total == 0 {
            0.0
        } else {
            self.linear as f64 / total as f64
        }
    }
}

/// One-sided derivatives at a node.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct OneSided {
    pub xm: f64,
    pub xp: f64,
    pub ym: f64,
    pub yp: f64,
}

/// One-sided value of `side`, routed through the hybrid selector when
/// `hybrid` is set.
#[inline]
pub fn one_sided(
    s: &StencilSlice,
    side: Side,
    category: PointCategory,
    settings: &ReconstructionSettings,
    counters: &mut ReconCounters,
) -> f64 {
    let c = match side {
        Side::Minus => candidates_minus(s),
        Side::Plus => candidates_plus(s),
    };
    if settings.mode == ReconstructionMode::Hybrid
        && hybrid_select(s.big_stencil_derivs(side), category) == ReconstructionPath::Linear
    {
        counters.linear += 1;
        return linear_value(&c);
    }
    counters.hweno += 1;
    let beta = smoothness_indicators(s, side);
    let w = nonlinear_weights(beta, &settings.weights);
    hweno_value(&c, w, &settings.weights)
}

/// Reconstructs `(phi_x-, phi_x+, phi_y-, phi_y+)` at storage offset `idx`.
/// The stencil reaches two nodes in each direction, so ghosts must be filled.
#[inline]
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_point(
    phi: &[f64],
    u: &[f64],
    v: &[f64],
    grid: &Grid2D,
    idx: usize,
    category: PointCategory,
    settings: &ReconstructionSettings,
    counters: &mut ReconCounters,
) -> OneSided {
    let s = grid.stride();
    let xs = StencilSlice {
        phi: [
            phi[idx - 2],
            phi[idx - 1],
            phi[idx],
            phi[idx + 1],
            phi[idx + 2],
        ],
        deriv: [u[idx - 2], u[idx - 1], u[idx], u[idx + 1], u[idx + 2]],
        h: grid.dx(),
    };
    let ys = StencilSlice {
        phi: [
            phi[idx - 2 * s],
            phi[idx - s],
            phi[idx],
            phi[idx + s],
            phi[idx + 2 * s],
        ],
        deriv: [
            v[idx - 2 * s],
            v[idx - s],
            v[idx],
            v[idx + s],
            v[idx + 2 * s],
        ],
        h: grid.dy(),
    };
    OneSided {
        xm: one_sided(&xs, Side::Minus, category, settings, counters),
        xp: one_sided(&xs, Side::Plus, category, settings, counters),
        ym: one_sided(&ys, Side::Minus, category, settings, counters),
        yp: one_sided(&ys, Side::Plus, category, settings, counters),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridFunction, Rect};
    use proptest::prelude::*;

    const H: f64 = 0.1;

    fn poly_slice(coeffs: &[f64], x0: f64, h: f64) -> StencilSlice {
        let p = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let dp = |x: f64| {
            coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
        };
        StencilSlice::sample(p, dp, x0, h)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn linear_data_gives_unit_candidates() {
        let s = poly_slice(&[0.0, 1.0], 0.0, H);
        for c in [candidates_minus(&s), candidates_plus(&s)] {
            assert!(close(c.d1, 1.0, 1e-13) && close(c.d2, 1.0, 1e-13) && close(c.d3, 1.0, 1e-13));
        }
    }

    #[test]
    fn even_data_gives_zero_candidates() {
        let s = poly_slice(&[0.0, 0.0, 1.0], 0.0, H);
        let c = candidates_minus(&s);
        assert!(close(c.d1, 0.0, 1e-14) && close(c.d2, 0.0, 1e-14) && close(c.d3, 0.0, 1e-14));
    }

    #[test]
    fn quintic_candidates() {
        let s = poly_slice(&[0.0, 0.0, 0.0, 0.0, 0.0, 1.0], 0.0, H);
        let m = candidates_minus(&s);
        assert!(close(m.d1, 0.0, 1e-15));
        assert!(close(m.d2, -1.4e-3, 1e-15));
        assert!(close(m.d3, 1e-4, 1e-15));
        let p = candidates_plus(&s);
        assert!(close(p.d1, 0.0, 1e-15));
        assert!(close(p.d2, 1e-4, 1e-15));
        assert!(close(p.d3, -1.4e-3, 1e-15));
    }

    #[test]
    fn linear_value_is_quintic_candidate() {
        let s = poly_slice(&[0.3, -1.0, 2.0, 0.5], 0.2, H);
        let c = candidates_minus(&s);
        assert_eq!(linear_value(&c), c.d1);
    }

    #[test]
    fn affine_data_has_zero_indicators() {
        let s = poly_slice(&[2.0, -3.0], 0.4, H);
        for side in [Side::Minus, Side::Plus] {
            let b = smoothness_indicators(&s, side);
            assert!(b.iter().all(|&v| v.abs() < 1e-20), "{b:?}");
        }
    }

    #[test]
    fn quadratic_indicator_matches_closed_form() {
        let c2 = 1.7;
        let s = poly_slice(&[0.0, 0.0, c2], 0.0, H);
        let b = smoothness_indicators(&s, Side::Minus);
        let expect = 4.0 * c2 * c2 * H * H;
        assert!(close(b[1], expect, 1e-12) && close(b[2], expect, 1e-12));
    }

    #[test]
    fn equal_indicators_give_linear_weights() {
        let p = WeightParams::default();
        for c in [0.0, 1e-9, 3.5] {
            let w = nonlinear_weights([c, c, c], &p);
            for (wn, gn) in w.iter().zip(p.gamma) {
                assert!(close(*wn, gn, 1e-15));
            }
        }
    }

    #[test]
    fn weights_for_rough_big_stencil() {
        let p = WeightParams::default();
        let w = nonlinear_weights([1.0, 0.0, 0.0], &p);
        // tau = 1
        let wb = [
            0.98 * (1.0 + 1.0 / (1e-6 + 1.0)),
            0.01 * (1.0 + 1.0 / 1e-6),
            0.01 * (1.0 + 1.0 / 1e-6),
        ];
        let sum: f64 = wb.iter().sum();
        for n in 0..3 {
            assert!(close(w[n], wb[n] / sum, 1e-15));
        }
        assert!(close(w.iter().sum(), 1.0, 1e-15));
    }

    #[test]
    fn weno_combination_identities() {
        let p = WeightParams::default();
        let c = CandidateTriple {
            d1: 0.7,
            d2: -0.2,
            d3: 1.3,
        };
        assert!(close(hweno_value(&c, p.gamma, &p), 0.7, 1e-15));
        assert!(close(hweno_value(&c, [0.0, 1.0, 0.0], &p), -0.2, 1e-15));
        assert!(close(hweno_value(&c, [0.0, 0.0, 1.0], &p), 1.3, 1e-15));
    }

    #[test]
    fn smooth_sine_is_fifth_order_accurate() {
        let h = 0.02;
        let s = StencilSlice::sample(f64::sin, f64::cos, 0.3, h);
        let settings = ReconstructionSettings::default();
        let mut cnt = ReconCounters::default();
        for side in [Side::Minus, Side::Plus] {
            let v = one_sided(&s, side, PointCategory::InteriorFar, &settings, &mut cnt);
            assert!((v - 0.3f64.cos()).abs() < 1e-8, "{side:?}: {v}");
        }
    }

    #[test]
    fn hybrid_selection_rules() {
        let pos = [0.2, 0.5, 0.1, 0.9];
        assert_eq!(
            hybrid_select(pos, PointCategory::InteriorFar),
            ReconstructionPath::Linear
        );
        assert_eq!(
            hybrid_select([0.2, -0.5, 0.1, 0.9], PointCategory::InteriorFar),
            ReconstructionPath::Hweno
        );
        assert_eq!(
            hybrid_select(pos, PointCategory::InteriorNearBand),
            ReconstructionPath::Hweno
        );
        assert_eq!(
            hybrid_select([0.2, 0.0, 0.1, 0.9], PointCategory::InteriorFar),
            ReconstructionPath::Hweno
        );
        assert_eq!(
            hybrid_select([-0.2, -0.5, -0.1, -0.9], PointCategory::InteriorFar),
            ReconstructionPath::Linear
        );
    }

    #[test]
    fn degenerate_flat_data() {
        let s = StencilSlice {
            phi: [2.0; 5],
            deriv: [0.0; 5],
            h: H,
        };
        let b = smoothness_indicators(&s, Side::Minus);
        assert_eq!(b, [0.0; 3]);
        let settings = ReconstructionSettings::default();
        let mut cnt = ReconCounters::default();
        let v = one_sided(
            &s,
            Side::Plus,
            PointCategory::InteriorFar,
            &settings,
            &mut cnt,
        );
        assert_eq!(v, 0.0);
    }

    fn grid_fields(
        f: impl Fn(f64, f64) -> f64,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> (Grid2D, GridFunction, GridFunction, GridFunction) {
        let grid = Grid2D::square(51, Rect::square(-0.2, 0.8)).unwrap();
        (
            grid.clone(),
            GridFunction::from_fn(&grid, f),
            GridFunction::from_fn(&grid, fx),
            GridFunction::from_fn(&grid, fy),
        )
    }

    #[test]
    fn point_reconstruction_of_plane() {
        let (grid, phi, u, v) = grid_fields(|x, y| x + 2.0 * y, |_, _| 1.0, |_, _| 2.0);
        let mut cnt = ReconCounters::default();
        let d = reconstruct_point(
            phi.as_slice(),
            u.as_slice(),
            v.as_slice(),
            &grid,
            grid.index(10, 17),
            PointCategory::InteriorFar,
            &ReconstructionSettings::default(),
            &mut cnt,
        );
        for (val, want) in [(d.xm, 1.0), (d.xp, 1.0), (d.ym, 2.0), (d.yp, 2.0)] {
            assert!(close(val, want, 1e-12));
        }
        assert_eq!(cnt.hweno, 4);
    }

    #[test]
    fn point_reconstruction_of_smooth_product() {
        let (grid, phi, u, v) = grid_fields(
            |x, y| x.sin() * y.sin(),
            |x, y| x.cos() * y.sin(),
            |x, y| x.sin() * y.cos(),
        );
        // (0.3, 0.4) is node (25, 30) with h = 0.02
        let idx = grid.index(25, 30);
        assert!(close(grid.x(25), 0.3, 1e-14) && close(grid.y(30), 0.4, 1e-14));
        let mut cnt = ReconCounters::default();
        let d = reconstruct_point(
            phi.as_slice(),
            u.as_slice(),
            v.as_slice(),
            &grid,
            idx,
            PointCategory::InteriorFar,
            &ReconstructionSettings::default(),
            &mut cnt,
        );
        let (px, py) = (0.3f64.cos() * 0.4f64.sin(), 0.3f64.sin() * 0.4f64.cos());
        for (val, want) in [(d.xm, px), (d.xp, px), (d.ym, py), (d.yp, py)] {
            assert!((val - want).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn weights_are_a_partition_of_unity(b1 in 0.0..1e3f64, b2 in 0.0..1e3f64, b3 in 0.0..1e3f64) {
            let w = nonlinear_weights([b1, b2, b3], &WeightParams::default());
            prop_assert!(w.iter().all(|&v| v >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn indicators_are_nonnegative(
            phi in prop::array::uniform5(-10.0..10.0f64),
            deriv in prop::array::uniform5(-10.0..10.0f64),
            h in 1e-3..1.0f64,
        ) {
            let s = StencilSlice { phi, deriv, h };
            for side in [Side::Minus, Side::Plus] {
                prop_assert!(smoothness_indicators(&s, side).iter().all(|&b| b >= 0.0));
            }
        }

        #[test]
        fn reflection_swaps_and_negates(
            phi in prop::array::uniform5(-5.0..5.0f64),
            deriv in prop::array::uniform5(-5.0..5.0f64),
        ) {
            let s = StencilSlice { phi, deriv, h: H };
            let mut r = s;
            r.phi.reverse();
            r.deriv.reverse();
            r.deriv.iter_mut().for_each(|d| *d = -*d);
            let settings = ReconstructionSettings::default();
            let mut cnt = ReconCounters::default();
            let cat = PointCategory::InteriorFar;
            let m = one_sided(&s, Side::Minus, cat, &settings, &mut cnt);
            let p = one_sided(&s, Side::Plus, cat, &settings, &mut cnt);
            let rm = one_sided(&r, Side::Minus, cat, &settings, &mut cnt);
            let rp = one_sided(&r, Side::Plus, cat, &settings, &mut cnt);
            let scale = 1.0 + m.abs().max(p.abs());
            prop_assert!((rp + m).abs() <= 1e-12 * scale);
            prop_assert!((rm + p).abs() <= 1e-12 * scale);
            let cp = candidates_plus(&r);
            let cm = candidates_minus(&s);
            prop_assert!((cp.d1 + cm.d1).abs() <= 1e-12 * (1.0 + cm.d1.abs()));
        }
    }
}

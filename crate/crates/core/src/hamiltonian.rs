//! Continuous Hamiltonians and the two monotone numerical Hamiltonians.

use std::fmt;
use std::sync::Arc;

/// Elastic parameters of a 2-D transversely isotropic medium.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElasticMedium {
    pub a11: f64,
    pub a33: f64,
    pub a13: f64,
    pub a44: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveMode {
    QuasiP,
    QuasiSV,
}

impl ElasticMedium {
    pub const fn new(a11: f64, a33: f64, a13: f64, a44: f64) -> Self {
        Self { a11, a33, a13, a44 }
    }

    /// Coefficients `c1..c5` of the quartic slowness relation
    /// `c1 p^4 + c2 p^2 q^2 + c3 q^4 + c4 p^2 + c5 q^2 + 1 = 0`.
    pub fn slowness_coefficients(&self) -> [f64; 5] {
        let Self { a11, a33, a13, a44 } = *self;
        [
            a11 * a44,
            a11 * a33 + a44 * a44 - (a13 + a44) * (a13 + a44),
            a33 * a44,
            -(a11 + a44),
            -(a33 + a44),
        ]
    }

    /// Travel-time Hamiltonian of one wave mode. It is positively
    /// 1-homogeneous and equals 1 on the corresponding slowness branch.
    pub fn hamiltonian(&self, mode: WaveMode, p: f64, q: f64) -> f64 {
        let [c1, c2, c3, c4, c5] = self.slowness_coefficients();
        let (p2, q2) = (p * p, q * q);
        let b = c4 * p2 + c5 * q2;
        let a = c1 * p2 * p2 + c2 * p2 * q2 + c3 * q2 * q2;
        let disc = (0.25 * b * b - a).max(0.0).sqrt();
        let inner = match mode {
            WaveMode::QuasiP => -0.5 * b + disc,
            WaveMode::QuasiSV => -0.5 * b - disc,
        };
        inner.max(0.0).sqrt()
    }
}

pub type HamiltonianFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The continuous Hamiltonian `H(phi_x, phi_y)`.
#[derive(Clone)]
pub enum ContinuousHamiltonian {
    /// `sqrt(p^2 + q^2)`.
    Eikonal,
    Elastic {
        medium: ElasticMedium,
        mode: WaveMode,
    },
    Custom(HamiltonianFn),
}

impl fmt::Debug for ContinuousHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Eikonal => f.write_str("Eikonal"),
            Self::Elastic { medium, mode } => f
                .debug_struct("Elastic")
                .field("medium", medium)
                .field("mode", mode)
                .finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl ContinuousHamiltonian {
    #[inline]
    pub fn eval(&self, p: f64, q: f64) -> f64 {
        match self {
            Self::Eikonal => p.hypot(q),
            Self::Elastic { medium, mode } => medium.hamiltonian(*mode, p, q),
            Self::Custom(h) => h(p, q),
        }
    }
}

/// Numerical Hamiltonian used by the residual.
#[derive(Clone, Debug)]
pub enum HamiltonianKind {
    GodunovEikonal,
    LaxFriedrichs {
        h: ContinuousHamiltonian,
        alpha: f64,
        beta: f64,
    },
}

impl HamiltonianKind {
    /// `(alpha, beta)` entering the pseudo time step. The Eikonal
    /// Hamiltonian has unit partial-derivative bounds.
    pub fn dissipation(&self) -> (f64, f64) {
        match self {
            Self::GodunovEikonal => (1.0, 1.0),
            Self::LaxFriedrichs { alpha, beta, .. } => (*alpha, *beta),
        }
    }

    #[inline]
    pub fn numerical(&self, um: f64, up: f64, vm: f64, vp: f64) -> f64 {
        match self {
            Self::GodunovEikonal => godunov_eikonal(um, up, vm, vp),
            Self::LaxFriedrichs { h, alpha, beta } => {
                lax_friedrichs(|p, q| h.eval(p, q), um, up, vm, vp, *alpha, *beta)
            }
        }
    }

    /// `f - H^(u-, u+, v-, v+)`.
    #[inline]
    pub fn residual(&self, f: f64, um: f64, up: f64, vm: f64, vp: f64) -> f64 {
        f - self.numerical(um, up, vm, vp)
    }
}

#[inline]
pub fn godunov_eikonal(um: f64, up: f64, vm: f64, vp: f64) -> f64 {
    let a = um.max(0.0).max(-up.min(0.0));
    let b = vm.max(0.0).max(-vp.min(0.0));
    a.hypot(b)
}

#[inline]
pub fn lax_friedrichs(
    h: impl Fn(f64, f64) -> f64,
    um: f64,
    up: f64,
    vm: f64,
    vp: f64,
    alpha: f64,
    beta: f64,
) -> f64 {
    h(0.5 * (um + up), 0.5 * (vm + vp)) - 0.5 * alpha * (up - um) - 0.5 * beta * (vp - vm)
}

/// Derivative box `[pmin, pmax] x [qmin, qmax]` over which `|H_1|`, `|H_2|`
/// are sampled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeBox {
    pub pmin: f64,
    pub pmax: f64,
    pub qmin: f64,
    pub qmax: f64,
}

impl DerivativeBox {
    pub const UNIT: Self = Self {
        pmin: -1.0,
        pmax: 1.0,
        qmin: -1.0,
        qmax: 1.0,
    };

    /// Smallest box containing all finite `(u, v)` pairs.
    pub fn bounding(u: impl IntoIterator<Item = f64>, v: impl IntoIterator<Item = f64>) -> Self {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            it.filter(|x| x.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                })
        };
        let (pmin, pmax) = span(&mut u.into_iter());
        let (qmin, qmax) = span(&mut v.into_iter());
        if pmin > pmax || qmin > qmax {
            return Self::UNIT;
        }
        Self {
            pmin,
            pmax,
            qmin,
            qmax,
        }
    }
}

/// Inflation applied to sampled bounds on `|H_1|`, `|H_2|`.
pub const DISSIPATION_SAFETY: f64 = 1.2;

/// Samples `|dH/dp|` and `|dH/dq|` by central differences on a
/// `samples x samples` lattice over `bounds` and returns the maxima times
/// [`DISSIPATION_SAFETY`].
pub fn dissipation_bounds(
    h: &ContinuousHamiltonian,
    bounds: DerivativeBox,
    samples: usize,
) -> (f64, f64) {
    let samples = samples.max(2);
    let scale = bounds
        .pmin
        .abs()
        .max(bounds.pmax.abs())
        .max(bounds.qmin.abs())
        .max(bounds.qmax.abs())
        .max(1e-3);
    let eps = 1e-6 * scale;
    let lerp = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (samples - 1) as f64;
    let (mut alpha, mut beta) = (0.0f64, 0.0f64);
    for jq in 0..samples {
        let q = lerp(bounds.qmin, bounds.qmax, jq);
        for ip in 0..samples {
            let p = lerp(bounds.pmin, bounds.pmax, ip);
            let hp = (h.eval(p + eps, q) - h.eval(p - eps, q)) / (2.0 * eps);
            let hq = (h.eval(p, q + eps) - h.eval(p, q - eps)) / (2.0 * eps);
            if hp.is_finite() {
                alpha = alpha.max(hp.abs());
            }
            if hq.is_finite() {
                beta = beta.max(hq.abs());
            }
        }
    }
    (DISSIPATION_SAFETY * alpha, DISSIPATION_SAFETY * beta)
}

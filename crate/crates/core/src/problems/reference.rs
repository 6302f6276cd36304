//! Travel times of a homogeneous elastic medium from a point source.
//!
//! For a positively 1-homogeneous Hamiltonian the first-arrival time from
//! the origin is the support function of the slowness set `{H <= 1}`:
//! `T(x) = max_theta (x, y) . p(theta)` with `p(theta) = r(theta) (cos, sin)`
//! on the slowness curve. For a nonconvex branch this picks up the convex
//! hull, which is what the first arrival sees.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use crate::error::SolveError;
use crate::hamiltonian::{ElasticMedium, WaveMode};

pub const PWAVE_MEDIUM: ElasticMedium = ElasticMedium::new(15.0638, 10.8373, 1.6381, 3.1258);
pub const SVWAVE_MEDIUM: ElasticMedium = ElasticMedium::new(15.90, 6.21, 4.82, 4.00);

/// Slowness curve of one wave mode tabulated on a uniform angle grid.
#[derive(Clone, Debug)]
pub struct SlownessSurface {
    medium: ElasticMedium,
    mode: WaveMode,
    radii: Vec<f64>,
}

impl SlownessSurface {
    pub const SAMPLES: usize = 4096;

    pub fn new(medium: ElasticMedium, mode: WaveMode) -> Result<Self, SolveError> {
        let radii = (0..Self::SAMPLES)
            .map(|k| {
                let theta = TAU * k as f64 / Self::SAMPLES as f64;
                let r = radius(&medium, mode, theta);
                if r.is_finite() && r > 0.0 {
                    Ok(r)
                } else {
                    Err(SolveError::InvalidConfig(format!(
                        "slowness relation has no positive root at angle {theta:.6}"
                    )))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            medium,
            mode,
            radii,
        })
    }

    pub fn medium(&self) -> ElasticMedium {
        self.medium
    }

    pub fn mode(&self) -> WaveMode {
        self.mode
    }

    /// Slowness radius along direction `theta`.
    pub fn radius(&self, theta: f64) -> f64 {
        radius(&self.medium, self.mode, theta)
    }

    /// First-arrival time at `(x, y)` for a source at the origin.
    pub fn travel_time(&self, x: f64, y: f64) -> f64 {
        if x == 0.0 && y == 0.0 {
            return 0.0;
        }
        let step = TAU / Self::SAMPLES as f64;
        let (mut best_k, mut best) = (0, f64::NEG_INFINITY);
        for (k, r) in self.radii.iter().enumerate() {
            let theta = step * k as f64;
            let g = (x * theta.cos() + y * theta.sin()) * r;
            if g > best {
                best = g;
                best_k = k;
            }
        }
        let g = |theta: f64| (x * theta.cos() + y * theta.sin()) * self.radius(theta);
        let centre = step * best_k as f64;
        let refined = golden_max(g, centre - step, centre + step);
        best.max(refined)
    }
}

fn radius(medium: &ElasticMedium, mode: WaveMode, theta: f64) -> f64 {
    1.0 / medium.hamiltonian(mode, theta.cos(), theta.sin())
}

fn golden_max(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    gc.max(gd)
}

fn pwave_surface() -> &'static SlownessSurface {
    static SURFACE: OnceLock<SlownessSurface> = OnceLock::new();
    SURFACE.get_or_init(|| {
        SlownessSurface::new(PWAVE_MEDIUM, WaveMode::QuasiP)
            .expect("quasi-P slowness curve has positive radius in every direction")
    })
}

/// Reference travel time of the quasi-P medium for a source at the origin.
pub fn pwave_reference(x: f64, y: f64) -> f64 {
    pwave_surface().travel_time(x, y)
}

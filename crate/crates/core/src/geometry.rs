//! Coupling rates for other mass shapes, and the exact classical approach of
//! two released point masses.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::constants::{Constants, CODATA};
use crate::error::{require_non_negative, require_positive, Error, Result};

/// Centre distance over sphere radius for the sphere-pair conventions.
pub const SPHERE_SEPARATION_RATIO: f64 = 2.1;
/// Rod–sphere conventions: `L = 1.1 R_A`, `R_B = 0.1 R_A`.
pub const ROD_SEPARATION_RATIO: f64 = 1.1;
pub const ROD_RADIUS_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeKind {
    EqualSpheres,
    /// Second sphere scaled by `alpha` in radius.
    UnequalSpheres { alpha: f64 },
    /// Thin rod of length `d` at distance `L` from a sphere; `varsigma = 2L/d`.
    RodSphere { varsigma: f64 },
    PlanePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapePair {
    pub kind: ShapeKind,
    /// Trap frequency of mass A, 1/s.
    pub omega_a: f64,
    /// kg/m³
    pub density: f64,
}

impl ShapePair {
    pub fn validate(&self) -> Result<()> {
        require_positive("omega_a", self.omega_a)?;
        require_positive("density", self.density)?;
        match self.kind {
            ShapeKind::UnequalSpheres { alpha } => require_non_negative("alpha", alpha),
            ShapeKind::RodSphere { varsigma } => require_positive("varsigma", varsigma),
            _ => Ok(()),
        }
    }

    /// Intermodal interaction rate in 1/s.
    pub fn rate(&self) -> Result<f64> {
        self.validate()?;
        let (rho, w) = (self.density, self.omega_a);
        Ok(match self.kind {
            ShapeKind::EqualSpheres => sphere_pair_rate_coefficient(rho) / w,
            ShapeKind::UnequalSpheres { alpha } => rate_unequal_spheres_with_density(alpha, w, rho),
            ShapeKind::RodSphere { varsigma } => rod_sphere_rate_coefficient(rho) * rod_sphere_f(varsigma) / w,
            ShapeKind::PlanePoint => plane_point_coupling(),
        })
    }
}

/// `r₁ = 2Gm/(ωL³)` for two identical spheres.
pub fn rate_equal_spheres(mass: f64, omega: f64, separation: f64) -> f64 {
    rate_equal_spheres_with(&CODATA, mass, omega, separation)
}

pub fn rate_equal_spheres_with(c: &Constants, mass: f64, omega: f64, separation: f64) -> f64 {
    2.0 * c.g * mass / (omega * separation.powi(3))
}

/// Coupling rate between two spheres of different masses and trap
/// frequencies: `2G√(m_A m_B)/(L³√(ω_A ω_B))`.
pub fn rate_two_spheres(c: &Constants, m_a: f64, m_b: f64, omega_a: f64, omega_b: f64, separation: f64) -> f64 {
    2.0 * c.g * (m_a * m_b).sqrt() / (separation.powi(3) * (omega_a * omega_b).sqrt())
}

/// `r₁·ω` for equal spheres of density `ρ` at `L = 2.1R`:
/// `8πGρ/(3·2.1³)`.
pub fn sphere_pair_rate_coefficient(density: f64) -> f64 {
    8.0 * PI * CODATA.g * density / (3.0 * SPHERE_SEPARATION_RATIO.powi(3))
}

/// Osmium coefficient times `α^{9/4}/ω_A`.
pub fn rate_unequal_spheres(alpha: f64, omega_a: f64) -> f64 {
    rate_unequal_spheres_with_density(alpha, omega_a, crate::constants::OSMIUM_DENSITY)
}

/// Rate for `R_B = αR_A`, `L = 2.1R_A` and `ω_B = ω_A√(m_A/m_B)`.
pub fn rate_unequal_spheres_with_density(alpha: f64, omega_a: f64, density: f64) -> f64 {
    sphere_pair_rate_coefficient(density) * alpha.powf(2.25) / omega_a
}

/// Shape factor of the rod–sphere coupling as a function of `ς = 2L/d`.
pub fn rod_sphere_f(varsigma: f64) -> f64 {
    let s2 = varsigma * varsigma;
    let root = (1.0 + s2).sqrt();
    let num = s2 * ((s2 - 1.0) * root - 1.0);
    let den = (1.0 + root).powi(2) * (1.0 + s2).powf(1.5);
    varsigma.powf(0.25) * (1.0 - num / den)
}

/// `r₃·ω_A/f(ς)` for the rod–sphere conventions at density `ρ`.
pub fn rod_sphere_rate_coefficient(density: f64) -> f64 {
    let g = CODATA.g;
    2.0 * g * density * (4.0_f64 / 3.0).powf(0.25) * PI * ROD_RADIUS_RATIO.powf(1.5)
        * (2.0 * ROD_SEPARATION_RATIO).powf(-0.25)
        / ROD_SEPARATION_RATIO.powi(2)
}

/// Osmium rod–sphere rate `r₃ = c·f(ς)/ω_A`.
pub fn rate_rod_sphere(varsigma: f64, omega_a: f64) -> f64 {
    rod_sphere_rate_coefficient(crate::constants::OSMIUM_DENSITY) * rod_sphere_f(varsigma) / omega_a
}

/// Maximizer of [`rod_sphere_f`] on `(0, 100]` and the maximum.
pub fn rod_sphere_optimum() -> (f64, f64) {
    const N: usize = 10_000;
    let grid = |i: usize| 100.0 * i as f64 / N as f64;
    let best = (1..=N)
        .max_by(|&a, &b| rod_sphere_f(grid(a)).total_cmp(&rod_sphere_f(grid(b))))
        .unwrap_or(1);
    let (mut lo, mut hi) = (grid(best - 1).max(1e-9), grid((best + 1).min(N)));
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (rod_sphere_f(x1), rod_sphere_f(x2));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = rod_sphere_f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = rod_sphere_f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, rod_sphere_f(x))
}

/// A point mass facing an infinite plane feels a force independent of
/// their separation, so there is no entangling term.
pub fn plane_point_coupling() -> f64 {
    0.0
}

/// Time at which two point masses released at rest a distance `L` apart meet.
pub fn contact_time(mass: f64, separation: f64) -> f64 {
    contact_time_with(&CODATA, mass, separation)
}

pub fn contact_time_with(c: &Constants, mass: f64, separation: f64) -> f64 {
    separation * PI / (2.0 * SQRT_2) / (2.0 * c.g * mass / separation).sqrt()
}

/// Left-hand side of the implicit trajectory relation, `t√(2Gm/L)` as a
/// function of the displacement `x`.
fn trajectory_clock(separation: f64, x: f64) -> f64 {
    let l = separation;
    let gap = l - 2.0 * x;
    let arc = (8.0 * x * gap).sqrt().atan2(l - 4.0 * x);
    (x * gap).sqrt() + l / (2.0 * SQRT_2) * arc
}

/// Displacement `x_t ≥ 0` of each mass toward the other at time `t` after
/// release from rest; the partner moves by `−x_t`.
pub fn classical_trajectory(mass: f64, separation: f64, t: f64) -> Result<f64> {
    classical_trajectory_with(&CODATA, mass, separation, t)
}

pub fn classical_trajectory_with(c: &Constants, mass: f64, separation: f64, t: f64) -> Result<f64> {
    require_positive("mass", mass)?;
    require_positive("separation", separation)?;
    require_non_negative("t", t)?;
    let l = separation;
    let t_c = contact_time_with(c, mass, l);
    if t >= t_c {
        return Err(Error::Collision { t, contact_time: t_c });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let target = t * (2.0 * c.g * mass / l).sqrt();

    // The constant-force estimate is a lower bound; use it to shrink the bracket.
    let (mut lo, mut hi) = (0.0, 0.5 * l);
    let guess = 0.5 * c.g * mass * t * t / (l * l);
    if guess < hi && trajectory_clock(l, guess) <= target {
        lo = guess;
    } else if guess < hi {
        hi = guess;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if trajectory_clock(l, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    // Newton polish with dF/dx = √((L − 2x)/x).
    let slope = ((l - 2.0 * x) / x).sqrt();
    if slope.is_finite() && slope > 0.0 {
        let step = (trajectory_clock(l, x) - target) / slope;
        let polished = x - step;
        if polished > 0.0 && polished < 0.5 * l {
            x = polished;
        }
    }
    Ok(x)
}

//! Closed-form figures of merit and entanglement laws.
//!
//! Regime limits are reported through [`Flagged::in_regime`] instead of
//! errors so that parameter sweeps degrade gracefully at their edges.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::constants::{Constants, CODATA};

/// Upper limit on η for the released-mass law to be trusted.
pub const RELEASED_ETA_LIMIT: f64 = 1e-2;
/// Upper limit on √η·ωt for the released-mass law to be trusted.
pub const RELEASED_TIME_LIMIT: f64 = 1e-1;

/// A value together with a flag telling whether its inputs were inside the
/// approximation's regime of validity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flagged<T> {
    pub value: T,
    pub in_regime: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakPrediction {
    /// Peak logarithmic negativity.
    pub e_max: f64,
    /// Time of the peak in seconds.
    pub t_max: f64,
}

/// Released-mass figure of merit `σ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SigmaMerit {
    pub sigma: f64,
}

/// Dimensionless gravitational coupling `η = 2Gm/(ω²L³)`.
pub fn eta(mass: f64, omega: f64, separation: f64) -> f64 {
    eta_with(&CODATA, mass, omega, separation)
}

pub fn eta_with(c: &Constants, mass: f64, omega: f64, separation: f64) -> f64 {
    2.0 * c.g * mass / (omega * omega * separation.powi(3))
}

/// η for homogeneous spheres at `L = ratio·R`: `8πGρ / (3 ratio³ ω²)`,
/// independent of the sphere size.
pub fn eta_from_density(density: f64, omega: f64, separation_ratio: f64) -> f64 {
    8.0 * PI * CODATA.g * density / (3.0 * separation_ratio.powi(3) * omega * omega)
}

/// Constant drive frequency `ν = Gm² / √(ħ m ω L⁴)` of the Langevin equations.
pub fn nu_constant(mass: f64, omega: f64, separation: f64) -> f64 {
    nu_constant_with(&CODATA, mass, omega, separation)
}

pub fn nu_constant_with(c: &Constants, mass: f64, omega: f64, separation: f64) -> f64 {
    c.g * mass * mass / (c.hbar * mass * omega * separation.powi(4)).sqrt()
}

/// Undamped oscillators from a thermal state: amplitude
/// `max{0, η/ln2 − log₂(2n̄+1)}` reached at `t = π / (2(1−η)ω)`.
pub fn oscillator_peak_thermal(eta: f64, omega: f64, nbar: f64) -> PeakPrediction {
    PeakPrediction {
        e_max: (eta / LN_2 - thermal_penalty(nbar)).max(0.0),
        t_max: PI / (2.0 * (1.0 - eta) * omega),
    }
}

/// Undamped oscillators from squeezed thermal states: amplitude
/// `max{0, |s_A+s_B|/ln2 − log₂(2n̄+1)}` reached at `t = π/(2ηω)`.
///
/// Flagged out of regime unless `η ≪ |s_A|, |s_B|` (factor 100 here).
pub fn oscillator_peak_squeezed(s_a: f64, s_b: f64, eta: f64, omega: f64, nbar: f64) -> Flagged<PeakPrediction> {
    let in_regime = s_a.abs() >= 100.0 * eta && s_b.abs() >= 100.0 * eta;
    Flagged {
        value: PeakPrediction {
            e_max: ((s_a + s_b).abs() / LN_2 - thermal_penalty(nbar)).max(0.0),
            t_max: PI / (2.0 * eta * omega),
        },
        in_regime,
    }
}

/// `log₂(2n̄+1)`.
pub fn thermal_penalty(nbar: f64) -> f64 {
    (2.0 * nbar + 1.0).log2()
}

/// `σ(t) = 4G²m²ω²t⁶ / (9L⁶)`.
pub fn sigma(t: f64, mass: f64, omega: f64, separation: f64) -> SigmaMerit {
    sigma_with(&CODATA, t, mass, omega, separation)
}

pub fn sigma_with(c: &Constants, t: f64, mass: f64, omega: f64, separation: f64) -> SigmaMerit {
    let gm = c.g * mass;
    SigmaMerit {
        sigma: 4.0 * gm * gm * omega * omega * t.powi(6) / (9.0 * separation.powi(6)),
    }
}

/// Ground-state entanglement of released masses,
/// `E_gnd = −log₂ √(1 + 2σ − 2√(σ² + σ))`.
///
/// The radicand equals `(√(σ+1) − √σ)²`, so this is `asinh(√σ)/ln 2`, which
/// is what gets evaluated.
pub fn released_ground_entanglement(sigma: SigmaMerit) -> f64 {
    sigma.sigma.max(0.0).sqrt().asinh() / LN_2
}

/// Released-mass entanglement `max{0, E_gnd(t) − log₂(2n̄+1)}`, flagged out of
/// regime unless `η < 10⁻²` and `√η·ωt < 10⁻¹`.
pub fn released_entanglement(t: f64, mass: f64, omega: f64, separation: f64, nbar: f64) -> Flagged<f64> {
    released_entanglement_with(&CODATA, t, mass, omega, separation, nbar)
}

pub fn released_entanglement_with(
    c: &Constants,
    t: f64,
    mass: f64,
    omega: f64,
    separation: f64,
    nbar: f64,
) -> Flagged<f64> {
    let eta = eta_with(c, mass, omega, separation);
    let s = sigma_with(c, t, mass, omega, separation);
    Flagged {
        value: (released_ground_entanglement(s) - thermal_penalty(nbar)).max(0.0),
        in_regime: eta < RELEASED_ETA_LIMIT && eta.sqrt() * omega * t < RELEASED_TIME_LIMIT,
    }
}

/// Free-particle ground-state width `√(ħ/2mω)·√(1 + ω²t²)` in metres.
pub fn released_width(t: f64, mass: f64, omega: f64) -> f64 {
    released_width_with(&CODATA, t, mass, omega)
}

pub fn released_width_with(c: &Constants, t: f64, mass: f64, omega: f64) -> f64 {
    (c.hbar / (2.0 * mass * omega)).sqrt() * (omega * t).hypot(1.0)
}

/// Equal squeezing `s` on both released masses acts like a new trap frequency
/// `ω′ = ω e^{−2s}`.
pub fn squeezed_release_remap(omega: f64, s: f64) -> f64 {
    omega * (-2.0 * s).exp()
}

/// First time at which the released-mass law reaches `target`, by bisection
/// on the monotone `σ(t)`. `None` when `target` is unreachable below `t_max`.
pub fn released_crossing_time(target: f64, mass: f64, omega: f64, separation: f64, nbar: f64, t_max: f64) -> Option<f64> {
    released_crossing_time_with(&CODATA, target, mass, omega, separation, nbar, t_max)
}

pub fn released_crossing_time_with(
    c: &Constants,
    target: f64,
    mass: f64,
    omega: f64,
    separation: f64,
    nbar: f64,
    t_max: f64,
) -> Option<f64> {
    let e = |t: f64| released_entanglement_with(c, t, mass, omega, separation, nbar).value;
    if target <= 0.0 {
        return Some(0.0);
    }
    if e(t_max) < target {
        return None;
    }
    let (mut lo, mut hi) = (0.0, t_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if e(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{sphere_radius, OSMIUM_DENSITY};
    use approx::assert_relative_eq;

    fn released_osmium() -> (f64, f64, f64) {
        let m = 1e-7;
        (m, 1e5, 3.0 * sphere_radius(m, OSMIUM_DENSITY))
    }

    #[test]
    fn eta_osmium_reference() {
        let l = 2.1 * sphere_radius(1.0, OSMIUM_DENSITY);
        let e = eta(1.0, 0.1, l);
        assert!((e - 1.36e-4).abs() < 0.005e-4, "{e}");
        assert_relative_eq!(eta(1.0, 0.2, l), e / 4.0, max_relative = 1e-14);
        for &m in &[1e-9, 1e-3, 10.0] {
            let l = 2.1 * sphere_radius(m, OSMIUM_DENSITY);
            assert_relative_eq!(
                eta(m, 0.3, l),
                eta_from_density(OSMIUM_DENSITY, 0.3, 2.1),
                max_relative = 1e-12
            );
        }
        assert!((eta_from_density(OSMIUM_DENSITY, 1.0, 2.1) - 1.36e-6).abs() < 0.005e-6);
    }

    #[test]
    fn nu_scalings() {
        let (m, w, l) = (1e-3, 10.0, 1e-2);
        let base = nu_constant(m, w, l);
        assert!(base > 0.0 && base.is_finite());
        assert_relative_eq!(nu_constant(4.0 * m, w, l), 8.0 * base, max_relative = 1e-13);
        assert_relative_eq!(nu_constant(m, w, 2.0 * l), base / 4.0, max_relative = 1e-13);
        let (m, w, l) = released_osmium();
        let v = nu_constant(m, w, l);
        assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn thermal_peak() {
        let p = oscillator_peak_thermal(1.36e-4, 0.1, 0.0);
        assert!((p.e_max - 1.962e-4).abs() < 1e-6);
        assert!((p.t_max - 15.71).abs() < 0.01);
        assert_eq!(oscillator_peak_thermal(1.36e-4, 0.1, 10.0).e_max, 0.0);
        assert_eq!(oscillator_peak_thermal(0.0, 0.1, 0.0).e_max, 0.0);
    }

    #[test]
    fn squeezed_peak() {
        let p = oscillator_peak_squeezed(1.73, 1.73, 1.36e-4, 0.1, 0.0);
        assert!(p.in_regime);
        assert!((p.value.e_max - 4.99).abs() < 0.005);
        let flipped = oscillator_peak_squeezed(-1.73, -1.73, 1.36e-4, 0.1, 0.0);
        assert_eq!(flipped.value.e_max, p.value.e_max);
        assert!((p.value.t_max - 1.155e5).abs() < 0.001e5);
        assert!(!oscillator_peak_squeezed(1e-5, 1e-5, 1e-4, 0.1, 0.0).in_regime);
    }

    #[test]
    fn released_law_matches_literal_formula() {
        for &s in &[1e-8_f64, 6.5e-5, 0.3, 2.0, 40.0] {
            let literal = -(1.0 + 2.0 * s - 2.0 * (s * s + s).sqrt()).sqrt().log2();
            let got = released_ground_entanglement(SigmaMerit { sigma: s });
            assert_relative_eq!(got, literal, max_relative = 1e-6);
        }
    }

    #[test]
    fn released_reference_values() {
        let (m, w, l) = released_osmium();
        assert_eq!(released_entanglement(0.0, m, w, l, 0.0).value, 0.0);
        let s = sigma(0.8, m, w, l).sigma;
        assert!((s - 6.5e-5).abs() < 0.2e-5, "sigma = {s}");
        let e = released_entanglement(0.8, m, w, l, 0.0);
        assert!(e.in_regime);
        assert!((e.value - 0.0115).abs() < 0.001, "{}", e.value);
        let t1 = released_crossing_time(0.01, m, w, l, 1.0, 100.0).unwrap();
        assert!((t1 - 4.5).abs() < 0.45, "{t1}");
    }

    #[test]
    fn sigma_sixth_power_and_monotone() {
        let (m, w, l) = released_osmium();
        assert_relative_eq!(sigma(2.0, m, w, l).sigma, 64.0 * sigma(1.0, m, w, l).sigma, max_relative = 1e-14);
        let mut prev = -1.0;
        for i in 0..100 {
            let e = released_ground_entanglement(sigma(0.1 * i as f64, m, w, l));
            assert!(e >= prev);
            prev = e;
        }
    }

    #[test]
    fn widths_and_remap() {
        let (m, w) = (1e-7, 1e5);
        assert_relative_eq!(released_width(0.0, m, w), (CODATA.hbar / (2.0 * m * w)).sqrt(), max_relative = 1e-15);
        let slope = (CODATA.hbar * w / (2.0 * m)).sqrt();
        assert_relative_eq!(released_width(1e3, m, w) / 1e3, slope, max_relative = 1e-9);
        assert_eq!(squeezed_release_remap(w, 0.0), w);
        assert!(squeezed_release_remap(w, 0.5) < w);
        assert_relative_eq!(squeezed_release_remap(w, -1.0), w * 1f64.exp().powi(2), max_relative = 1e-15);
        // Smaller ω′ means a slower gain.
        let l = 3e-4;
        assert!(
            released_entanglement(1.0, m, squeezed_release_remap(w, 0.5), l, 0.0).value
                < released_entanglement(1.0, m, w, l, 0.0).value
        );
    }
}

//! Decoherence time estimates and the Casimir/gravity comparison.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{sphere_radius, Constants, AIR_MOLECULE_MASS, CODATA};
use crate::dynamics::{linspace, Scenario, Setup, Simulator};
use crate::error::{invalid, require_non_negative, require_positive, Error, Result};
use crate::quadrature;

/// Empirical prefactor of the thermal-photon localization rate, SI units.
pub const PHOTON_RATE_PREFACTOR: f64 = 1e36;
/// Default superposition size for trapped oscillators, metres.
pub const OSCILLATOR_DEFAULT_DX: f64 = 8e-17;
/// Casimir/gravity ratios below this count as gravity-dominated.
pub const CASIMIR_DOMINANCE_LIMIT: f64 = 0.1;
/// `Δx/λ` below this counts as the long-wavelength regime.
pub const LONG_WAVELENGTH_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    /// K
    pub temperature: f64,
    /// Gas particles per m³.
    pub gas_density: f64,
    /// kg
    pub m_air: f64,
    /// Casimir proximity factor in `[0, 1]`.
    pub f0: f64,
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        Self::earth_uhv()
    }
}

impl EnvironmentSpec {
    pub fn new(temperature: f64, gas_density: f64) -> Self {
        Self {
            temperature,
            gas_density,
            m_air: AIR_MOLECULE_MASS,
            f0: 1.0,
        }
    }

    /// Liquid-helium cryostat at ultrahigh vacuum.
    pub fn earth_uhv() -> Self {
        Self::new(4.0, 1e12)
    }

    /// Cosmic background temperature and interplanetary gas density.
    pub fn space() -> Self {
        Self::new(2.7, 1e7)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("temperature", self.temperature)?;
        require_non_negative("gas_density", self.gas_density)?;
        require_positive("m_air", self.m_air)?;
        if !(0.0..=1.0).contains(&self.f0) {
            return Err(invalid("f0", format!("must lie in [0, 1], got {}", self.f0)));
        }
        Ok(())
    }
}

/// Thermal-photon localization rate `10³⁶ R⁶ T⁹` in 1/(m² s).
pub fn photon_rate(radius: f64, temperature: f64) -> f64 {
    PHOTON_RATE_PREFACTOR * radius.powi(6) * temperature.powi(9)
}

/// Gas-collision localization rate `(8/3ħ²) n √(2π m_air) R² (k_B T)^{3/2}`.
pub fn gas_rate(radius: f64, temperature: f64, density: f64, m_air: f64) -> f64 {
    gas_rate_with(&CODATA, radius, temperature, density, m_air)
}

pub fn gas_rate_with(c: &Constants, radius: f64, temperature: f64, density: f64, m_air: f64) -> f64 {
    8.0 / (3.0 * c.hbar * c.hbar)
        * density
        * (2.0 * PI * m_air).sqrt()
        * radius
        * radius
        * (c.k_b * temperature).powf(1.5)
}

/// `1/(Λ Δx²)`; infinite when either factor vanishes.
pub fn coherence_time(rate: f64, dx: f64) -> f64 {
    let denom = rate * dx * dx;
    if denom == 0.0 {
        f64::INFINITY
    } else {
        1.0 / denom
    }
}

/// Ratio of the entangling (quadratic in `x_A − x_B`) coefficients of the
/// proximity-force Casimir energy and of the Newtonian energy between two
/// spheres of mass `m` and density `ρ` at centre distance `L`.
pub fn casimir_gravity_ratio(mass: f64, density: f64, separation: f64, f0: f64) -> Result<f64> {
    casimir_gravity_ratio_with(&CODATA, mass, density, separation, f0)
}

pub fn casimir_gravity_ratio_with(c: &Constants, mass: f64, density: f64, separation: f64, f0: f64) -> Result<f64> {
    require_positive("mass", mass)?;
    require_positive("density", density)?;
    require_positive("separation", separation)?;
    let r = sphere_radius(mass, density);
    let gap = separation - 2.0 * r;
    if gap <= 0.0 {
        return Err(Error::Contact {
            separation,
            diameter: 2.0 * r,
        });
    }
    let casimir = 3.0 * f0 * PI.powi(3) * c.hbar * c.c * r / (1440.0 * gap.powi(4));
    let gravity = c.g * mass * mass / separation.powi(3);
    Ok(casimir / gravity)
}

/// Dominant thermal photon wavelength `2πħc/(k_B T)`.
pub fn photon_wavelength(c: &Constants, temperature: f64) -> f64 {
    2.0 * PI * c.hbar * c.c / (c.k_b * temperature)
}

/// Thermal de Broglie wavelength `2πħ/√(2π m k_B T)` of the gas.
pub fn gas_wavelength(c: &Constants, temperature: f64, m_air: f64) -> f64 {
    2.0 * PI * c.hbar / (2.0 * PI * m_air * c.k_b * temperature).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeasibilityOptions {
    /// Latest time searched for the entanglement target, s.
    pub horizon: Option<f64>,
    /// Superposition size; overrides the default estimate.
    pub dx: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    PhotonDecoherence,
    GasDecoherence,
    CasimirDominates,
    TargetUnreachable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub tau_photon: f64,
    pub tau_gas: f64,
    pub r_cg: f64,
    /// First time the target entanglement is reached, if within the horizon.
    pub t_target: Option<f64>,
    pub horizon: f64,
    /// Superposition size used for the coherence times, m.
    pub dx: f64,
    pub photon_wavelength: f64,
    pub gas_wavelength: f64,
    /// `Δx ≪ λ` holds for photons and gas respectively.
    pub photon_regime_ok: bool,
    pub gas_regime_ok: bool,
    pub verdict: Verdict,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.verdict == Verdict::Feasible
    }

    pub fn min_coherence_time(&self) -> f64 {
        self.tau_photon.min(self.tau_gas)
    }
}

/// Default search window: the squeezed-amplitude envelope time for trapped
/// masses, 100 s for released ones.
pub fn default_horizon(sc: &Scenario) -> f64 {
    match sc.setup {
        Setup::Oscillators => {
            let eta = sc.rates().eta;
            let envelope = PI / (2.0 * eta * sc.omega);
            envelope.min(1e4 * 2.0 * PI / sc.omega)
        }
        Setup::Released => 100.0,
    }
}

fn search_grid(sc: &Scenario, horizon: f64) -> Vec<f64> {
    let n = match sc.setup {
        // 16 samples per trap period.
        Setup::Oscillators => ((horizon * sc.omega * 16.0 / (2.0 * PI)).ceil() as usize).clamp(64, 2_000_000),
        Setup::Released => ((horizon / 0.05).ceil() as usize).clamp(64, 200_000),
    };
    linspace(0.0, horizon, n + 1)
}

/// Compares the time needed to reach `target_e` with the coherence times and
/// checks that gravity dominates the Casimir coupling.
///
/// For released masses `Δx` is the mean position width over `[0, t_target]`
/// (or over the horizon when the target is missed); for trapped masses it is
/// [`OSCILLATOR_DEFAULT_DX`] unless given.
pub fn feasibility(
    sc: &Scenario,
    env: &EnvironmentSpec,
    target_e: f64,
    options: &FeasibilityOptions,
) -> Result<FeasibilityReport> {
    sc.validate()?;
    env.validate()?;
    require_non_negative("target_e", target_e)?;
    let density = sc
        .density
        .ok_or_else(|| invalid("density", "required for decoherence and Casimir estimates"))?;
    let c = &sc.constants;
    let radius = sphere_radius(sc.mass, density);
    let horizon = match options.horizon {
        Some(h) => {
            require_positive("horizon", h)?;
            h
        }
        None => default_horizon(sc),
    };

    let sim = Simulator::new(sc)?;
    let t_target = sim.crossing_time(target_e, &search_grid(sc, horizon))?;

    let dx = match (options.dx, sc.setup) {
        (Some(dx), _) => {
            require_non_negative("dx", dx)?;
            dx
        }
        (None, Setup::Oscillators) => OSCILLATOR_DEFAULT_DX,
        (None, Setup::Released) => mean_width(&sim, t_target.unwrap_or(horizon))?,
    };

    let tau_photon = coherence_time(photon_rate(radius, env.temperature), dx);
    let tau_gas = coherence_time(
        gas_rate_with(c, radius, env.temperature, env.gas_density, env.m_air),
        dx,
    );
    let r_cg = casimir_gravity_ratio_with(c, sc.mass, density, sc.separation, env.f0)?;
    let lambda_ph = photon_wavelength(c, env.temperature);
    let lambda_gas = gas_wavelength(c, env.temperature, env.m_air);

    let verdict = match t_target {
        None => Verdict::TargetUnreachable,
        Some(t) if t >= tau_photon && tau_photon <= tau_gas => Verdict::PhotonDecoherence,
        Some(t) if t >= tau_gas => Verdict::GasDecoherence,
        Some(t) if t >= tau_photon => Verdict::PhotonDecoherence,
        Some(_) if r_cg >= CASIMIR_DOMINANCE_LIMIT => Verdict::CasimirDominates,
        Some(_) => Verdict::Feasible,
    };

    Ok(FeasibilityReport {
        tau_photon,
        tau_gas,
        r_cg,
        t_target,
        horizon,
        dx,
        photon_wavelength: lambda_ph,
        gas_wavelength: lambda_gas,
        photon_regime_ok: dx < LONG_WAVELENGTH_LIMIT * lambda_ph,
        gas_regime_ok: dx < LONG_WAVELENGTH_LIMIT * lambda_gas,
        verdict,
    })
}

/// Mean of the position width of mass A over `[0, t]`.
fn mean_width(sim: &Simulator, t: f64) -> Result<f64> {
    let sc = sim.scenario();
    let width = |s: f64| -> Result<f64> {
        let state = sim.state_at(s)?;
        state
            .cov
            .width_meters_with(crate::cvcore::Mode::A, sc.mass, sc.omega, sc.constants.hbar)
    };
    if t == 0.0 {
        return width(0.0);
    }
    let total = quadrature::integrate_scalar(width, 0.0, t, 0.0, 1e-10)?;
    Ok(total / t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::OSMIUM_DENSITY;
    use crate::cvcore::InitialStateSpec;
    use approx::assert_relative_eq;

    fn osc() -> Scenario {
        Scenario::spheres(Setup::Oscillators, 1.0, 0.1, OSMIUM_DENSITY, 2.1)
    }

    fn released_osmium() -> Scenario {
        Scenario::spheres(Setup::Released, 1e-7, 1e5, OSMIUM_DENSITY, 3.0)
    }

    #[test]
    fn photon_rate_values() {
        let r = sphere_radius(1.0, OSMIUM_DENSITY);
        let rate = photon_rate(r, 4.0);
        assert!((rate / 2.9e31 - 1.0).abs() < 0.05, "{rate:e}");
        assert_relative_eq!(photon_rate(r, 8.0) / rate, 512.0, max_relative = 1e-12);
        let tau = coherence_time(rate, 8e-17);
        assert!((4.0..7.0).contains(&tau), "{tau}");
    }

    #[test]
    fn gas_rate_values() {
        let r = sphere_radius(1.0, OSMIUM_DENSITY);
        let uhv = coherence_time(gas_rate(r, 4.0, 1e12, AIR_MOLECULE_MASS), 8e-17);
        assert!((2.5..10.0).contains(&uhv), "{uhv}");
        let space = coherence_time(gas_rate(r, 2.7, 1e7, AIR_MOLECULE_MASS), 8e-17);
        assert!((5e5..2e6).contains(&space), "{space:e}");
        assert_eq!(gas_rate(r, 4.0, 0.0, AIR_MOLECULE_MASS), 0.0);
        assert_eq!(coherence_time(0.0, 1e-9), f64::INFINITY);
        assert_eq!(coherence_time(1e10, 0.0), f64::INFINITY);
    }

    #[test]
    fn coherence_time_scaling() {
        assert_relative_eq!(coherence_time(3.0, 0.5e-9) / coherence_time(3.0, 1e-9), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn rates_increase_with_inputs() {
        let base = (1e-3, 3.0, 1e10);
        let g = |r: f64, t: f64, n: f64| gas_rate(r, t, n, AIR_MOLECULE_MASS);
        for k in 1..20 {
            let f = 1.0 + 0.1 * k as f64;
            assert!(photon_rate(base.0 * f, base.1) > photon_rate(base.0, base.1));
            assert!(photon_rate(base.0, base.1 * f) > photon_rate(base.0, base.1));
            assert!(g(base.0 * f, base.1, base.2) > g(base.0, base.1, base.2));
            assert!(g(base.0, base.1 * f, base.2) > g(base.0, base.1, base.2));
            assert!(g(base.0, base.1, base.2 * f) > g(base.0, base.1, base.2));
        }
    }

    #[test]
    fn casimir_ratios() {
        let r = sphere_radius(1.0, OSMIUM_DENSITY);
        let osc = casimir_gravity_ratio(1.0, OSMIUM_DENSITY, 2.1 * r, 1.0).unwrap();
        assert!((1e-13..1e-11).contains(&osc), "{osc:e}");
        let r = sphere_radius(1e-7, OSMIUM_DENSITY);
        let rel = casimir_gravity_ratio(1e-7, OSMIUM_DENSITY, 3.0 * r, 1.0).unwrap();
        assert!((1e-3..1e-1).contains(&rel), "{rel:e}");
        assert_eq!(casimir_gravity_ratio(1e-7, OSMIUM_DENSITY, 3.0 * r, 0.0).unwrap(), 0.0);
        let half = casimir_gravity_ratio(1e-7, OSMIUM_DENSITY, 3.0 * r, 0.5).unwrap();
        assert_relative_eq!(half, 0.5 * rel, max_relative = 1e-15);
        assert!(matches!(
            casimir_gravity_ratio(1e-7, OSMIUM_DENSITY, 2.0 * r, 1.0),
            Err(Error::Contact { .. })
        ));
    }

    #[test]
    fn casimir_ratio_matches_finite_difference_expansion() {
        // Second derivatives in the relative coordinate of the two energies.
        let c = CODATA;
        let (m, rho) = (1e-7, OSMIUM_DENSITY);
        let r = sphere_radius(m, rho);
        let l = 3.0 * r;
        let casimir = |x: f64| -PI.powi(3) / 1440.0 * c.hbar * c.c * r / (l - 2.0 * r - x).powi(2);
        let gravity = |x: f64| -c.g * m * m / (l - x);
        let h = 1e-3 * (l - 2.0 * r);
        let d2 = |f: &dyn Fn(f64) -> f64| (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        let expected = d2(&casimir) / d2(&gravity);
        let got = casimir_gravity_ratio(m, rho, l, 1.0).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-5);
    }

    #[test]
    fn regime_wavelengths() {
        let c = CODATA;
        assert!(photon_wavelength(&c, 4.0) > 1e-3);
        assert!(gas_wavelength(&c, 4.0, AIR_MOLECULE_MASS) > 1e-10);
    }

    #[test]
    fn environment_validation() {
        assert!(EnvironmentSpec::space().validate().is_ok());
        let mut e = EnvironmentSpec::earth_uhv();
        e.f0 = 1.5;
        assert!(e.validate().is_err());
        e.f0 = 1.0;
        e.temperature = 0.0;
        assert!(e.validate().is_err());
    }

    #[test]
    fn released_feasibility() {
        let space = feasibility(&released_osmium(), &EnvironmentSpec::space(), 0.01, &Default::default()).unwrap();
        assert!(space.feasible(), "{space:?}");
        let t = space.t_target.unwrap();
        assert!((0.72..0.88).contains(&t), "{t}");
        assert!((20.0..82.0).contains(&space.tau_gas), "{}", space.tau_gas);
        assert!(space.photon_regime_ok && space.gas_regime_ok);

        let earth = feasibility(&released_osmium(), &EnvironmentSpec::earth_uhv(), 0.01, &Default::default()).unwrap();
        assert_eq!(earth.verdict, Verdict::GasDecoherence);
        assert!(earth.tau_gas < 1e-2);
    }

    #[test]
    fn zero_target_is_immediate() {
        let rep = feasibility(&released_osmium(), &EnvironmentSpec::space(), 0.0, &Default::default()).unwrap();
        assert_eq!(rep.t_target, Some(0.0));
        assert!(rep.feasible());
        let free = crate::analytics::released_width(0.0, 1e-7, 1e5);
        assert_relative_eq!(rep.dx, free, max_relative = 1e-12);
    }

    #[test]
    fn oscillator_feasibility_uses_default_width() {
        let sc = osc().with_initial(InitialStateSpec::squeezed(0.0, 1.73));
        let rep = feasibility(&sc, &EnvironmentSpec::earth_uhv(), 0.01, &Default::default()).unwrap();
        assert_eq!(rep.dx, OSCILLATOR_DEFAULT_DX);
        // Squeezed start: 0.01 is reached within the first trap period.
        assert!(rep.t_target.unwrap() < 2.0 * PI / 0.1);
        assert_eq!(rep.verdict, Verdict::PhotonDecoherence);
        assert!(rep.r_cg < 1e-10);
    }

    #[test]
    fn unreachable_target_reported() {
        let opts = FeasibilityOptions {
            horizon: Some(0.1),
            dx: None,
        };
        let rep = feasibility(&released_osmium(), &EnvironmentSpec::space(), 0.01, &opts).unwrap();
        assert_eq!(rep.t_target, None);
        assert_eq!(rep.verdict, Verdict::TargetUnreachable);
    }

    #[test]
    fn density_required() {
        let sc = Scenario::new(Setup::Released, 1e-7, 1e5, 3e-4);
        assert!(feasibility(&sc, &EnvironmentSpec::space(), 0.01, &Default::default()).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::analytics::{eta_with, nu_constant_with};
use crate::constants::{sphere_radius, Constants, CODATA};
use crate::cvcore::{position_scale, InitialStateSpec};
use crate::error::{invalid, require_non_negative, require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setup {
    /// Masses held in harmonic traps for the whole evolution.
    Oscillators,
    /// Masses released from their traps at `t = 0`.
    Released,
}

/// One experiment: two identical masses a distance `separation` apart.
///
/// For [`Setup::Released`] `omega` is the frequency of the trap the masses
/// were cooled in; it fixes the initial spread `√(ħ/2mω)` and the quadrature
/// units, but no trap force acts after release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub setup: Setup,
    /// kg
    pub mass: f64,
    /// 1/s (no factor 2π: "0.1 Hz" means ω = 0.1 s⁻¹)
    pub omega: f64,
    /// Centre-to-centre distance in metres.
    pub separation: f64,
    /// Mechanical damping rate in 1/s; zero for released masses.
    pub gamma: f64,
    pub initial: InitialStateSpec,
    /// Material density in kg/m³, when the masses are homogeneous spheres.
    pub density: Option<f64>,
    pub constants: Constants,
}

/// Couplings derived from a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    pub eta: f64,
    /// Drive frequency of the linear gravitational pull, 1/s.
    pub nu: f64,
}

impl Scenario {
    pub fn new(setup: Setup, mass: f64, omega: f64, separation: f64) -> Self {
        Self {
            setup,
            mass,
            omega,
            separation,
            gamma: 0.0,
            initial: InitialStateSpec::ground(),
            density: None,
            constants: CODATA,
        }
    }

    /// Homogeneous spheres of `density` at a separation of `ratio` radii.
    pub fn spheres(setup: Setup, mass: f64, omega: f64, density: f64, ratio: f64) -> Self {
        let mut sc = Self::new(setup, mass, omega, ratio * sphere_radius(mass, density));
        sc.density = Some(density);
        sc
    }

    pub fn with_initial(mut self, initial: InitialStateSpec) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Sets `γ = ω/Q`.
    pub fn with_quality_factor(mut self, q: f64) -> Self {
        self.gamma = self.omega / q;
        self
    }

    pub fn with_constants(mut self, constants: Constants) -> Self {
        self.constants = constants;
        self
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("mass", self.mass)?;
        require_positive("omega", self.omega)?;
        require_positive("separation", self.separation)?;
        require_non_negative("gamma", self.gamma)?;
        self.initial.validate()?;
        if self.setup == Setup::Released && self.gamma != 0.0 {
            return Err(invalid("gamma", "released masses are undamped; gamma must be 0"));
        }
        if let Some(rho) = self.density {
            require_positive("density", rho)?;
            let r = sphere_radius(self.mass, rho);
            if self.separation <= 2.0 * r {
                return Err(Error::Contact {
                    separation: self.separation,
                    diameter: 2.0 * r,
                });
            }
        }
        Ok(())
    }

    /// Sphere radius, when a density is known.
    pub fn radius(&self) -> Option<f64> {
        self.density.map(|rho| sphere_radius(self.mass, rho))
    }

    /// `Q = ω/γ`; `None` when undamped.
    pub fn quality_factor(&self) -> Option<f64> {
        (self.gamma > 0.0).then(|| self.omega / self.gamma)
    }

    pub fn rates(&self) -> DerivedRates {
        DerivedRates {
            eta: eta_with(&self.constants, self.mass, self.omega, self.separation),
            nu: nu_constant_with(&self.constants, self.mass, self.omega, self.separation),
        }
    }

    /// Metres per unit of the position quadrature.
    pub fn position_scale(&self) -> f64 {
        position_scale(self.constants.hbar, self.mass, self.omega)
    }
}

//! Physical constants (SI, CODATA 2018) and material data.
//!
//! Every routine that needs a constant takes it from a [`Constants`] table so
//! that tests can switch gravity off (`G = 0`) or perturb a value without
//! touching the numerics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Density of Osmium in kg/m³ (22.59 g/cm³).
pub const OSMIUM_DENSITY: f64 = 22_590.0;

/// Default mass of an air molecule in kg.
pub const AIR_MOLECULE_MASS: f64 = 0.5e-25;

/// Name of the environment variable read by [`Constants::from_env`].
pub const CONSTANTS_ENV_VAR: &str = "GRAVENT_CONSTANTS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Newton's constant, m³ kg⁻¹ s⁻².
    pub g: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
    /// Speed of light, m/s.
    pub c: f64,
}

pub const CODATA: Constants = Constants {
    g: 6.674_30e-11,
    hbar: 1.054_571_817e-34,
    k_b: 1.380_649e-23,
    c: 2.997_924_58e8,
};

impl Default for Constants {
    fn default() -> Self {
        CODATA
    }
}

impl Constants {
    /// Applies overrides of the form `G=0,hbar=1e-34`. Keys are
    /// case-insensitive; unknown keys are rejected.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| invalid("constants", format!("expected key=value, got `{item}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| invalid("constants", format!("bad number in `{item}`")))?;
            if !value.is_finite() || value < 0.0 {
                return Err(invalid("constants", format!("`{item}` must be finite and >= 0")));
            }
            match key.trim().to_ascii_lowercase().as_str() {
                "g" => self.g = value,
                "hbar" => self.hbar = value,
                "k_b" | "kb" => self.k_b = value,
                "c" => self.c = value,
                other => {
                    return Err(invalid("constants", format!("unknown constant `{other}`")))
                }
            }
        }
        Ok(self)
    }

    /// CODATA values, overridden by `GRAVENT_CONSTANTS` when set. Testing only.
    pub fn from_env() -> Result<Self> {
        match std::env::var(CONSTANTS_ENV_VAR) {
            Ok(spec) => CODATA.with_overrides(&spec),
            Err(_) => Ok(CODATA),
        }
    }
}

/// Radius of a homogeneous sphere of mass `mass` and density `density`.
pub fn sphere_radius(mass: f64, density: f64) -> f64 {
    (3.0 * mass / (4.0 * std::f64::consts::PI * density)).cbrt()
}

/// Mass of a homogeneous sphere.
pub fn sphere_mass(radius: f64, density: f64) -> f64 {
    4.0 / 3.0 * std::f64::consts::PI * density * radius.powi(3)
}

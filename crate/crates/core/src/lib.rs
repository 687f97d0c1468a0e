//! Gravitationally induced entanglement between two masses: Gaussian-state
//! algebra, trapped and released dynamics, closed-form laws, decoherence
//! estimates and alternative geometries.

pub mod analytics;
pub mod constants;
pub mod cvcore;
pub mod dynamics;
pub mod environment;
mod error;
pub mod expm;
pub mod geometry;
pub mod quadrature;

pub use constants::{Constants, CODATA, OSMIUM_DENSITY};
pub use cvcore::{CovarianceMatrix, InitialStateSpec, Mat4, Mode, QuadratureState, Vec4};
pub use dynamics::{EntanglementSeries, Propagator, Scenario, Setup, Simulator, TraceSample};
pub use environment::{EnvironmentSpec, FeasibilityOptions, FeasibilityReport, Verdict};
pub use error::{Error, Result};
pub use geometry::{ShapeKind, ShapePair};

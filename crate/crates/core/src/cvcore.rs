//! Two-mode Gaussian state algebra.
//!
//! Quadratures are ordered `(X_A, P_A, X_B, P_B)` and normalised so that the
//! vacuum has variance **1/2** in every quadrature (`[X, P] = i`). With this
//! convention a state is physical iff both symplectic eigenvalues are at least
//! 1/2, and the two modes are entangled iff the partially transposed
//! covariance has a symplectic eigenvalue below 1/2.

use nalgebra::{Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::constants::CODATA;
use crate::error::{invalid, require_positive, Error, Result};

pub type Mat4 = Matrix4<f64>;
pub type Vec4 = Vector4<f64>;

/// Quadrature variance of the vacuum.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Relative asymmetry above which a matrix is rejected instead of symmetrised.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Slack allowed below 1/2 before a symplectic eigenvalue counts as unphysical.
pub const PHYSICALITY_TOL: f64 = 1e-8;

/// Relative slack on a negative discriminant in the closed-form ν̃_min.
const DISCRIMINANT_TOL: f64 = 1e-9;

/// Two-mode symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_form() -> Mat4 {
    #[rustfmt::skip]
    let omega = Mat4::new(
        0.0, 1.0, 0.0, 0.0,
        -1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, -1.0, 0.0,
    );
    omega
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

impl Mode {
    fn offset(self) -> usize {
        match self {
            Mode::A => 0,
            Mode::B => 2,
        }
    }
}

/// Second moments of `(X_A, P_A, X_B, P_B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(Mat4);

impl CovarianceMatrix {
    /// Validates symmetry and returns the symmetrised matrix `(V + Vᵀ)/2`.
    pub fn new(matrix: Mat4) -> Result<Self> {
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(invalid("covariance", "entries must be finite"));
        }
        let scale = matrix.amax();
        let asymmetry = if scale > 0.0 {
            (matrix - matrix.transpose()).amax() / scale
        } else {
            0.0
        };
        if asymmetry > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry });
        }
        Ok(Self::symmetrized(matrix))
    }

    pub fn from_row_slice(entries: &[f64; 16]) -> Result<Self> {
        Self::new(Mat4::from_row_slice(entries))
    }

    pub(crate) fn symmetrized(matrix: Mat4) -> Self {
        Self((matrix + matrix.transpose()) * 0.5)
    }

    pub fn vacuum() -> Self {
        Self(Mat4::identity() * VACUUM_VARIANCE)
    }

    pub fn as_matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat4 {
        self.0
    }

    /// Local 2×2 block `I_A` or `I_B`.
    pub fn local_block(&self, mode: Mode) -> Matrix2<f64> {
        let k = mode.offset();
        self.0.fixed_view::<2, 2>(k, k).into_owned()
    }

    /// Intermodal 2×2 block `L` (rows from A, columns from B).
    pub fn correlation_block(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(0, 2).into_owned()
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    /// `Λ V Λ` with `Λ = diag(1, 1, 1, -1)`: flips the sign of `P_B`.
    pub fn partial_transpose_b(&self) -> Self {
        let mut m = self.0;
        for k in 0..4 {
            if k != 3 {
                m[(k, 3)] = -m[(k, 3)];
                m[(3, k)] = -m[(3, k)];
            }
        }
        Self(m)
    }

    /// Symplectic eigenvalues `(ν₁, ν₂)`, ascending, i.e. the moduli of the
    /// eigenvalues of `iΩV`.
    ///
    /// For positive-definite `V` these are the singular values of the
    /// antisymmetric `V^{1/2} Ω V^{1/2}`, each appearing twice. Indefinite
    /// input falls back to a Schur decomposition of `ΩV`.
    pub fn symplectic_eigenvalues(&self) -> Result<(f64, f64)> {
        let omega = symplectic_form();
        let eig = self.0.symmetric_eigen();
        if eig.eigenvalues.iter().all(|&l| l > 0.0) {
            let sqrt_v = eig.eigenvectors
                * Mat4::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
                * eig.eigenvectors.transpose();
            let a = sqrt_v * omega * sqrt_v;
            let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
            sv.sort_by(f64::total_cmp);
            return Ok((0.5 * (sv[0] + sv[1]), 0.5 * (sv[2] + sv[3])));
        }
        let ev = (omega * self.0).complex_eigenvalues();
        let mut moduli: Vec<f64> = ev.iter().map(|z| z.norm()).collect();
        if moduli.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalDomain {
                context: "symplectic_eigenvalues",
                detail: "eigen-solver did not converge".into(),
            });
        }
        moduli.sort_by(f64::total_cmp);
        Ok((0.5 * (moduli[0] + moduli[1]), 0.5 * (moduli[2] + moduli[3])))
    }

    /// Smallest symplectic eigenvalue of the partially transposed state,
    /// from the block invariants:
    /// `ν̃²_min = (Σ − √(Σ² − 4 det V)) / 2`, `Σ = det I_A + det I_B − 2 det L`.
    ///
    /// Evaluated as `2 det V / (Σ + √(Σ² − 4 det V))`, which is the same number
    /// without the cancellation when ν̃_min is small.
    pub fn min_ptranspose_symplectic_eigenvalue(&self) -> Result<f64> {
        let det_a = self.local_block(Mode::A).determinant();
        let det_b = self.local_block(Mode::B).determinant();
        let det_l = self.correlation_block().determinant();
        let det_v = self.det();
        let sigma = det_a + det_b - 2.0 * det_l;
        let disc = sigma * sigma - 4.0 * det_v;
        if disc < -DISCRIMINANT_TOL * sigma * sigma || sigma <= 0.0 || det_v < 0.0 {
            return Err(Error::NumericalDomain {
                context: "min_ptranspose_symplectic_eigenvalue",
                detail: format!("Σ = {sigma:.6e}, det V = {det_v:.6e}, Σ² − 4 det V = {disc:.6e}"),
            });
        }
        let root = disc.max(0.0).sqrt();
        Ok((2.0 * det_v / (sigma + root)).sqrt())
    }

    /// Eigen-solver route to ν̃_min, kept as an independent cross-check.
    pub fn min_ptranspose_symplectic_eigenvalue_eigen(&self) -> Result<f64> {
        Ok(self.partial_transpose_b().symplectic_eigenvalues()?.0)
    }

    /// Rejects states whose smallest symplectic eigenvalue is below 1/2 by
    /// more than [`PHYSICALITY_TOL`].
    pub fn check_physical(&self) -> Result<()> {
        let (nu_min, _) = self.symplectic_eigenvalues()?;
        if nu_min < VACUUM_VARIANCE - PHYSICALITY_TOL {
            return Err(Error::Unphysical { nu_min });
        }
        Ok(())
    }

    /// Logarithmic negativity `max{0, −log₂(2ν̃_min)}` of a physical state.
    pub fn log_negativity(&self) -> Result<f64> {
        self.check_physical()?;
        Ok(log_negativity_from_nu(self.min_ptranspose_symplectic_eigenvalue()?))
    }

    /// Position standard deviation of one mode in metres.
    pub fn width_meters(&self, mode: Mode, mass: f64, omega: f64) -> Result<f64> {
        self.width_meters_with(mode, mass, omega, CODATA.hbar)
    }

    pub fn width_meters_with(&self, mode: Mode, mass: f64, omega: f64, hbar: f64) -> Result<f64> {
        require_positive("mass", mass)?;
        require_positive("omega", omega)?;
        let k = mode.offset();
        Ok(position_scale(hbar, mass, omega) * self.0[(k, k)].max(0.0).sqrt())
    }
}

/// `max{0, −log₂(2ν̃)}`.
pub fn log_negativity_from_nu(nu_tilde_min: f64) -> f64 {
    (-(2.0 * nu_tilde_min).log2()).max(0.0)
}

/// Metres per unit of the dimensionless position quadrature, `√(ħ/mω)`.
pub fn position_scale(hbar: f64, mass: f64, omega: f64) -> f64 {
    (hbar / (mass * omega)).sqrt()
}

/// Initial single-mode preparation shared by both masses' thermal occupation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialStateSpec {
    /// Mean thermal phonon number.
    pub nbar: f64,
    /// Squeezing of mode A; `s > 0` anti-squeezes position.
    pub s_a: f64,
    pub s_b: f64,
}

impl InitialStateSpec {
    pub fn ground() -> Self {
        Self::default()
    }

    pub fn thermal(nbar: f64) -> Self {
        Self { nbar, ..Self::default() }
    }

    pub fn squeezed(nbar: f64, s: f64) -> Self {
        Self { nbar, s_a: s, s_b: s }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nbar.is_finite() && self.nbar >= 0.0) {
            return Err(invalid("nbar", format!("must be >= 0, got {}", self.nbar)));
        }
        if !self.s_a.is_finite() || !self.s_b.is_finite() {
            return Err(invalid("squeezing", "must be finite"));
        }
        Ok(())
    }
}

/// Covariance of `S ρ_th S†` on each mode:
/// `diag(v e^{2s_A}, v e^{−2s_A}, v e^{2s_B}, v e^{−2s_B})`, `v = (2n̄+1)/2`.
pub fn thermal_squeezed_covariance(spec: &InitialStateSpec) -> Result<CovarianceMatrix> {
    spec.validate()?;
    let v = (2.0 * spec.nbar + 1.0) * VACUUM_VARIANCE;
    let (ea, eb) = ((2.0 * spec.s_a).exp(), (2.0 * spec.s_b).exp());
    Ok(CovarianceMatrix(Mat4::from_diagonal(&Vec4::new(
        v * ea,
        v / ea,
        v * eb,
        v / eb,
    ))))
}

/// Mean quadratures together with their covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureState {
    pub mean: Vec4,
    pub cov: CovarianceMatrix,
}

impl QuadratureState {
    pub fn new(mean: Vec4, cov: CovarianceMatrix) -> Result<Self> {
        if mean.iter().any(|x| !x.is_finite()) {
            return Err(invalid("mean", "entries must be finite"));
        }
        Ok(Self { mean, cov })
    }
}

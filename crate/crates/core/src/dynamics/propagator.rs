use nalgebra::Vector2;

use super::lyapunov::{integrate_lyapunov, LyapunovOptions};
use super::modes::{self, from_mode_blocks, from_mode_vectors};
use super::scenario::{Scenario, Setup};
use crate::cvcore::{CovarianceMatrix, Mat4, Vec4};
use crate::error::{invalid, Error, Result};
use crate::expm::matrix_exponential;
use crate::quadrature;

/// Drift `K`, diffusion `D` and constant drive `κ` of `u̇ = Ku + υ + κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    drift: Mat4,
    diffusion: Mat4,
    drive: Vec4,
    setup: Setup,
    omega: f64,
    eta: f64,
    gamma: f64,
}

/// Trapped oscillators:
///
/// ```text
///     ⎡ 0        ω    0        0 ⎤
/// K = ⎢ −ω(1−η)  −γ   −ωη      0 ⎥ ,  D = diag(0, γ(2n̄+1), 0, γ(2n̄+1)),
///     ⎢ 0        0    0        ω ⎥    κ = ν (0, 1, 0, −1)ᵀ.
///     ⎣ −ωη      0    −ω(1−η)  −γ⎦
/// ```
pub fn build_oscillator_propagator(sc: &Scenario) -> Result<Propagator> {
    if sc.setup != Setup::Oscillators {
        return Err(Error::WrongSetup("expected an oscillator scenario"));
    }
    sc.validate()?;
    let rates = sc.rates();
    let (w, eta, g) = (sc.omega, rates.eta, sc.gamma);
    if eta >= 1.0 {
        return Err(Error::CouplingTooStrong { eta });
    }
    #[rustfmt::skip]
    let drift = Mat4::new(
        0.0, w, 0.0, 0.0,
        -w * (1.0 - eta), -g, -w * eta, 0.0,
        0.0, 0.0, 0.0, w,
        -w * eta, 0.0, -w * (1.0 - eta), -g,
    );
    let noise = g * (2.0 * sc.initial.nbar + 1.0);
    Ok(Propagator {
        drift,
        diffusion: Mat4::from_diagonal(&Vec4::new(0.0, noise, 0.0, noise)),
        drive: Vec4::new(0.0, rates.nu, 0.0, -rates.nu),
        setup: Setup::Oscillators,
        omega: w,
        eta,
        gamma: g,
    })
}

/// Released masses: no trap, no damping, no noise.
///
/// ```text
///     ⎡ 0    ω   0    0 ⎤
/// K = ⎢ ωη   0   −ωη  0 ⎥ ,  D = 0,  κ = ν (0, 1, 0, −1)ᵀ.
///     ⎢ 0    0   0    ω ⎥
///     ⎣ −ωη  0   ωη   0 ⎦
/// ```
pub fn build_released_propagator(sc: &Scenario) -> Result<Propagator> {
    if sc.setup != Setup::Released {
        return Err(Error::WrongSetup("expected a released-mass scenario"));
    }
    if sc.gamma != 0.0 {
        return Err(invalid("gamma", "released masses are undamped; gamma must be 0"));
    }
    sc.validate()?;
    let rates = sc.rates();
    let (w, eta) = (sc.omega, rates.eta);
    if eta >= 1.0 {
        return Err(Error::CouplingTooStrong { eta });
    }
    #[rustfmt::skip]
    let drift = Mat4::new(
        0.0, w, 0.0, 0.0,
        w * eta, 0.0, -w * eta, 0.0,
        0.0, 0.0, 0.0, w,
        -w * eta, 0.0, w * eta, 0.0,
    );
    Ok(Propagator {
        drift,
        diffusion: Mat4::zeros(),
        drive: Vec4::new(0.0, rates.nu, 0.0, -rates.nu),
        setup: Setup::Released,
        omega: w,
        eta,
        gamma: 0.0,
    })
}

pub fn build_propagator(sc: &Scenario) -> Result<Propagator> {
    match sc.setup {
        Setup::Oscillators => build_oscillator_propagator(sc),
        Setup::Released => build_released_propagator(sc),
    }
}

impl Propagator {
    pub fn drift(&self) -> &Mat4 {
        &self.drift
    }

    pub fn diffusion(&self) -> &Mat4 {
        &self.diffusion
    }

    pub fn drive(&self) -> &Vec4 {
        &self.drive
    }

    pub fn setup(&self) -> Setup {
        self.setup
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Same dynamics with `κ = 0`.
    pub fn without_drive(&self) -> Self {
        Self {
            drive: Vec4::zeros(),
            ..self.clone()
        }
    }

    /// True when there is neither damping nor noise, so that the evolution
    /// is a symplectic map with a closed form.
    pub fn is_conservative(&self) -> bool {
        self.gamma == 0.0 && self.diffusion == Mat4::zeros()
    }

    /// `(a₊, a₋)` of the centre-of-mass and relative blocks.
    fn mode_coefficients(&self) -> (f64, f64) {
        match self.setup {
            Setup::Oscillators => (1.0, 1.0 - 2.0 * self.eta),
            Setup::Released => (0.0, -2.0 * self.eta),
        }
    }

    /// Coefficient of the uncoupled single-mode drift used as local frame.
    fn local_coefficient(&self) -> f64 {
        match self.setup {
            Setup::Oscillators => 1.0,
            Setup::Released => 0.0,
        }
    }

    /// `W₊(t) = exp(Kt)`: from the normal modes when conservative, by Padé
    /// scaling and squaring otherwise.
    pub fn transfer(&self, t: f64) -> Result<Mat4> {
        if self.is_conservative() {
            let (a_com, a_rel) = self.mode_coefficients();
            let tau = self.omega * t;
            let w = from_mode_blocks(&modes::block(a_com, tau), &modes::block(a_rel, tau));
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::Range(format!(
                    "unstable relative mode overflowed at t = {t:.6e} s"
                )));
            }
            Ok(w)
        } else {
            matrix_exponential(&self.drift, t)
        }
    }

    /// Uncoupled evolution of each mode on its own (rotation at ω for trapped
    /// masses, free streaming for released ones). A local symplectic map, so
    /// it leaves entanglement untouched.
    pub fn local_transfer(&self, t: f64) -> Mat4 {
        let b = modes::block(self.local_coefficient(), self.omega * t);
        from_mode_blocks(&b, &b)
    }

    /// `exp(−K₀t)·exp(Kt)` with `K₀` the uncoupled drift: the map in the frame
    /// co-moving with the free evolution. Conservative propagators only.
    pub fn interaction_transfer(&self, t: f64) -> Result<Mat4> {
        if !self.is_conservative() {
            return Err(Error::WrongSetup("interaction frame requires an undamped propagator"));
        }
        let (a_com, a_rel) = self.mode_coefficients();
        let a0 = self.local_coefficient();
        let tau = self.omega * t;
        let w = from_mode_blocks(
            &modes::interaction_block(a0, a_com, tau),
            &modes::interaction_block(a0, a_rel, tau),
        );
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Range(format!(
                "unstable relative mode overflowed at t = {t:.6e} s"
            )));
        }
        Ok(w)
    }

    /// `∫₀ᵗ W₊(τ) κ dτ`, the drive's contribution to the mean.
    pub fn drive_response(&self, t: f64) -> Result<Vec4> {
        if self.drive == Vec4::zeros() || t == 0.0 {
            return Ok(Vec4::zeros());
        }
        if self.is_conservative() {
            let (a_com, a_rel) = self.mode_coefficients();
            let tau = self.omega * t;
            let t_mat = modes::mode_basis();
            let k = t_mat * self.drive;
            let integral = |a: f64, x: f64, p: f64| {
                let (_, s) = modes::cos_sin(a, tau);
                let s2 = modes::sin_integral(a, tau);
                // ∫ [[C, S], [−aS, C]] dτ′ = [[S, S₂], [−a S₂, S]]
                Vector2::new(s * x + s2 * p, -a * s2 * x + s * p) / self.omega
            };
            let com = integral(a_com, k[0], k[1]);
            let rel = integral(a_rel, k[2], k[3]);
            let out = from_mode_vectors(&com, &rel);
            if out.iter().any(|x| !x.is_finite()) {
                return Err(Error::Range(format!("drive response overflowed at t = {t:.6e} s")));
            }
            return Ok(out);
        }
        // Split into panels of about one radian of the fastest rate.
        let rate = self.drift.amax();
        let panels = ((rate * t).ceil() as usize).clamp(1, 1_000_000);
        let width = t / panels as f64;
        let tol = 1e-13 * self.drive.amax() * t;
        let mut acc = Vec4::zeros();
        for i in 0..panels {
            let lo = i as f64 * width;
            let hi = if i + 1 == panels { t } else { lo + width };
            acc += quadrature::integrate(
                |tau| Ok(matrix_exponential(&self.drift, tau)? * self.drive),
                lo,
                hi,
                tol,
                1e-13,
            )?;
        }
        Ok(acc)
    }
}

/// Mean quadratures at `t`: `W₊(t)⟨u(0)⟩ + ∫₀ᵗ W₊(τ) κ dτ`.
pub fn propagate_mean(p: &Propagator, u0: &Vec4, t: f64) -> Result<Vec4> {
    check_time(t)?;
    Ok(p.transfer(t)? * u0 + p.drive_response(t)?)
}

/// Covariance at `t`. Exact congruence `W₊ V₀ W₊ᵀ` when undamped; adaptive
/// integration of `V̇ = KV + VKᵀ + D` otherwise.
pub fn propagate_covariance(p: &Propagator, v0: &CovarianceMatrix, t: f64) -> Result<CovarianceMatrix> {
    propagate_covariance_with(p, v0, t, &LyapunovOptions::default())
}

pub fn propagate_covariance_with(
    p: &Propagator,
    v0: &CovarianceMatrix,
    t: f64,
    opts: &LyapunovOptions,
) -> Result<CovarianceMatrix> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(*v0);
    }
    if p.is_conservative() {
        let w = p.transfer(t)?;
        return Ok(CovarianceMatrix::symmetrized(w * v0.as_matrix() * w.transpose()));
    }
    let v = integrate_lyapunov(&p.drift, &p.diffusion, v0.as_matrix(), t, opts)?;
    Ok(CovarianceMatrix::symmetrized(v))
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(invalid("t", format!("must be finite and >= 0, got {t}")))
    }
}

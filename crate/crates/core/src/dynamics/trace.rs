use serde::{Deserialize, Serialize};

use super::lyapunov::{integrate_lyapunov, LyapunovOptions};
use super::propagator::{build_propagator, Propagator};
use super::scenario::Scenario;
use crate::cvcore::{
    log_negativity_from_nu, thermal_squeezed_covariance, CovarianceMatrix, Mat4, Mode, Vec4,
};
use crate::error::{invalid, Error, Result};
use crate::expm::matrix_exponential;

/// State of both masses at time `t`.
///
/// `frame_cov` is the covariance seen from the frame co-moving with the
/// uncoupled single-mode evolution (undamped case) or the lab covariance
/// itself (damped case). The two differ by a local symplectic map, so they
/// carry the same entanglement, but the co-moving one stays well conditioned
/// when released wave packets spread by many orders of magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolvedState {
    pub t: f64,
    pub mean: Vec4,
    pub cov: CovarianceMatrix,
    pub frame_cov: CovarianceMatrix,
}

/// One row of an [`EntanglementSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub log_negativity: f64,
    pub nu_tilde_min: f64,
    /// Position standard deviation of mass A in metres.
    pub width_a: f64,
    pub width_b: f64,
    /// Dimensionless mean quadratures `(X_A, P_A, X_B, P_B)`.
    pub mean: [f64; 4],
    /// Mean displacement of mass A in metres.
    pub mean_xa: f64,
    pub mean_xb: f64,
}

/// Samples of a trace, truncated at the first failing time if any.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementSeries {
    pub samples: Vec<TraceSample>,
    pub failure: Option<(f64, Error)>,
}

impl EntanglementSeries {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Largest sampled entanglement and its time.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.samples
            .iter()
            .map(|s| (s.t, s.log_negativity))
            .fold(None, |best, cur| match best {
                Some((_, e)) if e >= cur.1 => best,
                _ => Some(cur),
            })
    }

    /// First sample index at which `E ≥ threshold`.
    pub fn first_reaching(&self, threshold: f64) -> Option<usize> {
        self.samples.iter().position(|s| s.log_negativity >= threshold)
    }
}

/// Evolves one scenario; wraps its propagator and initial state.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Scenario,
    propagator: Propagator,
    initial: EvolvedState,
    options: LyapunovOptions,
}

impl Simulator {
    /// Starts from the scenario's squeezed thermal state with zero mean.
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let propagator = build_propagator(scenario)?;
        let cov = thermal_squeezed_covariance(&scenario.initial)?;
        Ok(Self {
            scenario: scenario.clone(),
            propagator,
            initial: EvolvedState {
                t: 0.0,
                mean: Vec4::zeros(),
                cov,
                frame_cov: cov,
            },
            options: LyapunovOptions::default(),
        })
    }

    pub fn with_options(mut self, options: LyapunovOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_initial_mean(mut self, mean: Vec4) -> Self {
        self.initial.mean = mean;
        self
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn initial_state(&self) -> &EvolvedState {
        &self.initial
    }

    /// State at `t` evolved directly from `t = 0`.
    pub fn state_at(&self, t: f64) -> Result<EvolvedState> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(invalid("t", format!("must be finite and >= 0, got {t}")));
        }
        if self.propagator.is_conservative() {
            self.exact_state(t)
        } else {
            self.advance(&self.initial, t)
        }
    }

    /// Evolves `state` forward by `dt`. Undamped evolution restarts from the
    /// initial state so no error accumulates.
    pub fn advance(&self, state: &EvolvedState, dt: f64) -> Result<EvolvedState> {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(invalid("dt", format!("must be finite and >= 0, got {dt}")));
        }
        let t = state.t + dt;
        if self.propagator.is_conservative() {
            return self.exact_state(t);
        }
        let p = &self.propagator;
        let v = integrate_lyapunov(p.drift(), p.diffusion(), state.cov.as_matrix(), dt, &self.options)
            .map_err(|e| match e {
                Error::IntegrationFailure { t: local, reason } => Error::IntegrationFailure {
                    t: state.t + local,
                    reason,
                },
                other => other,
            })?;
        let mean = matrix_exponential(p.drift(), dt)? * state.mean + p.drive_response(dt)?;
        let cov = CovarianceMatrix::symmetrized(v);
        Ok(EvolvedState {
            t,
            mean,
            cov,
            frame_cov: cov,
        })
    }

    fn exact_state(&self, t: f64) -> Result<EvolvedState> {
        let p = &self.propagator;
        let v0 = self.initial.cov.as_matrix();
        let w_int = p.interaction_transfer(t)?;
        let frame: Mat4 = w_int * v0 * w_int.transpose();
        let local = p.local_transfer(t);
        let lab = local * frame * local.transpose();
        let mean = p.transfer(t)? * self.initial.mean + p.drive_response(t)?;
        if lab.iter().any(|x| !x.is_finite()) || mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::Range(format!("state overflowed at t = {t:.6e} s")));
        }
        Ok(EvolvedState {
            t,
            mean,
            cov: CovarianceMatrix::symmetrized(lab),
            frame_cov: CovarianceMatrix::symmetrized(frame),
        })
    }

    /// Observables of an evolved state.
    pub fn sample(&self, state: &EvolvedState) -> Result<TraceSample> {
        let nu = state.frame_cov.min_ptranspose_symplectic_eigenvalue()?;
        state.frame_cov.check_physical()?;
        let sc = &self.scenario;
        let hbar = sc.constants.hbar;
        let scale = sc.position_scale();
        Ok(TraceSample {
            t: state.t,
            log_negativity: log_negativity_from_nu(nu),
            nu_tilde_min: nu,
            width_a: state.cov.width_meters_with(Mode::A, sc.mass, sc.omega, hbar)?,
            width_b: state.cov.width_meters_with(Mode::B, sc.mass, sc.omega, hbar)?,
            mean: [state.mean[0], state.mean[1], state.mean[2], state.mean[3]],
            mean_xa: scale * state.mean[0],
            mean_xb: scale * state.mean[2],
        })
    }

    /// Entanglement `E(t)` alone.
    pub fn log_negativity_at(&self, t: f64) -> Result<f64> {
        let s = self.state_at(t)?;
        Ok(log_negativity_from_nu(s.frame_cov.min_ptranspose_symplectic_eigenvalue()?))
    }

    /// Samples at ascending, non-negative `times`. Damped evolution is
    /// stepped sample to sample; undamped samples are independent.
    pub fn trace(&self, times: &[f64]) -> Result<EntanglementSeries> {
        validate_times(times)?;
        let mut samples = Vec::with_capacity(times.len());
        let mut state = self.initial;
        for &t in times {
            let step = self
                .advance(&state, t - state.t)
                .and_then(|next| Ok((self.sample(&next)?, next)));
            match step {
                Ok((sample, next)) => {
                    samples.push(sample);
                    state = next;
                }
                Err(e) => {
                    return Ok(EntanglementSeries {
                        samples,
                        failure: Some((t, e)),
                    })
                }
            }
        }
        Ok(EntanglementSeries {
            samples,
            failure: None,
        })
    }

    /// First time `E ≥ target` on the grid `times`, refined by bisection
    /// between the bracketing samples. `Ok(None)` if never reached.
    pub fn crossing_time(&self, target: f64, times: &[f64]) -> Result<Option<f64>> {
        validate_times(times)?;
        let mut prev = self.initial;
        if self.log_negativity_of(&prev)? >= target {
            return Ok(Some(0.0));
        }
        for &t in times {
            if t <= prev.t {
                continue;
            }
            let next = self.advance(&prev, t - prev.t)?;
            if self.log_negativity_of(&next)? >= target {
                return self.bisect_crossing(target, prev, next).map(Some);
            }
            prev = next;
        }
        Ok(None)
    }

    fn log_negativity_of(&self, state: &EvolvedState) -> Result<f64> {
        Ok(log_negativity_from_nu(
            state.frame_cov.min_ptranspose_symplectic_eigenvalue()?,
        ))
    }

    fn bisect_crossing(&self, target: f64, mut lo: EvolvedState, hi: EvolvedState) -> Result<f64> {
        let mut hi_t = hi.t;
        for _ in 0..100 {
            if hi_t - lo.t <= 1e-12 * hi_t.max(1e-300) {
                break;
            }
            let mid = self.advance(&lo, 0.5 * (hi_t - lo.t))?;
            if self.log_negativity_of(&mid)? >= target {
                hi_t = mid.t;
            } else {
                lo = mid;
            }
        }
        Ok(hi_t)
    }
}

/// Entanglement trace of `sc` at `times`.
pub fn entanglement_trace(sc: &Scenario, times: &[f64]) -> Result<EntanglementSeries> {
    Simulator::new(sc)?.trace(times)
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(invalid("times", "must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "must be ascending"));
    }
    Ok(())
}

/// `n` evenly spaced times from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

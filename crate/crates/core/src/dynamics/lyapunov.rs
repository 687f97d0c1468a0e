//! Adaptive Dormand–Prince 5(4) integration of `V̇ = KV + VKᵀ + D`.

use serde::{Deserialize, Serialize};

use crate::cvcore::Mat4;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovOptions {
    /// Per-step error target relative to the max-norm of `V`.
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            max_steps: 50_000_000,
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Differences between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Evolves `v0` by `duration` seconds under the Lyapunov equation.
pub fn integrate_lyapunov(
    drift: &Mat4,
    diffusion: &Mat4,
    v0: &Mat4,
    duration: f64,
    opts: &LyapunovOptions,
) -> Result<Mat4> {
    if duration < 0.0 || !duration.is_finite() {
        return Err(Error::IntegrationFailure {
            t: duration,
            reason: "duration must be finite and non-negative".into(),
        });
    }
    let rhs = |v: &Mat4| drift * v + v * drift.transpose() + diffusion;
    let mut v = *v0;
    if duration == 0.0 {
        return Ok(v);
    }

    let rate = drift.amax().max(f64::MIN_POSITIVE);
    let mut h = (0.05 / rate).min(duration);
    let mut t = 0.0;
    let mut k1 = rhs(&v);
    let mut steps = 0usize;

    while t < duration {
        if steps >= opts.max_steps {
            return Err(Error::IntegrationFailure {
                t,
                reason: format!("exceeded {} steps", opts.max_steps),
            });
        }
        steps += 1;
        let last = t + h >= duration;
        if last {
            h = duration - t;
        }

        let k2 = rhs(&(v + k1 * (h * A21)));
        let k3 = rhs(&(v + (k1 * A31 + k2 * A32) * h));
        let k4 = rhs(&(v + (k1 * A41 + k2 * A42 + k3 * A43) * h));
        let k5 = rhs(&(v + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h));
        let k6 = rhs(&(v + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h));
        let next = v + (k1 * B1 + k3 * B3 + k4 * B4 + k5 * B5 + k6 * B6) * h;
        let k7 = rhs(&next);
        let err = ((k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h).amax();

        let scale = opts.rtol * v.amax().max(next.amax());
        let ratio = if scale > 0.0 { err / scale } else { 0.0 };
        if !ratio.is_finite() {
            return Err(Error::IntegrationFailure {
                t,
                reason: "non-finite error estimate".into(),
            });
        }

        if ratio <= 1.0 {
            t = if last { duration } else { t + h };
            v = (next + next.transpose()) * 0.5;
            k1 = rhs(&v);
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h <= f64::EPSILON * t.max(1.0 / rate) {
            return Err(Error::IntegrationFailure {
                t,
                reason: format!("step size underflow (h = {h:.3e})"),
            });
        }
    }
    Ok(v)
}

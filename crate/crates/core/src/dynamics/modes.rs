//! Exact propagation of undamped, symmetric two-mode drifts.
//!
//! In the centre-of-mass / relative coordinates `X± = (X_A ± X_B)/√2` both
//! setups split into two independent blocks `[[0, ω], [−aω, 0]]`:
//! trapped oscillators have `a₊ = 1`, `a₋ = 1 − 2η`; released masses have
//! `a₊ = 0` (free) and `a₋ = −2η` (unstable, rate `√(2η)ω`).

use nalgebra::{Matrix2, Vector2};

use crate::cvcore::{Mat4, Vec4};

/// Terms kept in the power series used when `|a|τ² < 1`.
const SERIES_TERMS: usize = 30;

/// `(C, S)` with `C = cos(√a τ)`, `S = sin(√a τ)/√a`, continued analytically
/// through `a = 0` (`C = 1`, `S = τ`) and `a < 0` (hyperbolic).
pub(crate) fn cos_sin(a: f64, tau: f64) -> (f64, f64) {
    let z = -a * tau * tau;
    if z.abs() < 1.0 {
        let (mut c, mut s) = (0.0, 0.0);
        let mut term = 1.0; // z^k / (2k)!
        for k in 0..SERIES_TERMS {
            c += term;
            let odd = term / (2 * k + 1) as f64;
            s += odd;
            term = odd * z / (2 * k + 2) as f64;
        }
        (c, tau * s)
    } else if a > 0.0 {
        let k = a.sqrt();
        ((k * tau).cos(), (k * tau).sin() / k)
    } else {
        let k = (-a).sqrt();
        ((k * tau).cosh(), (k * tau).sinh() / k)
    }
}

/// `∫₀^τ S(a, τ′) dτ′ = (1 − C)/a`.
pub(crate) fn sin_integral(a: f64, tau: f64) -> f64 {
    let z = -a * tau * tau;
    if z.abs() < 1.0 {
        let mut sum = 0.0;
        let mut term = 0.5; // z^k / (2k+2)!
        for k in 0..SERIES_TERMS {
            sum += term;
            term *= z / ((2 * k + 3) * (2 * k + 4)) as f64;
        }
        tau * tau * sum
    } else {
        (1.0 - cos_sin(a, tau).0) / a
    }
}

/// `exp([[0, 1], [−a, 0]] τ)`.
pub(crate) fn block(a: f64, tau: f64) -> Matrix2<f64> {
    let (c, s) = cos_sin(a, tau);
    Matrix2::new(c, s, -a * s, c)
}

/// `exp(−K₀τ) exp(Kτ)` for one block, where `K₀` has coefficient `a0`.
///
/// With a free reference (`a0 = 0`) the product is summed as one series so
/// that the `O(aτ²)` residue does not cancel catastrophically.
pub(crate) fn interaction_block(a0: f64, a: f64, tau: f64) -> Matrix2<f64> {
    if a0 == a {
        return Matrix2::identity();
    }
    let z = -a * tau * tau;
    if a0 == 0.0 && z.abs() < 1.0 {
        let (c, s) = cos_sin(a, tau);
        let (mut m00, mut m01) = (0.0, 0.0);
        let mut even = 1.0; // z^k / (2k)!
        for k in 0..SERIES_TERMS {
            let odd = even / (2 * k + 1) as f64;
            m00 += even * (1.0 - 2.0 * k as f64);
            m01 -= odd * 2.0 * k as f64;
            even = odd * z / (2 * k + 2) as f64;
        }
        return Matrix2::new(m00, tau * m01, -a * s, c);
    }
    block(a0, -tau) * block(a, tau)
}

/// Orthogonal involution between `(X_A, P_A, X_B, P_B)` and
/// `(X₊, P₊, X₋, P₋)`.
pub(crate) fn mode_basis() -> Mat4 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let t = Mat4::new(
        h, 0.0, h, 0.0,
        0.0, h, 0.0, h,
        h, 0.0, -h, 0.0,
        0.0, h, 0.0, -h,
    );
    t
}

/// Maps a block-diagonal `com ⊕ rel` back to the A/B basis.
pub(crate) fn from_mode_blocks(com: &Matrix2<f64>, rel: &Matrix2<f64>) -> Mat4 {
    let mut m = Mat4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(com);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(rel);
    let t = mode_basis();
    t * m * t
}

pub(crate) fn from_mode_vectors(com: &Vector2<f64>, rel: &Vector2<f64>) -> Vec4 {
    mode_basis() * Vec4::new(com[0], com[1], rel[0], rel[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_and_closed_forms_agree_at_the_switch() {
        for &a in &[1.0, -1.0, 0.3, -2.5] {
            let tau = (1.0 / f64::abs(a)).sqrt();
            let below = cos_sin(a, tau * (1.0 - 1e-12));
            let above = cos_sin(a, tau * (1.0 + 1e-12));
            assert!((below.0 - above.0).abs() < 1e-11);
            assert!((below.1 - above.1).abs() < 1e-11);
            let i_below = sin_integral(a, tau * (1.0 - 1e-12));
            let i_above = sin_integral(a, tau * (1.0 + 1e-12));
            assert!((i_below - i_above).abs() < 1e-11);
        }
    }

    #[test]
    fn free_limit() {
        assert_eq!(cos_sin(0.0, 7.0), (1.0, 7.0));
        assert_eq!(sin_integral(0.0, 4.0), 8.0);
    }

    #[test]
    fn interaction_series_matches_product_in_overlap() {
        // Where no cancellation occurs both routes must agree.
        let a = -0.8;
        let tau = 0.9;
        let fused = interaction_block(0.0, a, tau);
        let product = block(0.0, -tau) * block(a, tau);
        assert!((fused - product).amax() < 1e-14);
    }

    #[test]
    fn interaction_series_is_accurate_when_product_cancels() {
        // a τ² = −2e−11 : the product route keeps ~5 digits, the series all of them.
        let (a, tau) = (-2e-17, 1e3);
        let m = interaction_block(0.0, a, tau);
        let z = -a * tau * tau;
        assert!((m[(0, 0)] - (1.0 - z / 2.0)).abs() < 1e-16);
        assert!((m[(0, 1)] - (-tau * z / 3.0)).abs() < 1e-20 * tau);
    }

    #[test]
    fn basis_is_an_involution() {
        let t = mode_basis();
        assert!((t * t - Mat4::identity()).amax() < 1e-15);
    }
}

//! Adaptive Gauss–Kronrod (7/15) quadrature for small vector-valued integrands.

use nalgebra::SVector;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

/// Integrates `f` over `[a, b]` until the Kronrod–Gauss difference on every
/// panel is below `abs_tol + rel_tol·|panel integral|` (max-norm).
pub fn integrate<const D: usize, F>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<SVector<f64, D>>
where
    F: FnMut(f64) -> Result<SVector<f64, D>>,
{
    if a == b {
        return Ok(SVector::zeros());
    }
    let mut total = SVector::<f64, D>::zeros();
    let mut stack = vec![(a, b, 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (kronrod, err) = panel(&mut f, lo, hi)?;
        let scale = (hi - lo).abs() / (b - a).abs();
        if err <= (abs_tol * scale).max(rel_tol * kronrod.amax()) || err == 0.0 {
            total += kronrod;
        } else if depth >= MAX_DEPTH {
            return Err(Error::IntegrationFailure {
                t: lo,
                reason: format!("quadrature did not converge on [{lo:.6e}, {hi:.6e}] (error {err:.3e})"),
            });
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}

fn panel<const D: usize, F>(f: &mut F, lo: f64, hi: f64) -> Result<(SVector<f64, D>, f64)>
where
    F: FnMut(f64) -> Result<SVector<f64, D>>,
{
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx)? + f(centre + dx)?;
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let kronrod = kronrod * half;
    let gauss = gauss * half;
    Ok((kronrod, (kronrod - gauss).amax()))
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let v = integrate::<1, _>(|x| Ok(SVector::<f64, 1>::new(f(x)?)), a, b, abs_tol, rel_tol)?;
    Ok(v[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_oscillations() {
        let v = integrate_scalar(|x| Ok(x.powi(5) - 3.0 * x), 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-12);
        let v = integrate_scalar(|x| Ok((3.0 * x).cos()), 0.0, 40.0, 1e-13, 1e-13).unwrap();
        assert!((v - (120.0f64).sin() / 3.0).abs() < 1e-11);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate_scalar(Ok, 1.0, 1.0, 1e-12, 0.0).unwrap(), 0.0);
    }
}

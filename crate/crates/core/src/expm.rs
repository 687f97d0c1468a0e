//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (degrees 3, 5, 7, 9, 13), following Higham's 2005 selection of degree and
//! scaling from the 1-norm.

use nalgebra::{DMatrix, SMatrix};

use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn one_norm<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(M t)`.
pub fn matrix_exponential<const N: usize>(m: &SMatrix<f64, N, N>, t: f64) -> Result<SMatrix<f64, N, N>> {
    if !t.is_finite() || m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Range(format!("non-finite input to matrix exponential (t = {t})")));
    }
    let a = m * t;
    let norm = one_norm(&a);
    let id = SMatrix::<f64, N, N>::identity();
    if norm == 0.0 {
        return Ok(id);
    }

    for &(degree, theta) in &THETA {
        if norm <= theta {
            let (u, v) = match degree {
                3 => pade_low(&a, &B3),
                5 => pade_low(&a, &B5),
                7 => pade_low(&a, &B7),
                _ => pade_low(&a, &B9),
            };
            return solve_pade(u, v, 0, norm);
        }
    }

    let squarings = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    if squarings > 1000 {
        return Err(Error::Range(format!(
            "‖Mt‖₁ = {norm:.3e} is too large to exponentiate"
        )));
    }
    let scaled = a / 2f64.powi(squarings);
    let (u, v) = pade13(&scaled);
    solve_pade(u, v, squarings, norm)
}

fn pade_low<const N: usize, const K: usize>(
    a: &SMatrix<f64, N, N>,
    b: &[f64; K],
) -> (SMatrix<f64, N, N>, SMatrix<f64, N, N>) {
    let a2 = a * a;
    let id = SMatrix::<f64, N, N>::identity();
    let mut power = id;
    let mut u = id * b[1];
    let mut v = id * b[0];
    for k in 1..K / 2 {
        power *= a2;
        u += power * b[2 * k + 1];
        v += power * b[2 * k];
    }
    (a * u, v)
}

fn pade13<const N: usize>(a: &SMatrix<f64, N, N>) -> (SMatrix<f64, N, N>, SMatrix<f64, N, N>) {
    let b = &B13;
    let id = SMatrix::<f64, N, N>::identity();
    let a2 = a * a;
    let a4 = a2 * a2;
    let a6 = a4 * a2;
    let u_inner = a6 * (a6 * b[13] + a4 * b[11] + a2 * b[9]) + a6 * b[7] + a4 * b[5] + a2 * b[3] + id * b[1];
    let u = a * u_inner;
    let v = a6 * (a6 * b[12] + a4 * b[10] + a2 * b[8]) + a6 * b[6] + a4 * b[4] + a2 * b[2] + id * b[0];
    (u, v)
}

fn solve_pade<const N: usize>(
    u: SMatrix<f64, N, N>,
    v: SMatrix<f64, N, N>,
    squarings: i32,
    norm: f64,
) -> Result<SMatrix<f64, N, N>> {
    let p = v + u;
    let q = v - u;
    let solved = DMatrix::from_column_slice(N, N, q.as_slice())
        .lu()
        .solve(&DMatrix::from_column_slice(N, N, p.as_slice()))
        .ok_or_else(|| Error::Range(format!("singular Padé denominator (‖Mt‖₁ = {norm:.3e})")))?;
    let mut r = SMatrix::<f64, N, N>::from_column_slice(solved.as_slice());
    for _ in 0..squarings {
        r = r * r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Range(format!(
            "matrix exponential overflowed (‖Mt‖₁ = {norm:.3e}); an unstable mode grew beyond f64 range"
        )));
    }
    Ok(r)
}

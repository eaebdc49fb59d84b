//! Brute-force references: literal backprojection and direct non-uniform
//! DFT sums. Slow by design and used to check the fast paths.

use rayon::prelude::*;

use crate::geometry::FrequencySlices;
use crate::spectral::signed_index;
use crate::{Complex64, PROPAGATION_SIGN, SPEED_OF_LIGHT};

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Phase-only backprojection of every coefficient onto every voxel.
///
/// `I(x_v) = sum_w sum_p e^{s i (w/c)|x_p - x_v|} sum_c P(x_p, x_c, w) e^{s i (w/c)|x_v - x_c|}`
/// with `s` the crate-wide propagation sign. Summation order is frequency,
/// then illumination, then detection point, for every voxel.
pub fn backproject(slices: &FrequencySlices, voxels: &[[f64; 3]]) -> Vec<Complex64> {
    let relay = slices.relay.positions();
    let illum = slices.relay.illumination_positions(&slices.illuminations);
    voxels
        .par_iter()
        .map(|v| {
            let r2: Vec<f64> = relay.iter().map(|c| dist(v, c)).collect();
            let r1: Vec<f64> = illum.iter().map(|p| dist(p, v)).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for (f, &w) in slices.frequencies.iter().enumerate() {
                let k = PROPAGATION_SIGN * w / SPEED_OF_LIGHT;
                for (p, &d1) in r1.iter().enumerate() {
                    let mut inner = Complex64::new(0.0, 0.0);
                    for (c, &d2) in r2.iter().enumerate() {
                        inner += slices.at(p, c, f) * Complex64::from_polar(1.0, k * d2);
                    }
                    acc += Complex64::from_polar(1.0, k * d1) * inner;
                }
            }
            acc
        })
        .collect()
}

fn mode_index<const D: usize>(lin: usize, modes: [usize; D]) -> [f64; D] {
    let mut rem = lin;
    std::array::from_fn(|a| {
        let i = rem % modes[a];
        rem /= modes[a];
        signed_index(i, modes[a]) as f64
    })
}

/// `U[k] = sum_j c_j e^{-i k . x_j}` summed directly, modes in FFT order.
pub fn direct_nudft<const D: usize>(
    points: &[[f64; D]],
    weights: &[Complex64],
    modes: [usize; D],
) -> Vec<Complex64> {
    let total: usize = modes.iter().product();
    (0..total)
        .into_par_iter()
        .map(|lin| {
            let k = mode_index(lin, modes);
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, &c) in points.iter().zip(weights) {
                let ph: f64 = (0..D).map(|a| k[a] * p[a]).sum();
                acc += c * Complex64::from_polar(1.0, -ph);
            }
            acc
        })
        .collect()
}

/// `u_j = sum_k U[k] e^{+i k . x_j}` summed directly.
pub fn direct_nudft_adjoint<const D: usize>(
    spectrum: &[Complex64],
    modes: [usize; D],
    targets: &[[f64; D]],
) -> Vec<Complex64> {
    targets
        .par_iter()
        .map(|p| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (lin, &u) in spectrum.iter().enumerate() {
                let k = mode_index(lin, modes);
                let ph: f64 = (0..D).map(|a| k[a] * p[a]).sum();
                acc += u * Complex64::from_polar(1.0, ph);
            }
            acc
        })
        .collect()
}

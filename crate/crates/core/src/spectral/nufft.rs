//! Type-1 and type-2 non-uniform FFTs by Gaussian gridding.
//!
//! Type 1: `U[k] = sum_j c_j exp(-i k . x_j)` for signed modes `k`.
//! Type 2: `u_j = sum_k U[k] exp(+i k . x_j)`.
//!
//! Points live on `[-pi, pi)^D`. Mode arrays use FFT ordering on every axis,
//! so an axis of `M` modes holds `k = 0, 1, .., -1`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::fft::{fast_len, signed_index, wrap_index, FftPlan};
use crate::error::{Error, Result};
use crate::Complex64;

pub const DEFAULT_EPS: f64 = 1e-6;

/// Precomputed gridding parameters for a fixed mode shape and tolerance.
#[derive(Debug, Clone)]
pub struct NufftPlan<const D: usize> {
    modes: [usize; D],
    fine: [usize; D],
    half_width: usize,
    tau: [f64; D],
    eps: f64,
    /// Per-axis deconvolution weights in mode order, with the fine-grid
    /// normalization folded in.
    deconv: Vec<Vec<f64>>,
    fft: FftPlan,
}

impl<const D: usize> NufftPlan<D> {
    pub fn new(modes: [usize; D], eps: f64) -> Result<Self> {
        if !(1e-14..=1e-1).contains(&eps) {
            return Err(Error::Tolerance(eps));
        }
        if D == 0 || D > 3 {
            return Err(Error::InvalidArgument(format!("NUFFT dimension {D} not in 1..=3")));
        }
        if modes.contains(&0) {
            return Err(Error::InvalidArgument("NUFFT mode counts must be positive".into()));
        }
        let half_width = (1.0 / eps).log10().ceil() as usize + 2;
        let mut fine = [0; D];
        let mut tau = [0.0; D];
        let mut deconv = Vec::with_capacity(D);
        for a in 0..D {
            let m = modes[a];
            let mr = fast_len((2 * m).max(2 * half_width));
            let ratio = mr as f64 / m as f64;
            let t = PI * half_width as f64 / ((m * m) as f64 * ratio * (ratio - 0.5));
            fine[a] = mr;
            tau[a] = t;
            let pre = (PI / t).sqrt() / mr as f64;
            deconv.push(
                (0..m)
                    .map(|i| {
                        let k = signed_index(i, m) as f64;
                        pre * (k * k * t).exp()
                    })
                    .collect(),
            );
        }
        Ok(Self {
            modes,
            fine,
            half_width,
            tau,
            eps,
            deconv,
            fft: FftPlan::new(&fine),
        })
    }

    pub fn modes(&self) -> [usize; D] {
        self.modes
    }

    pub fn fine_shape(&self) -> [usize; D] {
        self.fine
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn tau(&self) -> [f64; D] {
        self.tau
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn mode_count(&self) -> usize {
        self.modes.iter().product()
    }

    fn check_points(points: &[[f64; D]]) -> Result<()> {
        for p in points {
            for (a, &v) in p.iter().enumerate() {
                if !(-PI..PI).contains(&v) {
                    return Err(Error::OutOfRange {
                        axis: a,
                        value: v,
                        lo: -PI,
                        hi: PI,
                    });
                }
            }
        }
        Ok(())
    }

    /// Kernel footprint of one point: per-axis first fine index and weights.
    fn stencil(&self, p: &[f64; D]) -> ([i64; D], [Vec<f64>; D]) {
        let w = self.half_width as i64;
        let mut start = [0i64; D];
        let mut weights: [Vec<f64>; D] = std::array::from_fn(|_| Vec::new());
        for a in 0..D {
            let h = 2.0 * PI / self.fine[a] as f64;
            let g = p[a] / h;
            let s = g.floor() as i64 - w + 1;
            start[a] = s;
            let inv = 1.0 / (4.0 * self.tau[a]);
            weights[a] = (0..2 * w)
                .map(|o| {
                    let d = p[a] - (s + o) as f64 * h;
                    (-d * d * inv).exp()
                })
                .collect();
        }
        (start, weights)
    }

    /// Visit the fine-grid cells touched by a point with their kernel weights.
    fn for_each_cell(&self, p: &[f64; D], mut f: impl FnMut(usize, f64)) {
        let (start, weights) = self.stencil(p);
        let span = 2 * self.half_width;
        let mut idx = [0usize; D];
        let mut counter = [0usize; D];
        loop {
            let mut lin = 0usize;
            let mut stride = 1usize;
            let mut wt = 1.0;
            for a in 0..D {
                idx[a] = wrap_index(start[a] + counter[a] as i64, self.fine[a]);
                lin += idx[a] * stride;
                stride *= self.fine[a];
                wt *= weights[a][counter[a]];
            }
            f(lin, wt);
            let mut a = 0;
            loop {
                if a == D {
                    return;
                }
                counter[a] += 1;
                if counter[a] < span {
                    break;
                }
                counter[a] = 0;
                a += 1;
            }
        }
    }

    /// Visit every mode with its fine-grid index and deconvolution weight.
    fn for_each_mode(&self, mut f: impl FnMut(usize, usize, f64)) {
        let total = self.mode_count();
        for lin in 0..total {
            let mut rem = lin;
            let mut fine_lin = 0;
            let mut stride = 1;
            let mut wt = 1.0;
            for a in 0..D {
                let i = rem % self.modes[a];
                rem /= self.modes[a];
                let k = signed_index(i, self.modes[a]);
                fine_lin += wrap_index(k, self.fine[a]) * stride;
                stride *= self.fine[a];
                wt *= self.deconv[a][i];
            }
            f(lin, fine_lin, wt);
        }
    }

    /// Type-1 transform: non-uniform samples to uniform modes.
    pub fn type1(&self, points: &[[f64; D]], weights: &[Complex64]) -> Result<Vec<Complex64>> {
        if points.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        Self::check_points(points)?;
        let mut grid = vec![Complex64::new(0.0, 0.0); self.fft.len()];
        for (p, &c) in points.iter().zip(weights) {
            self.for_each_cell(p, |i, w| grid[i] += c * w);
        }
        self.fft.forward(&mut grid);
        let mut out = vec![Complex64::new(0.0, 0.0); self.mode_count()];
        self.for_each_mode(|i, j, w| out[i] = grid[j] * w);
        Ok(out)
    }

    /// Type-2 transform: uniform modes to values at non-uniform targets.
    pub fn type2(&self, spectrum: &[Complex64], targets: &[[f64; D]]) -> Result<Vec<Complex64>> {
        if spectrum.len() != self.mode_count() {
            return Err(Error::InvalidArgument(format!(
                "spectrum has {} values, plan expects {}",
                spectrum.len(),
                self.mode_count()
            )));
        }
        Self::check_points(targets)?;
        let mut grid = vec![Complex64::new(0.0, 0.0); self.fft.len()];
        self.for_each_mode(|i, j, w| grid[j] = spectrum[i] * w);
        self.fft.inverse_unnormalized(&mut grid);
        let out = targets
            .par_iter()
            .map(|p| {
                let mut acc = Complex64::new(0.0, 0.0);
                self.for_each_cell(p, |i, w| acc += grid[i] * w);
                acc
            })
            .collect();
        Ok(out)
    }
}

/// One-shot type-1 transform.
pub fn nufft1<const D: usize>(
    points: &[[f64; D]],
    weights: &[Complex64],
    modes: [usize; D],
    eps: f64,
) -> Result<Vec<Complex64>> {
    NufftPlan::new(modes, eps)?.type1(points, weights)
}

/// One-shot type-2 transform.
pub fn nufft2<const D: usize>(
    spectrum: &[Complex64],
    modes: [usize; D],
    targets: &[[f64; D]],
    eps: f64,
) -> Result<Vec<Complex64>> {
    NufftPlan::new(modes, eps)?.type2(spectrum, targets)
}

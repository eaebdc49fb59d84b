//! Scaled DFT through chirp factorization.
//!
//! Along one axis of length `M`, with signed indices `m, m'` in FFT order,
//!
//! `U[m'] = sum_m u[m] exp(-i 2 pi alpha m m' / M)`.
//!
//! Writing `m m' = (m^2 + m'^2 - (m' - m)^2) / 2` turns the sum into a
//! linear convolution between two chirps, evaluated with three FFTs of a
//! padded length of at least `2M - 1`.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::fft::{fast_len, wrap_index};
use crate::error::{Error, Result};
use crate::Complex64;

/// Chirp-z machinery for a single axis.
#[derive(Clone)]
pub struct ChirpAxis {
    len: usize,
    scale: f64,
    /// Most negative signed index on the axis.
    first: i64,
    chirp: Vec<Complex64>,
    kernel_spectrum: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ChirpAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChirpAxis")
            .field("len", &self.len)
            .field("scale", &self.scale)
            .field("padded", &self.kernel_spectrum.len())
            .finish()
    }
}

impl ChirpAxis {
    pub fn new(len: usize, scale: f64) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidGrid("scaled transform of an empty axis".into()));
        }
        if !scale.is_finite() || scale == 0.0 {
            return Err(Error::InvalidGrid(format!(
                "scale factor must be finite and nonzero, got {scale}"
            )));
        }
        let padded = fast_len(2 * len - 1);
        let first = -((len / 2) as i64);
        let theta = std::f64::consts::PI * scale / len as f64;
        let phase = |d: i64| {
            let d = d as f64;
            theta * d * d
        };
        let chirp = (0..len as i64)
            .map(|p| Complex64::from_polar(1.0, -phase(first + p)))
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); padded];
        for d in -(len as i64 - 1)..len as i64 {
            kernel[wrap_index(d, padded)] = Complex64::from_polar(1.0, phase(d));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(padded);
        let ifft = planner.plan_fft_inverse(padded);
        fft.process(&mut kernel);
        let norm = 1.0 / padded as f64;
        kernel.iter_mut().for_each(|v| *v *= norm);
        Ok(Self {
            len,
            scale,
            first,
            chirp,
            kernel_spectrum: kernel,
            fft,
            ifft,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn padded_len(&self) -> usize {
        self.kernel_spectrum.len()
    }

    /// Transform one line in place. `work` must hold `padded_len()` values.
    pub fn apply(&self, line: &mut [Complex64], work: &mut [Complex64]) {
        let m = self.len;
        debug_assert_eq!(line.len(), m);
        work.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for p in 0..m {
            work[p] = line[wrap_index(self.first + p as i64, m)] * self.chirp[p];
        }
        self.fft.process(work);
        for (w, k) in work.iter_mut().zip(&self.kernel_spectrum) {
            *w *= k;
        }
        self.ifft.process(work);
        for p in 0..m {
            line[wrap_index(self.first + p as i64, m)] = work[p] * self.chirp[p];
        }
    }
}

/// Separable 2D scaled DFT with factors `alpha` (x axis) and `beta` (y axis).
#[derive(Debug, Clone)]
pub struct SfftPlan {
    x: ChirpAxis,
    y: ChirpAxis,
}

impl SfftPlan {
    pub fn new(m: usize, n: usize, alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self {
            x: ChirpAxis::new(m, alpha)?,
            y: ChirpAxis::new(n, beta)?,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x.len, self.y.len)
    }

    pub fn scales(&self) -> (f64, f64) {
        (self.x.scale, self.y.scale)
    }

    /// Transform an `m x n` row-major array in place.
    pub fn execute(&self, data: &mut [Complex64]) {
        let (m, n) = self.shape();
        assert_eq!(data.len(), m * n, "buffer does not match plan shape");
        let mut work = vec![Complex64::new(0.0, 0.0); self.x.padded_len().max(self.y.padded_len())];
        let wx = self.x.padded_len();
        for row in data.chunks_mut(m) {
            self.x.apply(row, &mut work[..wx]);
        }
        let wy = self.y.padded_len();
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..m {
            for j in 0..n {
                col[j] = data[i + m * j];
            }
            self.y.apply(&mut col, &mut work[..wy]);
            for j in 0..n {
                data[i + m * j] = col[j];
            }
        }
    }
}

/// Scaled 2D DFT of an `m x n` array.
pub fn sfft_2d(u: &[Complex64], m: usize, n: usize, alpha: f64, beta: f64) -> Result<Vec<Complex64>> {
    let plan = SfftPlan::new(m, n, alpha, beta)?;
    let mut out = u.to_vec();
    plan.execute(&mut out);
    Ok(out)
}

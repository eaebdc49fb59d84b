use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::Complex64;

/// Smallest size `>= n` whose only prime factors are 2, 3 and 5.
pub fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Signed frequency index of array position `i` on an axis of length `m`.
///
/// Positions at or past the midpoint wrap to negative indices, so position 0
/// is the zero frequency (standard FFT ordering).
pub fn signed_index(i: usize, m: usize) -> i64 {
    if 2 * i >= m {
        i as i64 - m as i64
    } else {
        i as i64
    }
}

/// Array position of signed index `k` on an axis of length `m`.
pub fn wrap_index(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

/// Separable multi-dimensional FFT over a row-major array, axis 0 fastest.
#[derive(Clone)]
pub struct FftPlan {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for FftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPlan").field("shape", &self.shape).finish()
    }
}

impl FftPlan {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self {
            shape: shape.to_vec(),
            forward,
            inverse,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized forward transform, exponent `-i 2 pi k n / N`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Inverse transform scaled by `1/N` per axis.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
        let s = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    /// Inverse transform without the `1/N` factor.
    pub fn inverse_unnormalized(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len(), "buffer does not match plan shape");
        let mut stride = 1;
        for (axis, &n) in self.shape.iter().enumerate() {
            let plan = &plans[axis];
            if n > 1 {
                if stride == 1 {
                    plan.process(data);
                } else {
                    transform_strided(data, n, stride, plan.as_ref());
                }
            }
            stride *= n;
        }
    }
}

fn transform_strided(data: &mut [Complex64], n: usize, stride: usize, plan: &dyn Fft<f64>) {
    let block = n * stride;
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    for chunk in data.chunks_mut(block) {
        for offset in 0..stride {
            for (j, v) in line.iter_mut().enumerate() {
                *v = chunk[offset + j * stride];
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for (j, v) in line.iter().enumerate() {
                chunk[offset + j * stride] = *v;
            }
        }
    }
}

/// Forward 2D FFT of an `m x n` row-major array.
pub fn fft_2d(u: &[Complex64], m: usize, n: usize) -> Vec<Complex64> {
    let mut out = u.to_vec();
    FftPlan::new(&[m, n]).forward(&mut out);
    out
}

/// Inverse 2D FFT with `1/(m n)` normalization.
pub fn ifft_2d(u: &[Complex64], m: usize, n: usize) -> Vec<Complex64> {
    let mut out = u.to_vec();
    FftPlan::new(&[m, n]).inverse(&mut out);
    out
}

/// Direct O((mn)^2) evaluation of the 2D DFT. Reference use only.
pub fn dft_2d(u: &[Complex64], m: usize, n: usize) -> Vec<Complex64> {
    assert_eq!(u.len(), m * n);
    let tau = std::f64::consts::TAU;
    let mut out = vec![Complex64::new(0.0, 0.0); m * n];
    for kn in 0..n {
        for km in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for jn in 0..n {
                for jm in 0..m {
                    let ph = -tau
                        * (((km * jm) % m) as f64 / m as f64 + ((kn * jn) % n) as f64 / n as f64);
                    acc += u[jm + m * jn] * Complex64::from_polar(1.0, ph);
                }
            }
            out[km + m * kn] = acc;
        }
    }
    out
}

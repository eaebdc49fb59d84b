use crate::error::{Error, Result};
use crate::spectral::{wrap_index, FftPlan};
use crate::{Complex64, PROPAGATION_SIGN, SPEED_OF_LIGHT};

use super::layout::Lattice;

/// Rayleigh-Sommerfeld kernel `exp(s i (w/c) r) / r` sampled on a padded
/// lattice at a fixed depth, in the wrapped layout used for circular
/// convolution.
#[derive(Debug, Clone)]
pub struct PropagationKernel {
    pub shape: [usize; 2],
    pub depth: f64,
    pub omega: f64,
    /// Whether the `1/r` amplitude is included.
    pub falloff: bool,
    pub values: Vec<Complex64>,
}

impl PropagationKernel {
    pub fn new(lattice: &Lattice, depth: f64, omega: f64, falloff: bool) -> Result<Self> {
        if !(depth > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "voxel plane must lie beyond the source plane, depth {depth}"
            )));
        }
        let (ax, ay) = (&lattice.x, &lattice.y);
        let k = PROPAGATION_SIGN * omega / SPEED_OF_LIGHT;
        let mut values = vec![Complex64::new(0.0, 0.0); lattice.size()];
        let d2 = depth * depth;
        for qy in ay.q_lo..ay.q_lo + ay.len as i64 {
            let y = qy as f64 * ay.pitch;
            let row = wrap_index(qy, ay.len) * ax.len;
            for qx in ax.q_lo..ax.q_lo + ax.len as i64 {
                let x = qx as f64 * ax.pitch;
                let r = (x * x + y * y + d2).sqrt();
                let amp = if falloff { 1.0 / r } else { 1.0 };
                values[row + wrap_index(qx, ax.len)] = Complex64::from_polar(amp, k * r);
            }
        }
        Ok(Self {
            shape: lattice.shape(),
            depth,
            omega,
            falloff,
            values,
        })
    }

    /// Forward FFT of the sampled kernel.
    pub fn spectrum(mut self, fft: &FftPlan) -> Vec<Complex64> {
        fft.forward(&mut self.values);
        self.values
    }
}

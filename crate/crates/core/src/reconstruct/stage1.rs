//! First stage for curved relay walls: carry every relay sample forward to
//! the plane `z0` through the highest relay point, as an angular spectrum
//! on the stage-two lattice.
//!
//! A sample at height `z_j` contributes `c_j exp(-i k.x_j) T(k, z0 - z_j)`
//! where `T = exp(s i kz dz)` for propagating components and
//! `exp(-|kz| dz)` for evanescent ones.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::FrequencySlices;
use crate::sim::Interpolation;
use crate::spectral::{signed_index, wrap_index, FftPlan, NufftPlan};
use crate::{Complex64, PROPAGATION_SIGN, SPEED_OF_LIGHT};

use super::engine::{source_torus, Sources};
use super::layout::Lattice;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Half-width of the windowed-sinc stencil along the depth-frequency axis.
pub(crate) const SINC_HALF_WIDTH: i64 = 12;
const SINC_SIGMA: f64 = 2.5;

/// Squared lateral wavenumber for every spectral bin.
fn lateral_k2(lattice: &Lattice) -> Vec<f64> {
    let [lx, ly] = lattice.shape();
    let tau = 2.0 * std::f64::consts::PI;
    let mut out = Vec::with_capacity(lx * ly);
    for j in 0..ly {
        let ky = tau * signed_index(j, ly) as f64 / (ly as f64 * lattice.y.pitch);
        for i in 0..lx {
            let kx = tau * signed_index(i, lx) as f64 / (lx as f64 * lattice.x.pitch);
            out.push(kx * kx + ky * ky);
        }
    }
    out
}

/// Transfer factor over `dz` for a component with squared lateral wavenumber `kp2`.
fn transfer(k: f64, kp2: f64, dz: f64) -> Complex64 {
    let d = k * k - kp2;
    if d >= 0.0 {
        Complex64::from_polar(1.0, PROPAGATION_SIGN * d.sqrt() * dz)
    } else {
        Complex64::new((-(-d).sqrt() * dz).exp(), 0.0)
    }
}

struct Splat {
    layer: usize,
    cell: usize,
    weight: f64,
}

fn axis_weights(u: f64, scheme: Interpolation) -> Vec<(i64, f64)> {
    match scheme {
        Interpolation::Nearest => vec![(u.round() as i64, 1.0)],
        Interpolation::Linear => {
            let f = u.floor();
            let t = u - f;
            if t == 0.0 {
                vec![(f as i64, 1.0)]
            } else {
                vec![(f as i64, 1.0 - t), (f as i64 + 1, t)]
            }
        }
    }
}

/// Deposit the samples on depth layers `z0 - l dz` and combine the layer
/// spectra with the per-layer transfer factor.
pub(crate) fn splat_sources(
    slices: &FrequencySlices,
    xyz: &[[f64; 3]],
    lattice: Lattice,
    z0: f64,
    dz: f64,
    scheme: Interpolation,
) -> Result<Sources> {
    if !(dz > 0.0 && dz.is_finite()) {
        return Err(Error::InvalidArgument(format!("stage-one layer spacing must be positive, got {dz}")));
    }
    let [lx, ly] = lattice.shape();
    let mut splats: Vec<Vec<Splat>> = Vec::with_capacity(xyz.len());
    let mut n_layers = 1;
    for p in xyz {
        let u = lattice.x.coord(p[0]);
        let v = lattice.y.coord(p[1]);
        let w = (z0 - p[2]) / dz;
        let mut s = Vec::new();
        for (iz, wz) in axis_weights(w, scheme) {
            for (iy, wy) in axis_weights(v, scheme) {
                for (ix, wx) in axis_weights(u, scheme) {
                    let layer = iz.max(0) as usize;
                    n_layers = n_layers.max(layer + 1);
                    s.push(Splat {
                        layer,
                        cell: wrap_index(ix, lx) + lx * wrap_index(iy, ly),
                        weight: wx * wy * wz,
                    });
                }
            }
        }
        splats.push(s);
    }
    let used: Vec<usize> = (0..n_layers)
        .filter(|l| splats.iter().flatten().any(|s| s.layer == *l))
        .collect();
    let fft = FftPlan::new(&[lx, ly]);
    let k2 = lateral_k2(&lattice);
    let nf = slices.n_freq();
    let spectra = (0..slices.n_illum() * nf)
        .into_par_iter()
        .map(|pf| {
            let (p, f) = (pf / nf, pf % nf);
            let k = slices.frequencies[f] / SPEED_OF_LIGHT;
            let mut layers = vec![vec![ZERO; lx * ly]; n_layers];
            for (c, s) in splats.iter().enumerate() {
                let val = slices.at(p, c, f);
                for sp in s {
                    layers[sp.layer][sp.cell] += val * sp.weight;
                }
            }
            let mut out = vec![ZERO; lx * ly];
            for &l in &used {
                let layer = &mut layers[l];
                fft.forward(layer);
                let depth = l as f64 * dz;
                for (i, o) in out.iter_mut().enumerate() {
                    *o += layer[i] * transfer(k, k2[i], depth);
                }
            }
            out
        })
        .collect();
    Ok(Sources { lattice, spectra })
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let a = std::f64::consts::PI * x;
        a.sin() / a
    }
}

/// Gaussian-windowed sinc weights at `q` over `2 * SINC_HALF_WIDTH` integers,
/// normalised to sum to one.
pub(crate) fn sinc_stencil(q: f64) -> (i64, Vec<f64>) {
    let first = q.floor() as i64 - SINC_HALF_WIDTH + 1;
    let mut w: Vec<f64> = (0..2 * SINC_HALF_WIDTH)
        .map(|i| {
            let d = q - (first + i) as f64;
            sinc(d) * (-d * d / (2.0 * SINC_SIGMA * SINC_SIGMA)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    (first, w)
}

/// Stage one by a 3D type-1 NUFFT over (x, y, scaled depth offset) followed
/// by interpolation along the depth-frequency axis at `q = -s kz / eta`.
///
/// Depth offsets `z0 - z_j` in `[0, Z]` are mapped to `eta (z0 - z_j) - pi/4`
/// with `eta = (pi/2) / Z`, so the data occupy a quarter of the torus and
/// the depth-frequency samples are four times oversampled. Evanescent
/// components use the decay at the mean depth offset.
pub(crate) fn nufft_sources(
    slices: &FrequencySlices,
    xyz: &[[f64; 3]],
    lattice: Lattice,
    z0: f64,
    eps: f64,
) -> Result<Sources> {
    let xy: Vec<[f64; 2]> = xyz.iter().map(|p| [p[0], p[1]]).collect();
    let torus = source_torus(&lattice, &xy)?;
    let offsets: Vec<f64> = xyz.iter().map(|p| z0 - p[2]).collect();
    let span = offsets.iter().cloned().fold(0.0, f64::max);
    if span == 0.0 {
        return super::engine::scattered_sources(slices, &xy, lattice, eps);
    }
    let mean = offsets.iter().sum::<f64>() / offsets.len() as f64;
    let eta = std::f64::consts::FRAC_PI_2 / span;
    let quarter = std::f64::consts::FRAC_PI_4;
    let pts: Vec<[f64; 3]> = torus
        .iter()
        .zip(&offsets)
        .map(|(t, d)| [t[0], t[1], (eta * d - quarter).min(quarter)])
        .collect();
    let w_max = slices.frequencies.iter().cloned().fold(0.0, f64::max);
    let q_max = ((w_max / SPEED_OF_LIGHT) / eta).ceil() as i64 + SINC_HALF_WIDTH + 1;
    let nq = (2 * q_max + 1) as usize;
    let [lx, ly] = lattice.shape();
    let plan = NufftPlan::new([lx, ly, nq], eps)?;
    let k2 = lateral_k2(&lattice);
    let nf = slices.n_freq();
    let spectra = (0..slices.n_illum() * nf)
        .into_par_iter()
        .map(|pf| {
            let (p, f) = (pf / nf, pf % nf);
            let u = plan.type1(&pts, &slices.wavefront(p, f))?;
            let k = slices.frequencies[f] / SPEED_OF_LIGHT;
            let plane = lx * ly;
            let mut out = vec![ZERO; plane];
            for (i, o) in out.iter_mut().enumerate() {
                let d = k * k - k2[i];
                if d < 0.0 {
                    *o = u[i] * (-(-d).sqrt() * mean).exp();
                    continue;
                }
                let q = -PROPAGATION_SIGN * d.sqrt() / eta;
                let (first, w) = sinc_stencil(q);
                let mut acc = ZERO;
                for (m, wm) in w.iter().enumerate() {
                    acc += u[i + plane * wrap_index(first + m as i64, nq)] * *wm;
                }
                *o = acc * Complex64::from_polar(1.0, -q * quarter);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sources { lattice, spectra })
}

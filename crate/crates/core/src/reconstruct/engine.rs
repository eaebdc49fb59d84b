//! Shared second stage of every variant: a source spectrum on a padded
//! lattice is multiplied by the kernel spectrum of each voxel plane and
//! synthesised at that plane's voxels.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{rescale_to_torus, BoundingBox, FrequencySlices, UniformGrid2D};
use crate::spectral::{signed_index, wrap_index, FftPlan, NufftPlan, SfftPlan};
use crate::{Complex64, PROPAGATION_SIGN, SPEED_OF_LIGHT};

use super::kernel::PropagationKernel;
use super::layout::{AxisLayout, Lattice};
use super::ReconOptions;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How the voxels of one plane are read off the convolution.
pub(crate) enum Targets {
    /// Integer lattice block starting at `lo`.
    Window { lo: [i64; 2], n: [usize; 2] },
    /// Samples at `center + (i - ci) / scale`, evaluated by a scaled DFT.
    Scaled {
        center: [i64; 2],
        n: [usize; 2],
        ci: [usize; 2],
        plan: Arc<SfftPlan>,
    },
    /// Arbitrary lattice coordinates, evaluated by a type-2 NUFFT.
    Points {
        center: [i64; 2],
        coords: Vec<[f64; 2]>,
        plan: Arc<NufftPlan<2>>,
    },
}

pub(crate) struct PlaneJob {
    pub z: f64,
    /// Physical voxel positions in storage order.
    pub positions: Vec<[f64; 3]>,
    pub targets: Targets,
}

impl PlaneJob {
    /// Voxels at arbitrary physical positions on one plane.
    pub fn points(lattice: &Lattice, z: f64, xy: &[[f64; 2]], plan: Arc<NufftPlan<2>>) -> Result<Self> {
        let (ax, ay) = (&lattice.x, &lattice.y);
        let center = [ax.center(), ay.center()];
        let lat: Vec<[f64; 2]> = xy.iter().map(|p| [ax.coord(p[0]), ay.coord(p[1])]).collect();
        let half = [ax.len as f64 / 2.0, ay.len as f64 / 2.0];
        let bounds = BoundingBox::new(
            [center[0] as f64 - half[0], center[1] as f64 - half[1]],
            [center[0] as f64 + half[0], center[1] as f64 + half[1]],
        );
        let (coords, _) = rescale_to_torus(&lat, &bounds)?;
        Ok(Self {
            z,
            positions: xy.iter().map(|p| [p[0], p[1], z]).collect(),
            targets: Targets::Points { center, coords, plan },
        })
    }
}

/// Source spectra, one `Lx * Ly` array per (illumination, frequency).
pub(crate) struct Sources {
    pub lattice: Lattice,
    /// Indexed `p * n_freq + f`.
    pub spectra: Vec<Vec<Complex64>>,
}

/// Place a uniform relay's wavefronts at lattice indices `0..nx, 0..ny`.
pub(crate) fn uniform_sources(slices: &FrequencySlices, grid: &UniformGrid2D, lattice: Lattice) -> Sources {
    let [lx, ly] = lattice.shape();
    let fft = FftPlan::new(&[lx, ly]);
    let nf = slices.n_freq();
    let spectra = (0..slices.n_illum() * nf)
        .into_par_iter()
        .map(|pf| {
            let (p, f) = (pf / nf, pf % nf);
            let mut buf = vec![ZERO; lx * ly];
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    buf[i + lx * j] = slices.at(p, i + grid.nx * j, f);
                }
            }
            fft.forward(&mut buf);
            buf
        })
        .collect();
    Sources { lattice, spectra }
}

/// Torus coordinates of lattice positions in `[0, L/2)`.
pub(crate) fn source_torus(lattice: &Lattice, xy: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let (ax, ay) = (&lattice.x, &lattice.y);
    let lat: Vec<[f64; 2]> = xy.iter().map(|p| [ax.coord(p[0]), ay.coord(p[1])]).collect();
    let hx = ax.len as f64 / 2.0;
    let hy = ay.len as f64 / 2.0;
    let (pts, _) = rescale_to_torus(&lat, &BoundingBox::new([-hx, -hy], [hx, hy]))?;
    Ok(pts)
}

/// Scattered planar relay samples spread onto the lattice by a type-1 NUFFT.
pub(crate) fn scattered_sources(
    slices: &FrequencySlices,
    xy: &[[f64; 2]],
    lattice: Lattice,
    eps: f64,
) -> Result<Sources> {
    let pts = source_torus(&lattice, xy)?;
    let plan = NufftPlan::new(lattice.shape(), eps)?;
    let nf = slices.n_freq();
    let spectra = (0..slices.n_illum() * nf)
        .into_par_iter()
        .map(|pf| plan.type1(&pts, &slices.wavefront(pf / nf, pf % nf)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Sources { lattice, spectra })
}

/// Lattice for scattered sources: aligned to `base` with `pitch`, covering
/// the sources with `margin` spare sites on each side and the output range
/// in lattice units relative to the aligned origin.
pub(crate) struct ScatterFrame {
    /// Lattice coordinate offset of the aligned origin, in output-grid units.
    pub shift: [i64; 2],
    pub lattice: Lattice,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn scatter_frame(
    xy: &[[f64; 2]],
    base: [f64; 2],
    pitch: [f64; 2],
    out_lo: [f64; 2],
    out_hi: [f64; 2],
    margin: [usize; 2],
    torus: bool,
    extra: usize,
    z: f64,
) -> Result<ScatterFrame> {
    if xy.is_empty() {
        return Err(Error::InvalidArgument("relay has no samples".into()));
    }
    let mut axes = [None, None];
    let mut shift = [0i64; 2];
    for a in 0..2 {
        let u: Vec<f64> = xy.iter().map(|p| (p[a] - base[a]) / pitch[a]).collect();
        let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s_lo = lo.floor() as i64 - margin[a] as i64;
        let src = (hi.ceil() as i64 - s_lo) as usize + margin[a] + 1;
        let min_len = if torus { 2 * src + 2 } else { 0 };
        shift[a] = s_lo;
        axes[a] = Some(AxisLayout::new(
            base[a] + s_lo as f64 * pitch[a],
            pitch[a],
            src,
            out_lo[a] - s_lo as f64,
            out_hi[a] - s_lo as f64,
            min_len,
            2 + extra,
        ));
    }
    Ok(ScatterFrame {
        shift,
        lattice: Lattice {
            x: axes[0].unwrap(),
            y: axes[1].unwrap(),
            z,
        },
    })
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// `exp(i 2 pi (kx cx / Lx + ky cy / Ly))` over the spectrum.
fn shift_phases(lattice: &Lattice, center: [i64; 2]) -> Vec<Complex64> {
    let [lx, ly] = lattice.shape();
    let mut out = Vec::with_capacity(lx * ly);
    for ky in 0..ly {
        let py = (signed_index(ky, ly) * center[1]).rem_euclid(ly as i64) as f64 / ly as f64;
        for kx in 0..lx {
            let px = (signed_index(kx, lx) * center[0]).rem_euclid(lx as i64) as f64 / lx as f64;
            out.push(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (px + py)));
        }
    }
    out
}

pub(crate) struct Engine<'a> {
    pub slices: &'a FrequencySlices,
    pub sources: Sources,
    pub options: &'a ReconOptions,
}

impl Engine<'_> {
    /// Reconstruct every plane; returns `[frame][voxel]` in plane order.
    pub fn run(&self, planes: &[PlaneJob], times: &[f64]) -> Result<Vec<Complex64>> {
        let fft = FftPlan::new(&self.sources.lattice.shape());
        let per_plane = planes
            .par_iter()
            .map(|pl| self.plane(pl, &fft, times))
            .collect::<Result<Vec<_>>>()?;
        let total: usize = planes.iter().map(|p| p.positions.len()).sum();
        let mut out = vec![ZERO; times.len() * total];
        let mut offset = 0;
        for (pl, vals) in planes.iter().zip(&per_plane) {
            let nv = pl.positions.len();
            for t in 0..times.len() {
                out[t * total + offset..t * total + offset + nv].copy_from_slice(&vals[t * nv..(t + 1) * nv]);
            }
            offset += nv;
        }
        Ok(out)
    }

    fn plane(&self, pl: &PlaneJob, fft: &FftPlan, times: &[f64]) -> Result<Vec<Complex64>> {
        let lattice = &self.sources.lattice;
        let slices = self.slices;
        let nv = pl.positions.len();
        let nf = slices.n_freq();
        let illum = slices.relay.illumination_positions(&slices.illuminations);
        let r1: Vec<Vec<f64>> = illum
            .iter()
            .map(|x| pl.positions.iter().map(|v| dist(x, v)).collect())
            .collect();
        let shift = match &pl.targets {
            Targets::Window { .. } => None,
            Targets::Scaled { center, .. } | Targets::Points { center, .. } => {
                Some(shift_phases(lattice, *center))
            }
        };
        let norm = 1.0 / lattice.size() as f64;
        let depth = pl.z - lattice.z;
        let mut acc = vec![ZERO; times.len() * nv];
        let mut buf = vec![ZERO; lattice.size()];
        for (f, &w) in slices.frequencies.iter().enumerate() {
            let h = PropagationKernel::new(lattice, depth, w, self.options.falloff)?.spectrum(fft);
            let k = PROPAGATION_SIGN * w / SPEED_OF_LIGHT;
            let frame_w: Vec<Complex64> = times
                .iter()
                .map(|&t| Complex64::from_polar(1.0, PROPAGATION_SIGN * w * t))
                .collect();
            for (p, r1p) in r1.iter().enumerate() {
                let a = &self.sources.spectra[p * nf + f];
                match &shift {
                    Some(s) => {
                        for i in 0..buf.len() {
                            buf[i] = a[i] * h[i] * s[i];
                        }
                    }
                    None => {
                        for i in 0..buf.len() {
                            buf[i] = a[i] * h[i];
                        }
                    }
                }
                let vals = evaluate(&pl.targets, &mut buf, fft, lattice, norm)?;
                for (v, mut val) in vals.into_iter().enumerate() {
                    if self.options.illumination_phase {
                        val *= Complex64::from_polar(1.0, k * r1p[v]);
                    }
                    for (t, fw) in frame_w.iter().enumerate() {
                        acc[t * nv + v] += val * fw;
                    }
                }
            }
        }
        Ok(acc)
    }
}

fn evaluate(
    targets: &Targets,
    buf: &mut [Complex64],
    fft: &FftPlan,
    lattice: &Lattice,
    norm: f64,
) -> Result<Vec<Complex64>> {
    let [lx, ly] = lattice.shape();
    Ok(match targets {
        Targets::Window { lo, n } => {
            fft.inverse(buf);
            let mut out = Vec::with_capacity(n[0] * n[1]);
            for j in 0..n[1] {
                let row = wrap_index(lo[1] + j as i64, ly) * lx;
                for i in 0..n[0] {
                    out.push(buf[row + wrap_index(lo[0] + i as i64, lx)]);
                }
            }
            out
        }
        Targets::Scaled { n, ci, plan, .. } => {
            plan.execute(buf);
            let mut out = Vec::with_capacity(n[0] * n[1]);
            for j in 0..n[1] {
                let row = wrap_index(j as i64 - ci[1] as i64, ly) * lx;
                for i in 0..n[0] {
                    out.push(buf[row + wrap_index(i as i64 - ci[0] as i64, lx)] * norm);
                }
            }
            out
        }
        Targets::Points { coords, plan, .. } => {
            let mut out = plan.type2(buf, coords)?;
            out.iter_mut().for_each(|v| *v *= norm);
            out
        }
    })
}

//! Forward transient simulation of point scatterers and the
//! subsample-then-interpolate pipeline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FrequencySlices, PointList, RelaySampling, TransientMeasurement};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub pos: [f64; 3],
    pub albedo: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub scatterers: Vec<Scatterer>,
    /// Background photon rate per second, added to every bin.
    #[serde(default)]
    pub ambient: f64,
}

impl Scene {
    pub fn point(pos: [f64; 3], albedo: f64) -> Self {
        Self {
            scatterers: vec![Scatterer { pos, albedo }],
            ambient: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub n_bins: usize,
    pub t0: f64,
    /// Illuminate and detect at the same relay point.
    pub confocal: bool,
    /// Divide each return by `r1^2 r2^2`.
    pub falloff: bool,
}

impl SimConfig {
    pub fn new(dt: f64, n_bins: usize) -> Self {
        Self {
            dt,
            n_bins,
            t0: 0.0,
            confocal: false,
            falloff: true,
        }
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Simulate three-bounce returns from every scatterer.
///
/// In confocal mode the illumination list is replaced by the relay points
/// and only pairs with `x_c = x_p` receive photons.
pub fn simulate(
    scene: &Scene,
    relay: &RelaySampling,
    illuminations: &PointList,
    cfg: &SimConfig,
) -> Result<TransientMeasurement> {
    relay.validate()?;
    if cfg.n_bins < 2 || !(cfg.dt > 0.0) || !cfg.t0.is_finite() {
        return Err(Error::InvalidArgument(
            "simulation needs at least two bins and dt > 0".into(),
        ));
    }
    if !(scene.ambient >= 0.0) {
        return Err(Error::InvalidArgument("ambient rate must be non-negative".into()));
    }
    for s in &scene.scatterers {
        if !(s.albedo >= 0.0) || s.pos.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scatterer at {:?} has invalid albedo {}",
                s.pos, s.albedo
            )));
        }
    }
    let detect = relay.positions();
    let (illum_list, illum) = if cfg.confocal {
        let pts = match relay {
            RelaySampling::NonPlanar { .. } => PointList::spatial(detect.clone())?,
            _ => PointList::planar(detect.iter().map(|p| [p[0], p[1]]).collect())?,
        };
        (pts, detect.clone())
    } else {
        (illuminations.clone(), relay.illumination_positions(illuminations))
    };
    let (np, nc, nb) = (illum.len(), detect.len(), cfg.n_bins);

    let window_end = cfg.t0 + (nb - 1) as f64 * cfg.dt;
    for (i, s) in scene.scatterers.iter().enumerate() {
        if s.albedo == 0.0 {
            continue;
        }
        for (p, xp) in illum.iter().enumerate() {
            let r1 = dist(xp, &s.pos);
            let pairs: Box<dyn Iterator<Item = &[f64; 3]>> = if cfg.confocal {
                Box::new(std::iter::once(&detect[p]))
            } else {
                Box::new(detect.iter())
            };
            for xc in pairs {
                let t = (r1 + dist(&s.pos, xc)) / SPEED_OF_LIGHT;
                if t < cfg.t0 || t >= window_end {
                    return Err(Error::ScattererOutsideWindow {
                        index: i,
                        position: s.pos,
                        detail: format!(
                            "arrival {t:.4e} s, window [{:.4e}, {:.4e}) s",
                            cfg.t0, window_end
                        ),
                    });
                }
            }
        }
    }

    let background = scene.ambient * cfg.dt;
    let mut hist = vec![0.0; np * nc * nb];
    hist.par_chunks_mut(nb).enumerate().for_each(|(row, h)| {
        let (p, c) = (row / nc, row % nc);
        if cfg.confocal && p != c {
            return;
        }
        for s in &scene.scatterers {
            let r1 = dist(&illum[p], &s.pos);
            let r2 = dist(&s.pos, &detect[c]);
            let amp = if cfg.falloff {
                s.albedo / (r1 * r1 * r2 * r2)
            } else {
                s.albedo
            };
            let x = ((r1 + r2) / SPEED_OF_LIGHT - cfg.t0) / cfg.dt;
            let b = x.floor();
            let frac = x - b;
            let b = b as usize;
            h[b] += amp * (1.0 - frac);
            if b + 1 < nb {
                h[b + 1] += amp * frac;
            }
        }
        if background > 0.0 {
            h.iter_mut().for_each(|v| *v += background);
        }
    });
    TransientMeasurement::new(relay.clone(), illum_list, nb, cfg.dt, cfg.t0, hist)
}

/// Replace every bin by a Poisson draw with mean `scale * value`.
///
/// Each histogram row draws from its own stream of a generator seeded by
/// `seed`, so the result does not depend on scheduling.
pub fn add_poisson_noise(m: &TransientMeasurement, scale: f64, seed: u64) -> Result<TransientMeasurement> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "exposure scale must be positive, got {scale}"
        )));
    }
    let mut out = m.clone();
    out.histograms
        .par_chunks_mut(m.n_bins)
        .enumerate()
        .for_each(|(row, h)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(row as u64);
            for v in h.iter_mut() {
                let mean = *v * scale;
                *v = if mean > 0.0 {
                    Poisson::new(mean).map(|d| d.sample(&mut rng)).unwrap_or(mean)
                } else {
                    0.0
                };
            }
        });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    Linear,
}

/// A measurement rebuilt on its full grid from a strided subset.
#[derive(Debug, Clone)]
pub struct Subsampled {
    pub slices: FrequencySlices,
    pub stride: usize,
    /// Central wavelength suited to the retained sampling, `2 n spacing`.
    pub recommended_lambda_c: f64,
}

fn retained(len: usize, n: usize) -> Vec<usize> {
    let mut keep: Vec<usize> = (0..len).step_by(n).collect();
    if *keep.last().unwrap() != len - 1 {
        keep.push(len - 1);
    }
    keep
}

/// For each full-grid index, the bracketing retained indices and the
/// weight of the upper one.
fn brackets(len: usize, keep: &[usize], scheme: Interpolation) -> Vec<(usize, usize, f64)> {
    (0..len)
        .map(|i| {
            let hi = keep.partition_point(|&k| k < i).min(keep.len() - 1);
            if keep[hi] == i || hi == 0 {
                return (keep[hi], keep[hi], 0.0);
            }
            let (a, b) = (keep[hi - 1], keep[hi]);
            let t = (i - a) as f64 / (b - a) as f64;
            match scheme {
                Interpolation::Linear => (a, b, t),
                Interpolation::Nearest => {
                    if t > 0.5 {
                        (b, b, 0.0)
                    } else {
                        (a, a, 0.0)
                    }
                }
            }
        })
        .collect()
}

/// Keep every `n`-th relay sample per axis (plus the last row and column)
/// and interpolate the frequency coefficients back onto the full grid.
pub fn subsample_interpolate(slices: &FrequencySlices, n: usize, scheme: Interpolation) -> Result<Subsampled> {
    let g = match &slices.relay {
        RelaySampling::Uniform(g) => *g,
        other => {
            return Err(Error::Incompatible {
                algorithm: "subsample_interpolate",
                reason: format!("needs a uniform relay, got {}", other.kind_name()),
            })
        }
    };
    if n < 2 {
        return Err(Error::InvalidArgument(format!("stride must be at least 2, got {n}")));
    }
    if n >= g.nx || n >= g.ny {
        return Err(Error::InvalidArgument(format!(
            "stride {n} leaves too few samples of a {}x{} grid",
            g.nx, g.ny
        )));
    }
    let bx = brackets(g.nx, &retained(g.nx, n), scheme);
    let by = brackets(g.ny, &retained(g.ny, n), scheme);
    let nf = slices.n_freq();
    let nc = g.len();
    let mut out = slices.clone();
    out.coefficients
        .par_chunks_mut(nc * nf)
        .enumerate()
        .for_each(|(p, block)| {
            let at = |c: usize, f: usize| slices.coefficients[(p * nc + c) * nf + f];
            for j in 0..g.ny {
                let (ja, jb, ty) = by[j];
                for i in 0..g.nx {
                    let (ia, ib, tx) = bx[i];
                    let c = i + g.nx * j;
                    for f in 0..nf {
                        let v00 = at(ia + g.nx * ja, f);
                        let v10 = at(ib + g.nx * ja, f);
                        let v01 = at(ia + g.nx * jb, f);
                        let v11 = at(ib + g.nx * jb, f);
                        let lo = v00 * (1.0 - tx) + v10 * tx;
                        let hi = v01 * (1.0 - tx) + v11 * tx;
                        block[c * nf + f] = lo * (1.0 - ty) + hi * ty;
                    }
                }
            }
        });
    Ok(Subsampled {
        slices: out,
        stride: n,
        recommended_lambda_c: 2.0 * n as f64 * g.dx.max(g.dy),
    })
}

/// Indices of relay samples kept by [`subsample_interpolate`] with stride `n`.
pub fn retained_samples(nx: usize, ny: usize, n: usize) -> Vec<usize> {
    let (kx, ky) = (retained(nx, n.max(1)), retained(ny, n.max(1)));
    ky.iter()
        .flat_map(|&j| kx.iter().map(move |&i| i + nx * j))
        .collect()
}

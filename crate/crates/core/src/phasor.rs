//! Phasor-field illumination kernel, transient-to-frequency conversion and
//! the closed-form sampling, resolution and volume calculators.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{FrequencySlices, TransientMeasurement};
use crate::{Complex64, PROPAGATION_SIGN, SPEED_OF_LIGHT};

pub const DEFAULT_THRESHOLD: f64 = 0.01;

/// Gaussian band-pass kernel restricted to the DFT bins of a time axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasorKernel {
    pub lambda_c: f64,
    pub omega_c: f64,
    /// Standard deviation of the Gaussian in rad/s.
    pub sigma: f64,
    pub threshold: f64,
    pub n_bins: usize,
    pub dt: f64,
    /// DFT bin index of each retained frequency.
    pub bins: Vec<usize>,
    pub frequencies: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PhasorKernel {
    /// Kernel centered at wavelength `lambda_c` for a time axis of `n_bins`
    /// bins of width `dt`. Bins `0..=n_bins/2` whose weight reaches
    /// `threshold` are retained.
    pub fn new(lambda_c: f64, threshold: f64, n_bins: usize, dt: f64) -> Result<Self> {
        if !(lambda_c > 0.0 && lambda_c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "central wavelength must be positive, got {lambda_c}"
            )));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold must lie in (0, 1), got {threshold}"
            )));
        }
        if n_bins == 0 || !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument("time axis must be non-empty with dt > 0".into()));
        }
        let omega_c = 2.0 * PI * SPEED_OF_LIGHT / lambda_c;
        let sigma = omega_c / 5.0;
        let mut k = Self {
            lambda_c,
            omega_c,
            sigma,
            threshold,
            n_bins,
            dt,
            bins: Vec::new(),
            frequencies: Vec::new(),
            weights: Vec::new(),
        };
        let step = 2.0 * PI / (n_bins as f64 * dt);
        for b in 0..=n_bins / 2 {
            let w = b as f64 * step;
            let g = k.weight(w);
            if g >= threshold {
                k.bins.push(b);
                k.frequencies.push(w);
                k.weights.push(g);
            }
        }
        if k.bins.is_empty() {
            return Err(Error::EmptyKernel { threshold });
        }
        Ok(k)
    }

    /// Gaussian weight at angular frequency `omega`.
    pub fn weight(&self, omega: f64) -> f64 {
        let d = omega - self.omega_c;
        (-d * d / (2.0 * self.sigma * self.sigma)).exp()
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Shortest wavelength among the retained frequencies.
    pub fn shortest_wavelength(&self) -> f64 {
        let w = self.frequencies.last().copied().unwrap_or(self.omega_c);
        2.0 * PI * SPEED_OF_LIGHT / w
    }
}

/// Shorthand for [`PhasorKernel::new`].
pub fn build_kernel(lambda_c: f64, threshold: f64, n_bins: usize, dt: f64) -> Result<PhasorKernel> {
    PhasorKernel::new(lambda_c, threshold, n_bins, dt)
}

/// Project every histogram onto the kernel's retained frequencies.
///
/// Coefficient = weight(w) * sum_b H[b] exp(-s i w (t0 + b dt)).
pub fn to_frequency(m: &TransientMeasurement, k: &PhasorKernel) -> Result<FrequencySlices> {
    if k.n_bins != m.n_bins || (k.dt - m.dt).abs() > 1e-12 * m.dt {
        return Err(Error::InvalidArgument(format!(
            "kernel built for {} bins of {} s, measurement has {} bins of {} s",
            k.n_bins, k.dt, m.n_bins, m.dt
        )));
    }
    let t = m.n_bins;
    let nf = k.len();
    let fft = FftPlanner::new().plan_fft_forward(t);
    let offsets: Vec<Complex64> = k
        .frequencies
        .iter()
        .zip(&k.weights)
        .map(|(&w, &g)| Complex64::from_polar(g, -PROPAGATION_SIGN * w * m.t0))
        .collect();
    let mut coefficients = vec![Complex64::new(0.0, 0.0); m.n_illum() * m.n_detect() * nf];
    coefficients
        .par_chunks_mut(nf)
        .zip(m.histograms.par_chunks(t))
        .for_each_init(
            || vec![Complex64::new(0.0, 0.0); t],
            |buf, (out, hist)| {
                for (b, h) in buf.iter_mut().zip(hist) {
                    *b = Complex64::new(*h, 0.0);
                }
                fft.process(buf);
                for (f, o) in out.iter_mut().enumerate() {
                    let bin = k.bins[f];
                    let v = if PROPAGATION_SIGN > 0.0 {
                        buf[bin]
                    } else {
                        buf[(t - bin) % t]
                    };
                    *o = v * offsets[f];
                }
            },
        );
    FrequencySlices::new(
        m.relay.clone(),
        m.illuminations.clone(),
        k.frequencies.clone(),
        coefficients,
    )
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// Lateral resolution `1.22 lambda z / D` of an aperture of width `aperture`.
pub fn lateral_resolution(lambda_c: f64, z: f64, aperture: f64) -> Result<f64> {
    positive("wavelength", lambda_c)?;
    positive("depth", z)?;
    positive("aperture", aperture)?;
    Ok(1.22 * lambda_c * z / aperture)
}

/// How coarsely the relay may be sampled laterally for a given geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingReport {
    /// Required sampling interval along depth.
    pub lambda_sz: f64,
    /// Largest admissible lateral interval, `ratio * lambda_sz`.
    pub lambda_sx: f64,
    /// `2|z| / |x|`; infinite for a zero lateral offset.
    pub ratio: f64,
    pub confocal: bool,
}

impl SamplingReport {
    /// Whether a lateral downsampling factor `d` satisfies `d < ratio`.
    pub fn admits(&self, d: f64) -> bool {
        d < self.ratio
    }

    /// Largest admissible integer factor, `None` when every factor is.
    pub fn max_integer_factor(&self) -> Option<usize> {
        if self.ratio.is_infinite() {
            None
        } else {
            Some((self.ratio.ceil() as usize).saturating_sub(1))
        }
    }
}

/// Sampling limits for a hidden point at offset (`x_off`, `z_off`) from the relay.
pub fn sampling_report(x_off: f64, z_off: f64, lambda_star: f64, confocal: bool) -> Result<SamplingReport> {
    if !(x_off.is_finite() && z_off.is_finite()) {
        return Err(Error::InvalidArgument("offsets must be finite".into()));
    }
    positive("shortest wavelength", lambda_star)?;
    let ratio = if x_off == 0.0 {
        f64::INFINITY
    } else {
        2.0 * z_off.abs() / x_off.abs()
    };
    let lambda_sz = if confocal { lambda_star / 4.0 } else { lambda_star / 2.0 };
    Ok(SamplingReport {
        lambda_sz,
        lambda_sx: ratio * lambda_sz,
        ratio,
        confocal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrustumVolumes {
    pub frustum: f64,
    pub cuboid: f64,
    pub difference: f64,
    /// `difference / cuboid` in percent.
    pub increase_percent: f64,
}

/// Volume of a frustum whose cross-section at height `z` above `z_in` is
/// `(x_in + z/alpha) * (y_in + z/beta)`, compared with the cuboid of the
/// same base and height.
pub fn frustum_volume(x_in: f64, y_in: f64, z_in: f64, z_out: f64, alpha: f64, beta: f64) -> Result<FrustumVolumes> {
    positive("x_in", x_in)?;
    positive("y_in", y_in)?;
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    if !(z_out > z_in) || !z_in.is_finite() || !z_out.is_finite() {
        return Err(Error::InvalidArgument("z_out must exceed z_in".into()));
    }
    let anti = |z: f64| {
        z * x_in * y_in + z * z / 2.0 * (x_in / beta + y_in / alpha) + z * z * z / (3.0 * alpha * beta)
    };
    let h = z_out - z_in;
    let frustum = (anti(h) - anti(0.0)).abs();
    let cuboid = x_in * y_in * h;
    let difference = frustum - cuboid;
    Ok(FrustumVolumes {
        frustum,
        cuboid,
        difference,
        increase_percent: 100.0 * difference / cuboid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleBounds {
    /// Largest voxel pitch that still resolves `lateral_resolution / 2`.
    pub max_voxel: f64,
    /// Smallest scale factor `2 delta_in / dx`.
    pub min_alpha: f64,
}

pub fn scale_bounds(delta_in: f64, lambda_c: f64, aperture: f64, z: f64) -> Result<ScaleBounds> {
    positive("input pitch", delta_in)?;
    let dx = lateral_resolution(lambda_c, z, aperture)?;
    Ok(ScaleBounds {
        max_voxel: dx / 2.0,
        min_alpha: 2.0 * delta_in / dx,
    })
}

/// Data reduction from keeping every `d`-th sample per axis of an `n x n`
/// relay and `f` complex frequencies instead of `t` time bins.
pub fn compression_factor(n: usize, d: usize, t: usize, f: usize) -> Result<f64> {
    if n == 0 || d == 0 || t == 0 || f == 0 {
        return Err(Error::InvalidArgument("compression inputs must be positive".into()));
    }
    let kept = n / d;
    if kept == 0 {
        return Err(Error::InvalidArgument(format!("factor {d} leaves no samples of {n}")));
    }
    let n = n as f64;
    let kept = kept as f64;
    Ok(n * n * t as f64 / (kept * kept * 2.0 * f as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PointList, RelaySampling, UniformGrid2D};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn weight_peak_and_one_sigma() {
        let k = PhasorKernel::new(0.04, 0.01, 4096, 16e-12).unwrap();
        assert_eq!(k.weight(k.omega_c), 1.0);
        assert!(close(k.weight(k.omega_c + k.sigma), (-0.5f64).exp(), 1e-15));
        assert!(close(k.weight(k.omega_c - k.sigma), 0.6065306597126334, 1e-15));
    }

    #[test]
    fn retained_count_is_a_tenth_order() {
        let k = PhasorKernel::new(0.04, 0.01, 4096, 16e-12).unwrap();
        let ratio = k.len() as f64 / 4096.0;
        assert!(ratio > 0.01 && ratio < 1.0, "F/T = {ratio}");
        assert!(k.weights.iter().all(|&w| (0.01..=1.0).contains(&w)));
        assert!(k.shortest_wavelength() < 0.04);
    }

    #[test]
    fn empty_kernel_is_an_error() {
        // 1 ns bins cannot represent a 4 cm wavelength
        assert!(matches!(
            PhasorKernel::new(0.04, 0.01, 64, 1e-9),
            Err(Error::EmptyKernel { .. })
        ));
    }

    fn measurement(hist: Vec<f64>, n_bins: usize, dt: f64, t0: f64) -> TransientMeasurement {
        let relay = RelaySampling::Uniform(UniformGrid2D::new(1, 1, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap());
        let illum = PointList::planar(vec![[0.0, 0.0]]).unwrap();
        TransientMeasurement::new(relay, illum, n_bins, dt, t0, hist).unwrap()
    }

    #[test]
    fn zero_histograms_give_zero() {
        let k = PhasorKernel::new(0.08, 0.01, 256, 20e-12).unwrap();
        let s = to_frequency(&measurement(vec![0.0; 256], 256, 20e-12, 0.0), &k).unwrap();
        assert!(s.coefficients.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn shifted_delta_is_a_phasor() {
        let (t, dt, t0) = (256, 20e-12, 1.5e-9);
        let k = PhasorKernel::new(0.08, 0.01, t, dt).unwrap();
        let mut h = vec![0.0; t];
        h[37] = 1.0;
        let s = to_frequency(&measurement(h, t, dt, t0), &k).unwrap();
        for (f, &w) in k.frequencies.iter().enumerate() {
            let want = Complex64::from_polar(k.weights[f], -w * (t0 + 37.0 * dt));
            assert!((s.coefficients[f] - want).norm() < 1e-9);
        }
    }

    #[test]
    fn two_deltas_match_direct_sum() {
        let (t, dt) = (200, 20e-12);
        let k = PhasorKernel::new(0.08, 0.01, t, dt).unwrap();
        let mut h = vec![0.0; t];
        h[10] = 2.5;
        h[151] = 0.75;
        let s = to_frequency(&measurement(h.clone(), t, dt, 0.0), &k).unwrap();
        for (f, &w) in k.frequencies.iter().enumerate() {
            let direct: Complex64 = h
                .iter()
                .enumerate()
                .map(|(b, &v)| Complex64::from_polar(v, -w * b as f64 * dt))
                .sum::<Complex64>()
                * k.weights[f];
            assert!((s.coefficients[f] - direct).norm() < 1e-10 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn resolution_examples() {
        assert!(close(lateral_resolution(0.04, 1.8, 1.8).unwrap(), 0.0488, 1e-12));
        assert!(close(lateral_resolution(0.04, 3.0, 1.8).unwrap(), 0.0813333333, 1e-9));
        assert!(close(
            lateral_resolution(0.04, 3.6, 1.8).unwrap(),
            2.0 * lateral_resolution(0.04, 1.8, 1.8).unwrap(),
            1e-15
        ));
        assert!(lateral_resolution(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn sampling_examples() {
        let r = sampling_report(2.0, 1.0, 0.04, false).unwrap();
        assert_eq!(r.ratio, 1.0);
        assert!(!r.admits(1.0));
        assert_eq!(r.max_integer_factor(), Some(0));
        let r = sampling_report(1.0, 2.5, 0.04, false).unwrap();
        assert_eq!(r.ratio, 5.0);
        assert!(r.admits(4.0) && !r.admits(5.0));
        assert_eq!(r.max_integer_factor(), Some(4));
        assert_eq!(r.lambda_sz, 0.02);
        let c = sampling_report(1.0, 2.5, 0.04, true).unwrap();
        assert_eq!(c.ratio, r.ratio);
        assert_eq!(c.lambda_sz, r.lambda_sz / 2.0);
        let u = sampling_report(0.0, 1.0, 0.04, false).unwrap();
        assert!(u.ratio.is_infinite() && u.admits(1e9));
        assert_eq!(u.max_integer_factor(), None);
    }

    #[test]
    fn frustum_worked_example() {
        let v = frustum_volume(4.0, 4.0, 0.0, 4.0, 0.5, 0.5).unwrap();
        assert!(close(v.frustum, 277.3333333, 1e-6));
        assert_eq!(v.cuboid, 64.0);
        assert!(close(v.difference, 213.3333333, 1e-6));
        assert!(close(v.increase_percent, 333.3333333, 1e-6));
    }

    #[test]
    fn frustum_large_scale_tends_to_cuboid() {
        let v = frustum_volume(2.0, 3.0, 1.0, 2.0, 1e9, 1e9).unwrap();
        assert!(close(v.frustum, 6.0, 1e-6));
    }

    #[test]
    fn frustum_asymmetric_matches_trapezoid() {
        let (x, y, a, b, h) = (1.5, 0.7, 0.5, 1.0, 3.0);
        let n = 10_000;
        let area = |z: f64| (x + z / a) * (y + z / b);
        let step = h / n as f64;
        let mut acc = 0.5 * (area(0.0) + area(h));
        for i in 1..n {
            acc += area(i as f64 * step);
        }
        acc *= step;
        let v = frustum_volume(x, y, 2.0, 2.0 + h, a, b).unwrap();
        assert!((v.frustum - acc).abs() / acc < 1e-6);
    }

    #[test]
    fn scale_bound_examples() {
        let s = scale_bounds(0.01, 0.04, 1.8, 3.0).unwrap();
        assert!(close(s.max_voxel, 0.0406667, 1e-6));
        assert!(close(s.min_alpha, 0.2459, 1e-4));
        let d = s.max_voxel;
        assert!(close(scale_bounds(d, 0.04, 1.8, 3.0).unwrap().min_alpha, 1.0, 1e-12));
        let half = scale_bounds(0.01, 0.04, 1.8, 1.5).unwrap();
        assert!(close(half.max_voxel, s.max_voxel / 2.0, 1e-15));
    }

    #[test]
    fn compression_examples() {
        assert_eq!(compression_factor(190, 5, 4090, 409).unwrap(), 125.0);
        assert_eq!(compression_factor(64, 1, 100, 50).unwrap(), 1.0);
        assert!(close(compression_factor(64, 2, 2048, 200).unwrap(), 20.48, 1e-12));
    }

    proptest! {
        #[test]
        fn weights_symmetric_about_center(d in 0.0f64..3.0) {
            let k = PhasorKernel::new(0.06, 0.01, 512, 20e-12).unwrap();
            let a = k.weight(k.omega_c + d * k.sigma);
            let b = k.weight(k.omega_c - d * k.sigma);
            prop_assert!((a - b).abs() < 1e-15);
        }

        #[test]
        fn ratio_scale_invariant(x in 0.01f64..5.0, z in 0.01f64..5.0, s in 0.1f64..10.0) {
            let a = sampling_report(x, z, 0.04, false).unwrap().ratio;
            let b = sampling_report(s * x, s * z, 0.04, false).unwrap().ratio;
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn frustum_not_smaller_than_cuboid(
            x in 0.1f64..5.0, y in 0.1f64..5.0, h in 0.1f64..5.0, a in 0.05f64..1.0, b in 0.05f64..1.0,
        ) {
            let v = frustum_volume(x, y, 0.0, h, a, b).unwrap();
            prop_assert!(v.difference >= 0.0);
        }

        #[test]
        fn to_frequency_linear(
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            h1 in proptest::collection::vec(0.0f64..10.0, 128),
            h2 in proptest::collection::vec(0.0f64..10.0, 128),
        ) {
            let (a, b) = (a.abs(), b.abs());
            let k = PhasorKernel::new(0.08, 0.01, 128, 20e-12).unwrap();
            let c1 = to_frequency(&measurement(h1.clone(), 128, 20e-12, 0.0), &k).unwrap();
            let c2 = to_frequency(&measurement(h2.clone(), 128, 20e-12, 0.0), &k).unwrap();
            let mix: Vec<f64> = h1.iter().zip(&h2).map(|(x, y)| a * x + b * y).collect();
            let c = to_frequency(&measurement(mix, 128, 20e-12, 0.0), &k).unwrap();
            for i in 0..c.coefficients.len() {
                let want = c1.coefficients[i] * a + c2.coefficients[i] * b;
                prop_assert!((c.coefficients[i] - want).norm() <= 1e-10 * (1.0 + want.norm()));
            }
        }
    }
}

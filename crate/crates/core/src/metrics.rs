//! Image comparison: circular alignment, SSIM and normalized correlation.

use crate::error::{Error, Result};
use crate::spectral::{signed_index, FftPlan};
use crate::Complex64;

fn check_shape(a: &[f64], b: &[f64], nx: usize, ny: usize) -> Result<()> {
    if a.len() != nx * ny || b.len() != nx * ny {
        return Err(Error::InvalidArgument(format!(
            "images of {} and {} pixels do not match shape {nx}x{ny}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("image"));
    }
    Ok(())
}

/// An image shifted onto a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub image: Vec<f64>,
    /// Circular shift applied, in pixels along x and y.
    pub shift: [i64; 2],
}

/// Circularly shift `image` by the offset that maximises its cross-correlation
/// with `reference`. Among equal maxima the smallest shift wins, then the
/// lexicographically smallest.
pub fn align_by_correlation(image: &[f64], reference: &[f64], nx: usize, ny: usize) -> Result<Aligned> {
    check_shape(image, reference, nx, ny)?;
    let fft = FftPlan::new(&[nx, ny]);
    let mut a: Vec<Complex64> = image.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut b: Vec<Complex64> = reference.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut a);
    fft.forward(&mut b);
    // corr[s] = sum_x ref[x] image[x - s]
    let mut c: Vec<Complex64> = b.iter().zip(&a).map(|(r, i)| r * i.conj()).collect();
    fft.inverse(&mut c);
    let peak = c.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * c.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut best: Option<(i64, i64, i64)> = None;
    for j in 0..ny {
        for i in 0..nx {
            if c[i + nx * j].re < peak - tol {
                continue;
            }
            let (sx, sy) = (signed_index(i, nx), signed_index(j, ny));
            let key = (sx * sx + sy * sy, sx, sy);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
    }
    let (_, sx, sy) = best.expect("non-empty image");
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let ti = (i as i64 + sx).rem_euclid(nx as i64) as usize;
            let tj = (j as i64 + sy).rem_euclid(ny as i64) as usize;
            out[ti + nx * tj] = image[i + nx * j];
        }
    }
    Ok(Aligned {
        image: out,
        shift: [sx, sy],
    })
}

const SSIM_WINDOW: usize = 8;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

/// Mean structural similarity over all 8x8 windows, with the dynamic range
/// taken from `reference` (max minus min). Not symmetric in its arguments;
/// use [`ssim_with_range`] for a fixed range.
pub fn ssim(image: &[f64], reference: &[f64], nx: usize, ny: usize) -> Result<f64> {
    check_shape(image, reference, nx, ny)?;
    let hi = reference.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = reference.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::InvalidArgument("SSIM reference image is constant".into()));
    }
    ssim_with_range(image, reference, nx, ny, hi - lo)
}

/// Mean structural similarity over all 8x8 windows for dynamic range `range`.
pub fn ssim_with_range(image: &[f64], reference: &[f64], nx: usize, ny: usize, range: f64) -> Result<f64> {
    check_shape(image, reference, nx, ny)?;
    if nx < SSIM_WINDOW || ny < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {nx}x{ny}"
        )));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::InvalidArgument(format!("dynamic range must be positive, got {range}")));
    }
    let c1 = (K1 * range).powi(2);
    let c2 = (K2 * range).powi(2);
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=ny - SSIM_WINDOW {
        for x0 in 0..=nx - SSIM_WINDOW {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in y0..y0 + SSIM_WINDOW {
                for x in x0..x0 + SSIM_WINDOW {
                    let a = image[x + nx * y];
                    let b = reference[x + nx * y];
                    sa += a;
                    sb += b;
                    saa += a * a;
                    sbb += b * b;
                    sab += a * b;
                }
            }
            let (ma, mb) = (sa / n, sb / n);
            let va = (saa / n - ma * ma).max(0.0);
            let vb = (sbb / n - mb * mb).max(0.0);
            let cov = sab / n - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Pearson correlation of two equally sized real arrays.
pub fn ncc(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "cannot correlate arrays of {} and {} values",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x - ma, y - mb);
        sab += u * v;
        saa += u * u;
        sbb += v * v;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::InvalidArgument("correlation of a constant array".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Pearson correlation of the magnitudes of two complex fields.
pub fn ncc_magnitude(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    let ma: Vec<f64> = a.iter().map(|c| c.norm()).collect();
    let mb: Vec<f64> = b.iter().map(|c| c.norm()).collect();
    ncc(&ma, &mb)
}

//! Padded lattice layouts for linear convolution by FFT.
//!
//! Sources occupy lattice indices `0..src` along an axis. Outputs are wanted
//! at lattice coordinates in `[o_lo, o_hi]`. With `q_lo = floor(o_lo) - (src - 1)`
//! the kernel array holds `G(q * pitch)` at position `q mod len` for
//! `q` in `[q_lo, q_lo + len)`, and the circular convolution equals the
//! linear one at every output index in `[floor(o_lo), floor(o_lo) + len - src]`.

use crate::error::{Error, Result};
use crate::spectral::fast_len;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisLayout {
    /// Physical position of lattice index 0.
    pub base: f64,
    pub pitch: f64,
    /// Padded transform length.
    pub len: usize,
    /// Number of source lattice sites.
    pub src: usize,
    /// Smallest kernel offset held in the kernel array.
    pub q_lo: i64,
    pub o_lo: f64,
    pub o_hi: f64,
}

impl AxisLayout {
    /// `min_len` forces a minimum transform length; `margin` adds slack
    /// beyond the linear-convolution requirement.
    pub fn new(base: f64, pitch: f64, src: usize, o_lo: f64, o_hi: f64, min_len: usize, margin: usize) -> Self {
        let lo = o_lo.floor() as i64;
        let hi = o_hi.ceil() as i64;
        let need = (hi - lo) as usize + src + margin;
        let len = fast_len(need.max(min_len).max(1));
        Self {
            base,
            pitch,
            len,
            src,
            q_lo: lo - (src as i64 - 1),
            o_lo,
            o_hi,
        }
    }

    /// Lattice coordinate of a physical position.
    pub fn coord(&self, x: f64) -> f64 {
        (x - self.base) / self.pitch
    }

    /// Integer center of the output range.
    pub fn center(&self) -> i64 {
        ((self.o_lo + self.o_hi) / 2.0).round() as i64
    }
}

/// Two axis layouts and the height of the source plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub x: AxisLayout,
    pub y: AxisLayout,
    pub z: f64,
}

impl Lattice {
    pub fn shape(&self) -> [usize; 2] {
        [self.x.len, self.y.len]
    }

    pub fn size(&self) -> usize {
        self.x.len * self.y.len
    }
}

/// Lattice index of `x`, which must lie on the lattice within a small tolerance.
pub fn lattice_index(x: f64, base: f64, pitch: f64, what: &str) -> Result<i64> {
    let t = (x - base) / pitch;
    let r = t.round();
    if (t - r).abs() > 1e-6 {
        return Err(Error::InvalidGrid(format!(
            "{what} at {x} is not on the lattice with origin {base} and pitch {pitch}"
        )));
    }
    Ok(r as i64)
}

/// Require two pitches to agree to relative precision 1e-9.
pub fn same_pitch(a: f64, b: f64, what: &str) -> Result<()> {
    if (a - b).abs() > 1e-9 * a.abs().max(b.abs()) {
        return Err(Error::InvalidGrid(format!(
            "{what}: pitch {a} differs from relay pitch {b}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_window_covers_outputs() {
        for (src, lo, hi) in [(8, 0.0, 7.0), (16, -5.0, 20.0), (3, 2.5, 9.2), (1, 0.0, 0.0)] {
            let a = AxisLayout::new(0.0, 1.0, src, lo, hi, 0, 0);
            let first = a.q_lo + src as i64 - 1;
            let last = a.q_lo + a.len as i64 - 1;
            assert!(first <= lo.floor() as i64);
            assert!(last >= hi.ceil() as i64);
        }
    }

    #[test]
    fn lattice_index_checks_alignment() {
        assert_eq!(lattice_index(0.3, 0.1, 0.1, "p").unwrap(), 2);
        assert!(lattice_index(0.35, 0.1, 0.1, "p").is_err());
        assert!(same_pitch(0.1, 0.1 + 1e-12, "g").is_ok());
        assert!(same_pitch(0.1, 0.11, "g").is_err());
    }
}

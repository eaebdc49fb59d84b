//! Fourier machinery: FFT helpers, the scaled FFT and non-uniform FFTs.

pub mod fft;
pub mod nufft;
pub mod sfft;

pub use fft::{dft_2d, fast_len, fft_2d, ifft_2d, signed_index, wrap_index, FftPlan};
pub use nufft::{nufft1, nufft2, NufftPlan, DEFAULT_EPS};
pub use sfft::{sfft_2d, ChirpAxis, SfftPlan};

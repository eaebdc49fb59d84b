//! Scaled DFT through chirp factorisation, checked against the literal sum.

use std::f64::consts::PI;

use nlos::spectral::{fft_2d, sfft_2d, signed_index};
use nlos::Complex64;

fn main() -> nlos::Result<()> {
    let (m, n) = (16, 8);
    let u: Vec<Complex64> = (0..m * n)
        .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
        .collect();

    for alpha in [0.25, 0.5, 0.9, 1.0] {
        let fast = sfft_2d(&u, m, n, alpha, alpha)?;
        let mut err = 0.0f64;
        for q in 0..n {
            for p in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    for i in 0..m {
                        let ph = -2.0 * PI * alpha
                            * (signed_index(i, m) as f64 * signed_index(p, m) as f64 / m as f64
                                + signed_index(j, n) as f64 * signed_index(q, n) as f64 / n as f64);
                        acc += u[i + m * j] * Complex64::from_polar(1.0, ph);
                    }
                }
                err = err.max((acc - fast[p + m * q]).norm());
            }
        }
        println!("alpha {alpha:<4}: max deviation from direct sum {err:.2e}");
    }

    let unit = sfft_2d(&u, m, n, 1.0, 1.0)?;
    let plain = fft_2d(&u, m, n);
    let d = unit.iter().zip(&plain).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("alpha 1 vs FFT: {d:.2e}");
    Ok(())
}

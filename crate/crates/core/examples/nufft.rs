//! Type-1 and type-2 non-uniform FFTs against direct sums.

use nlos::oracle::{direct_nudft, direct_nudft_adjoint};
use nlos::spectral::NufftPlan;
use nlos::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> nlos::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pi = std::f64::consts::PI;
    let points: Vec<[f64; 2]> = (0..200)
        .map(|_| [rng.random_range(-pi..pi), rng.random_range(-pi..pi)])
        .collect();
    let weights: Vec<Complex64> = (0..200)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let modes = [24, 20];

    for eps in [1e-4, 1e-6, 1e-8] {
        let plan = NufftPlan::new(modes, eps)?;
        let f = plan.type1(&points, &weights)?;
        let want = direct_nudft(&points, &weights, modes);
        let scale = want.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let e1 = f.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;

        let back = plan.type2(&want, &points)?;
        let want2 = direct_nudft_adjoint(&want, modes, &points);
        let scale2 = want2.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let e2 = back.iter().zip(&want2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale2;
        println!("eps {eps:.0e}: type-1 {e1:.2e}, type-2 {e2:.2e}, {} fine points per axis", plan.fine_shape()[0]);
    }
    Ok(())
}

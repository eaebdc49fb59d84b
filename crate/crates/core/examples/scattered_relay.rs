//! Relay samples at arbitrary positions on the wall plane, reconstructed
//! onto a cuboid (type-1 NUFFT) and onto a handful of chosen voxels
//! (type-1 and type-2).

use nlos::geometry::{ExplicitVoxels, PointList, RelaySampling, UniformGrid3D};
use nlos::metrics::ncc_magnitude;
use nlos::oracle::backproject;
use nlos::phasor::{to_frequency, PhasorKernel};
use nlos::reconstruct::{nursd1, nursd3, ReconOptions};
use nlos::sim::{simulate, Scene, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> nlos::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pts: Vec<[f64; 2]> = (0..400)
        .map(|_| [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)])
        .collect();
    let relay = RelaySampling::non_uniform(pts, 0.0)?;
    let target = [-0.05, 0.08, 0.5];
    let m = simulate(
        &Scene::point(target, 1.0),
        &relay,
        &PointList::planar(vec![[0.0, 0.0]])?,
        &SimConfig::new(20e-12, 384),
    )?;
    let slices = to_frequency(&m, &PhasorKernel::new(0.1, 0.01, m.n_bins, m.dt)?)?;

    let grid = UniformGrid3D::new(16, 16, 6, 0.04, 0.04, 0.03, -0.3, -0.3, 0.42)?;
    let vol = nursd1(&slices, &grid, &ReconOptions::default())?;
    let p = vol.argmax_position();
    println!("nursd1 peak ({:.2}, {:.2}, {:.2}) for target {target:?}", p[0], p[1], p[2]);

    let probes = ExplicitVoxels::from_points(&[
        [-0.05, 0.08, 0.5],
        [-0.01, 0.08, 0.5],
        [0.2, -0.2, 0.5],
        [-0.05, 0.08, 0.6],
    ])?;
    let opts = ReconOptions {
        falloff: false,
        ..ReconOptions::default()
    };
    let v = nursd3(&slices, &probes, &opts)?;
    let at = v.grid.positions();
    let oracle = backproject(&slices, &at);
    for (x, f) in at.iter().zip(&v.field) {
        println!("  {x:?}: |I| = {:.3e}", f.norm());
    }
    println!("nursd3 vs backprojection NCC {:.4}", ncc_magnitude(&v.field, &oracle)?);
    Ok(())
}

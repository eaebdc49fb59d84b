//! A relay wall that is not a plane: both two-stage paths against the
//! brute-force backprojection.

use nlos::geometry::{PointList, RelaySampling, UniformGrid3D};
use nlos::metrics::ncc_magnitude;
use nlos::oracle::backproject;
use nlos::phasor::{to_frequency, PhasorKernel};
use nlos::reconstruct::{nursd3d, rsd3d, ReconOptions};
use nlos::sim::{simulate, Scene, SimConfig};

fn main() -> nlos::Result<()> {
    // cylindrical bulge of 3 cm over a 0.6 m wall
    let pts: Vec<[f64; 3]> = (0..16)
        .flat_map(|j| {
            (0..16).map(move |i| {
                let x = -0.3 + 0.04 * i as f64;
                let y = -0.3 + 0.04 * j as f64;
                [x, y, 0.03 * (1.0 - (x / 0.3).powi(2))]
            })
        })
        .collect();
    let relay = RelaySampling::non_planar(pts)?;
    let target = [0.04, 0.0, 0.5];
    let m = simulate(
        &Scene::point(target, 1.0),
        &relay,
        &PointList::spatial(vec![[0.0, 0.0, 0.03]])?,
        &SimConfig::new(20e-12, 384),
    )?;
    let slices = to_frequency(&m, &PhasorKernel::new(0.1, 0.01, m.n_bins, m.dt)?)?;
    let grid = UniformGrid3D::new(16, 16, 5, 0.04, 0.04, 0.03, -0.3, -0.3, 0.44)?;
    let opts = ReconOptions {
        falloff: false,
        ..ReconOptions::default()
    };
    let oracle = backproject(&slices, &nlos::geometry::VoxelGrid::Cuboid(grid).positions());
    for (name, vol) in [("rsd3d", rsd3d(&slices, &grid, &opts)?), ("nursd3d", nursd3d(&slices, &grid, &opts)?)] {
        let p = vol.argmax_position();
        println!(
            "{name:<8} peak ({:.2}, {:.2}, {:.2}), NCC vs backprojection {:.4}",
            p[0],
            p[1],
            p[2],
            ncc_magnitude(&vol.field, &oracle)?
        );
    }
    Ok(())
}

//! Reconstruct onto a frustum whose pitch widens with depth, covering more
//! than the relay footprint at the same voxel count.

use nlos::geometry::{FrustumGrid, PointList, RelaySampling, UniformGrid2D};
use nlos::phasor::{frustum_volume, to_frequency, PhasorKernel};
use nlos::reconstruct::{srsd, ReconOptions};
use nlos::sim::{simulate, Scene, SimConfig};

fn main() -> nlos::Result<()> {
    let wall = UniformGrid2D::centered(24, 0.025, 0.0)?;
    // outside the relay's lateral footprint of +-0.3 m
    let target = [0.42, 0.1, 0.9];
    let m = simulate(
        &Scene::point(target, 1.0),
        &RelaySampling::Uniform(wall),
        &PointList::planar(vec![[0.0, 0.0]])?,
        &SimConfig::new(16e-12, 512),
    )?;
    let slices = to_frequency(&m, &PhasorKernel::new(0.1, 0.01, m.n_bins, m.dt)?)?;

    let depths: Vec<f64> = (0..12).map(|k| 0.7 + 0.04 * k as f64).collect();
    let grid = FrustumGrid::linear(wall, depths, 0.5, 0.5)?;
    println!(
        "plane half-widths {:.2} m .. {:.2} m",
        0.3 / grid.alpha[0],
        0.3 / grid.alpha[grid.alpha.len() - 1]
    );
    let vol = srsd(&slices, &grid, &ReconOptions::default())?;
    let p = vol.argmax_position();
    println!("target {target:?}, peak ({:.3}, {:.3}, {:.3})", p[0], p[1], p[2]);

    let v = frustum_volume(0.3, 0.3, 0.7, 1.14, 0.5, 0.5)?;
    println!("frustum covers {:.0}% more volume than the cuboid", v.increase_percent);
    Ok(())
}

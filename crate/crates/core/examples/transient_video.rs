//! Light-transport video of the virtual source: without the illumination
//! leg, frame `t` shows the virtual wavefront `t` seconds after it leaves
//! the illuminated wall spot, so a scatterer lights up at `depth / c`.

use nlos::geometry::{PointList, RelaySampling, UniformGrid2D, UniformGrid3D, VoxelGrid};
use nlos::phasor::{to_frequency, PhasorKernel};
use nlos::reconstruct::{light_transport_video, Algorithm, OutputGrid, ReconOptions};
use nlos::sim::{simulate, Scene, SimConfig};
use nlos::SPEED_OF_LIGHT;

fn main() -> nlos::Result<()> {
    let wall = UniformGrid2D::centered(16, 0.04, 0.0)?;
    let m = simulate(
        &Scene::point([0.0, 0.0, 1.0], 1.0),
        &RelaySampling::Uniform(wall),
        &PointList::planar(vec![[0.0, 0.0]])?,
        &SimConfig::new(20e-12, 512),
    )?;
    let slices = to_frequency(&m, &PhasorKernel::new(0.1, 0.01, m.n_bins, m.dt)?)?;
    // a single plane through the scatterer
    let grid = UniformGrid3D::over(&wall, 1, 1.0, 0.04)?;
    let times: Vec<f64> = (0..41).map(|i| 0.2e-9 * i as f64).collect();
    let vol = light_transport_video(
        &slices,
        OutputGrid::Voxels(VoxelGrid::Cuboid(grid)),
        Algorithm::Rsd,
        times.clone(),
        &ReconOptions {
            illumination_phase: false,
            ..ReconOptions::default()
        },
    )?;
    let energy: Vec<f64> = (0..times.len())
        .map(|f| vol.frame(f).iter().map(|c| c.norm_sqr()).sum())
        .collect();
    let best = energy.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    for (t, e) in times.iter().zip(&energy).step_by(4) {
        println!("t {:.1} ns  {}", t * 1e9, "#".repeat((40.0 * e / energy[best]).round() as usize));
    }
    println!(
        "brightest frame at {:.2} ns; one-way flight from the wall takes {:.2} ns",
        times[best] * 1e9,
        1.0 / SPEED_OF_LIGHT * 1e9
    );
    Ok(())
}

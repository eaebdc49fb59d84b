//! Simulate a point scatterer behind a uniform relay and reconstruct it
//! with plane-to-plane propagation.

use nlos::geometry::{PointList, RelaySampling, UniformGrid2D, UniformGrid3D};
use nlos::phasor::{lateral_resolution, to_frequency, PhasorKernel};
use nlos::reconstruct::{project_max_depth, rsd, ReconOptions};
use nlos::sim::{simulate, Scene, SimConfig};

fn main() -> nlos::Result<()> {
    let wall = UniformGrid2D::centered(32, 0.02, 0.0)?;
    let scene = Scene::point([0.06, -0.04, 0.5], 1.0);
    let m = simulate(
        &scene,
        &RelaySampling::Uniform(wall),
        &PointList::planar(vec![[0.0, 0.0]])?,
        &SimConfig::new(10e-12, 512),
    )?;

    let kernel = PhasorKernel::new(0.06, 0.01, m.n_bins, m.dt)?;
    let slices = to_frequency(&m, &kernel)?;
    println!("{} frequencies around {:.2} GHz", kernel.len(), kernel.omega_c / 2e9 / std::f64::consts::PI);

    let grid = UniformGrid3D::over(&wall, 11, 0.4, 0.02)?;
    let vol = rsd(&slices, &grid, &ReconOptions::default())?;
    let peak = vol.argmax_position();
    println!("peak at ({:.3}, {:.3}, {:.3})", peak[0], peak[1], peak[2]);
    println!("expected lateral resolution {:.3} m", lateral_resolution(0.06, 0.5, wall.extent_x())?);

    let p = project_max_depth(&vol, 0, None)?;
    let hit = p.image.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    println!("projection peak depth {:.3} m", p.depth[hit]);
    Ok(())
}

//! Photon noise at decreasing exposure and its effect on the reconstruction.

use nlos::geometry::{PointList, RelaySampling, UniformGrid2D, UniformGrid3D};
use nlos::metrics::ssim;
use nlos::phasor::{to_frequency, PhasorKernel};
use nlos::reconstruct::{project_max_depth, rsd, ReconOptions};
use nlos::sim::{add_poisson_noise, simulate, Scene, Scatterer, SimConfig};

fn main() -> nlos::Result<()> {
    let wall = UniformGrid2D::centered(24, 0.025, 0.0)?;
    let scene = Scene {
        scatterers: vec![
            Scatterer { pos: [-0.08, 0.05, 0.5], albedo: 1.0 },
            Scatterer { pos: [0.1, -0.06, 0.55], albedo: 0.7 },
        ],
        ambient: 0.0,
    };
    let m = simulate(
        &scene,
        &RelaySampling::Uniform(wall),
        &PointList::planar(vec![[0.0, 0.0]])?,
        &SimConfig::new(16e-12, 512),
    )?;
    // normalise so that the brightest bin holds one photon at unit exposure
    let peak = m.histograms.iter().cloned().fold(0.0, f64::max);
    let mut unit = m.clone();
    unit.histograms.iter_mut().for_each(|h| *h /= peak);

    let kernel = PhasorKernel::new(0.08, 0.01, m.n_bins, m.dt)?;
    let grid = UniformGrid3D::over(&wall, 6, 0.45, 0.025)?;
    let opts = ReconOptions::default();
    let image = |meas: &nlos::geometry::TransientMeasurement| -> nlos::Result<Vec<f64>> {
        let v = rsd(&to_frequency(meas, &kernel)?, &grid, &opts)?;
        Ok(project_max_depth(&v, 0, None)?.image)
    };
    let clean = image(&unit)?;
    for scale in [1e4, 1e2, 1e0] {
        let mut noisy = add_poisson_noise(&unit, scale, 42)?;
        noisy.histograms.iter_mut().for_each(|h| *h /= scale);
        let s = ssim(&image(&noisy)?, &clean, grid.nx, grid.ny)?;
        println!("exposure {scale:>7.0}: SSIM {s:.3}");
    }
    Ok(())
}

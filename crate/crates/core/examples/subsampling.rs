//! Drop relay samples, interpolate them back and compare projections with
//! the full-data reconstruction.

use nlos::geometry::{PointList, RelaySampling, UniformGrid2D, UniformGrid3D};
use nlos::metrics::ssim;
use nlos::phasor::{sampling_report, to_frequency, PhasorKernel};
use nlos::reconstruct::{project_max_depth, rsd, ReconOptions};
use nlos::sim::{simulate, subsample_interpolate, Interpolation, Scene, SimConfig};

fn main() -> nlos::Result<()> {
    let wall = UniformGrid2D::centered(40, 0.01, 0.0)?;
    let target = [0.03, -0.02, 0.5];
    let m = simulate(
        &Scene::point(target, 1.0),
        &RelaySampling::Uniform(wall),
        &PointList::planar(vec![[0.0, 0.0]])?,
        &SimConfig::new(8e-12, 768),
    )?;

    let r = sampling_report(target[0].abs().max(target[1].abs()), target[2], 0.04, false)?;
    println!("stride 5 admissible: {}", r.admits(5.0));

    let slices = to_frequency(&m, &PhasorKernel::new(0.04, 0.01, m.n_bins, m.dt)?)?;
    let sub = subsample_interpolate(&slices, 5, Interpolation::Nearest)?;
    println!("suggested central wavelength {:.3} m", sub.recommended_lambda_c);

    let grid = UniformGrid3D::over(&wall, 7, 0.47, 0.01)?;
    let opts = ReconOptions::default();
    let full = project_max_depth(&rsd(&slices, &grid, &opts)?, 0, None)?;
    let part = project_max_depth(&rsd(&sub.slices, &grid, &opts)?, 0, None)?;
    println!("SSIM of projections {:.3}", ssim(&part.image, &full.image, full.nx, full.ny)?);
    Ok(())
}

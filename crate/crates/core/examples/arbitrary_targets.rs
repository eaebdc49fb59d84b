//! Evaluate a uniform-relay reconstruction only where it is needed: at a
//! list of voxels, and at scaled targets on frustum planes.

use nlos::geometry::{ExplicitVoxels, FrustumGrid, PointList, RelaySampling, UniformGrid2D};
use nlos::phasor::{to_frequency, PhasorKernel};
use nlos::reconstruct::{nursd2, srsd_nursd2, ReconOptions, ScaledPlane, ScaledTargets};
use nlos::sim::{simulate, Scene, SimConfig};

fn main() -> nlos::Result<()> {
    let wall = UniformGrid2D::centered(16, 0.04, 0.0)?;
    let target = [0.05, -0.04, 0.5];
    let m = simulate(
        &Scene::point(target, 1.0),
        &RelaySampling::Uniform(wall),
        &PointList::planar(vec![[0.0, 0.0]])?,
        &SimConfig::new(20e-12, 384),
    )?;
    let slices = to_frequency(&m, &PhasorKernel::new(0.1, 0.01, m.n_bins, m.dt)?)?;
    let opts = ReconOptions::default();

    // a line of voxels through the target, along depth
    let line: Vec<[f64; 3]> = (0..9).map(|k| [0.05, -0.04, 0.42 + 0.02 * k as f64]).collect();
    let v = nursd2(&slices, &ExplicitVoxels::from_points(&line)?, &opts)?;
    for (p, f) in v.grid.positions().iter().zip(&v.field) {
        println!("z {:.2}: {:.3e}", p[2], f.norm());
    }

    // a sparse ring of targets on each plane of a frustum, in scaled coordinates
    let depths = vec![0.46, 0.5, 0.54];
    let f = FrustumGrid::linear(wall, depths, 0.6, 0.6)?;
    let full = ScaledTargets::from_frustum(&f);
    let ring: Vec<[f64; 2]> = (0..12)
        .map(|i| {
            let a = i as f64 * std::f64::consts::PI / 6.0;
            [3.0 * a.cos(), 3.0 * a.sin()]
        })
        .chain(std::iter::once([1.0, -1.0]))
        .collect();
    let targets = ScaledTargets {
        center: full.center,
        planes: full
            .planes
            .iter()
            .map(|p| ScaledPlane {
                points: ring.clone(),
                ..p.clone()
            })
            .collect(),
    };
    let s = srsd_nursd2(&slices, &targets, &opts)?;
    let best = s.argmax_position();
    println!("strongest scaled target at ({:.3}, {:.3}, {:.2})", best[0], best[1], best[2]);
    Ok(())
}

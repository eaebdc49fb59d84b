//! Round-trip a measurement and a reconstruction through the binary
//! container and write a projection image.

use nlos::container::{read_dataset, read_pgm, read_volume, sidecar_path, write_dataset, write_pgm, write_volume};
use nlos::geometry::{PointList, RelaySampling, UniformGrid2D, UniformGrid3D};
use nlos::phasor::{to_frequency, PhasorKernel};
use nlos::reconstruct::{project_max_depth, rsd, ReconOptions};
use nlos::sim::{simulate, Scene, SimConfig};

fn main() -> nlos::Result<()> {
    let dir = std::env::temp_dir().join(format!("nlos-containers-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let wall = UniformGrid2D::centered(8, 0.05, 0.0)?;
    let m = simulate(
        &Scene::point([0.0, 0.05, 0.4], 1.0),
        &RelaySampling::Uniform(wall),
        &PointList::planar(vec![[0.0, 0.0]])?,
        &SimConfig::new(20e-12, 256),
    )?;
    let path = dir.join("scene.nls1");
    write_dataset(&m, &path)?;
    let back = read_dataset(&path)?;
    println!(
        "{} bytes, {} pairs, sidecar {}",
        std::fs::metadata(&path)?.len(),
        back.n_illum() * back.n_detect(),
        sidecar_path(&path).display()
    );

    let slices = to_frequency(&back, &PhasorKernel::new(0.1, 0.01, back.n_bins, back.dt)?)?;
    let vol = rsd(&slices, &UniformGrid3D::over(&wall, 4, 0.35, 0.05)?, &ReconOptions::default())?;
    let vpath = dir.join("volume.nls1");
    write_volume(&vol, &vpath)?;
    println!("volume voxels read back: {}", read_volume(&vpath)?.grid.len());

    let p = project_max_depth(&vol, 0, None)?;
    write_pgm(dir.join("volume.pgm"), p.nx, p.ny, &p.image)?;
    let (w, h, _) = read_pgm(dir.join("volume.pgm"))?;
    println!("image {w}x{h}");
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

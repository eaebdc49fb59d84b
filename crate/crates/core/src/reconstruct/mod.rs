//! Fast phasor-field reconstruction.
//!
//! Every variant shares one structure: relay coefficients become a source
//! spectrum on a padded lattice, each voxel plane multiplies it by the
//! spectrum of the sampled Rayleigh-Sommerfeld kernel, and the product is
//! synthesised at that plane's voxels. The variants differ in how the
//! source spectrum is formed and how voxels are read off:
//!
//! | algorithm     | relay               | voxels          | source / synthesis        |
//! |---------------|---------------------|-----------------|---------------------------|
//! | `rsd`         | uniform             | cuboid          | FFT / inverse FFT         |
//! | `srsd`        | uniform             | frustum         | FFT / scaled DFT          |
//! | `nursd1`      | uniform, scattered  | cuboid          | type-1 NUFFT / inverse FFT|
//! | `nursd2`      | uniform             | explicit        | FFT / type-2 NUFFT        |
//! | `nursd3`      | uniform, scattered  | explicit        | type-1 / type-2 NUFFT     |
//! | `rsd3d`       | any                 | cuboid          | layered FFT / inverse FFT |
//! | `nursd3d`     | any                 | cuboid          | 3D type-1 NUFFT / inverse FFT |
//! | `srsd-nursd2` | uniform             | scaled targets  | FFT / type-2 NUFFT        |

mod engine;
pub mod kernel;
pub mod layout;
mod project;
mod stage1;
#[cfg(test)]
mod tests;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    ExplicitVoxels, FrequencySlices, FrustumGrid, ReconstructionVolume, RelaySampling, UniformGrid2D,
    UniformGrid3D, VoxelGrid, VoxelPlane,
};
use crate::sim::Interpolation;
use crate::spectral::{NufftPlan, SfftPlan, DEFAULT_EPS};
use crate::SPEED_OF_LIGHT;

use engine::{scatter_frame, scattered_sources, uniform_sources, Engine, PlaneJob, Sources, Targets};
use layout::{lattice_index, same_pitch, AxisLayout, Lattice};

pub use kernel::PropagationKernel;
pub use project::{project_max_depth, DepthProjection};

/// Extra lattice sites kept beyond the linear-convolution minimum when
/// voxels are read between lattice sites.
const OFF_LATTICE_MARGIN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Rsd,
    Srsd,
    Nursd1,
    Nursd2,
    Nursd3,
    Rsd3d,
    Nursd3d,
    SrsdNursd2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Rsd,
        Algorithm::Srsd,
        Algorithm::Nursd1,
        Algorithm::Nursd2,
        Algorithm::Nursd3,
        Algorithm::Rsd3d,
        Algorithm::Nursd3d,
        Algorithm::SrsdNursd2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rsd => "rsd",
            Algorithm::Srsd => "srsd",
            Algorithm::Nursd1 => "nursd1",
            Algorithm::Nursd2 => "nursd2",
            Algorithm::Nursd3 => "nursd3",
            Algorithm::Rsd3d => "rsd3d",
            Algorithm::Nursd3d => "nursd3d",
            Algorithm::SrsdNursd2 => "srsd-nursd2",
        }
    }

    /// Relay kinds (as named by [`RelaySampling::kind_name`]) this variant accepts.
    pub fn relay_kinds(self) -> &'static [&'static str] {
        match self {
            Algorithm::Rsd | Algorithm::Srsd | Algorithm::Nursd2 | Algorithm::SrsdNursd2 => &["uniform"],
            Algorithm::Nursd1 | Algorithm::Nursd3 => &["uniform", "non-uniform planar"],
            Algorithm::Rsd3d | Algorithm::Nursd3d => &["uniform", "non-uniform planar", "non-planar"],
        }
    }

    /// Output kind this variant produces.
    pub fn output_kind(self) -> &'static str {
        match self {
            Algorithm::Rsd | Algorithm::Nursd1 | Algorithm::Rsd3d | Algorithm::Nursd3d => "cuboid",
            Algorithm::Srsd => "frustum",
            Algorithm::Nursd2 | Algorithm::Nursd3 => "explicit",
            Algorithm::SrsdNursd2 => "scaled",
        }
    }

    fn suggestion(self, relay: &str) -> String {
        let accepts: Vec<Algorithm> = Algorithm::ALL
            .iter()
            .copied()
            .filter(|a| a.relay_kinds().contains(&relay))
            .collect();
        let same: Vec<&str> = accepts
            .iter()
            .filter(|a| a.output_kind() == self.output_kind())
            .map(|a| a.name())
            .collect();
        let names = if same.is_empty() {
            accepts.iter().map(|a| a.name()).collect()
        } else {
            same
        };
        format!("a {relay} relay needs one of: {}", names.join(", "))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

/// Tuning knobs shared by all variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconOptions {
    /// NUFFT tolerance.
    pub eps: f64,
    /// Include the `1/r` amplitude of the propagation kernel.
    pub falloff: bool,
    /// Multiply by the illumination leg `exp(s i (w/c)|x_p - x_v|)`.
    pub illumination_phase: bool,
    /// Lattice sites added to every padded axis.
    pub extra_padding: usize,
    /// Deposit scheme for `rsd3d`.
    pub splat: Interpolation,
    /// Layer spacing for `rsd3d`; defaults to `min(pitch, lambda_min / 8)`.
    pub stage1_dz: Option<f64>,
    /// Stage-one volume for `rsd3d`/`nursd3d`; relay points must lie inside.
    pub stage1_grid: Option<UniformGrid3D>,
    /// Lattice pitch for `nursd3`; inferred from the relay when absent.
    pub lattice_pitch: Option<[f64; 2]>,
}

impl Default for ReconOptions {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            falloff: true,
            illumination_phase: true,
            extra_padding: 0,
            splat: Interpolation::Linear,
            stage1_dz: None,
            stage1_grid: None,
            lattice_pitch: None,
        }
    }
}

/// One plane of targets expressed in the scaled index coordinates of a
/// frustum plane: `t` maps to `center + t * (dx / alpha, dy / beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledPlane {
    pub z: f64,
    pub alpha: f64,
    pub beta: f64,
    pub points: Vec<[f64; 2]>,
}

/// Arbitrary targets on scaled planes sharing one center on the relay lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledTargets {
    pub center: [f64; 2],
    pub planes: Vec<ScaledPlane>,
}

impl ScaledTargets {
    /// Every sample of a frustum grid, as scaled targets.
    pub fn from_frustum(f: &FrustumGrid) -> Self {
        let (cx, cy) = f.center();
        let (ci, cj) = f.center_index();
        let pts: Vec<[f64; 2]> = (0..f.base.ny)
            .flat_map(|j| (0..f.base.nx).map(move |i| [i as f64 - ci as f64, j as f64 - cj as f64]))
            .collect();
        let planes = (0..f.depths.len())
            .map(|k| ScaledPlane {
                z: f.depths[k],
                alpha: f.alpha[k],
                beta: f.beta[k],
                points: pts.clone(),
            })
            .collect();
        Self {
            center: [cx, cy],
            planes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.planes.is_empty() {
            return Err(Error::InvalidGrid("scaled target list has no planes".into()));
        }
        for (k, pl) in self.planes.iter().enumerate() {
            if !(pl.alpha > 0.0 && pl.alpha <= 1.0 && pl.beta > 0.0 && pl.beta <= 1.0) {
                return Err(Error::InvalidGrid(format!(
                    "scale factors must lie in (0, 1], got ({}, {})",
                    pl.alpha, pl.beta
                )));
            }
            if pl.points.is_empty() {
                return Err(Error::EmptyTargets(k));
            }
        }
        Ok(())
    }

    /// Physical voxel positions for relay pitch `(dx, dy)`.
    pub fn physical(&self, dx: f64, dy: f64) -> ExplicitVoxels {
        let planes = self
            .planes
            .iter()
            .map(|pl| VoxelPlane {
                z: pl.z,
                points: pl
                    .points
                    .iter()
                    .map(|t| [self.center[0] + t[0] * dx / pl.alpha, self.center[1] + t[1] * dy / pl.beta])
                    .collect(),
            })
            .collect();
        ExplicitVoxels { planes }
    }
}

/// Where a reconstruction is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutputGrid {
    Voxels(VoxelGrid),
    Scaled(ScaledTargets),
}

impl OutputGrid {
    pub fn kind_name(&self) -> &'static str {
        match self {
            OutputGrid::Voxels(g) => g.kind_name(),
            OutputGrid::Scaled(_) => "scaled",
        }
    }
}

/// Everything needed for one reconstruction.
#[derive(Debug, Clone)]
pub struct ReconstructionRequest<'a> {
    /// Phasor-field coefficients; the kernel weights are already applied.
    pub measurement: &'a FrequencySlices,
    pub output: OutputGrid,
    pub algorithm: Algorithm,
    pub options: ReconOptions,
    /// Frame times for a transient video; `None` gives a static volume.
    pub times: Option<Vec<f64>>,
}

/// Check that `algorithm` accepts this relay and output.
pub fn check_compatible(algorithm: Algorithm, relay: &RelaySampling, output: &OutputGrid) -> Result<()> {
    let rk = relay.kind_name();
    if !algorithm.relay_kinds().contains(&rk) {
        return Err(Error::Incompatible {
            algorithm: algorithm.name(),
            reason: algorithm.suggestion(rk),
        });
    }
    if output.kind_name() != algorithm.output_kind() {
        let fits: Vec<&str> = Algorithm::ALL
            .iter()
            .filter(|a| a.output_kind() == output.kind_name() && a.relay_kinds().contains(&rk))
            .map(|a| a.name())
            .collect();
        return Err(Error::Incompatible {
            algorithm: algorithm.name(),
            reason: format!(
                "produces {} output, got a {} grid; use one of: {}",
                algorithm.output_kind(),
                output.kind_name(),
                fits.join(", ")
            ),
        });
    }
    Ok(())
}

struct Setup {
    sources: Sources,
    planes: Vec<PlaneJob>,
    grid: VoxelGrid,
}

/// Run a reconstruction request.
pub fn reconstruct(req: &ReconstructionRequest<'_>) -> Result<ReconstructionVolume> {
    let slices = req.measurement;
    slices.validate()?;
    check_compatible(req.algorithm, &slices.relay, &req.output)?;
    if !(req.options.eps >= 1e-14 && req.options.eps <= 1e-1) {
        return Err(Error::Tolerance(req.options.eps));
    }
    if let Some(t) = &req.times {
        if t.is_empty() || t.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("frame times must be finite and non-empty".into()));
        }
    }
    let setup = match (&req.output, req.algorithm) {
        (OutputGrid::Voxels(VoxelGrid::Cuboid(g)), Algorithm::Rsd) => setup_rsd(slices, g, &req.options)?,
        (OutputGrid::Voxels(VoxelGrid::Frustum(f)), Algorithm::Srsd) => setup_srsd(slices, f, &req.options)?,
        (OutputGrid::Voxels(VoxelGrid::Cuboid(g)), Algorithm::Nursd1) => setup_nursd1(slices, g, &req.options)?,
        (OutputGrid::Voxels(VoxelGrid::Explicit(e)), Algorithm::Nursd2) => {
            setup_nursd2(slices, e, &req.options)?
        }
        (OutputGrid::Voxels(VoxelGrid::Explicit(e)), Algorithm::Nursd3) => {
            setup_nursd3(slices, e, &req.options)?
        }
        (OutputGrid::Voxels(VoxelGrid::Cuboid(g)), Algorithm::Rsd3d | Algorithm::Nursd3d) => {
            setup_3d(slices, g, req.algorithm, &req.options)?
        }
        (OutputGrid::Scaled(s), Algorithm::SrsdNursd2) => {
            s.validate()?;
            let r = uniform_relay(slices)?;
            setup_nursd2(slices, &s.physical(r.dx, r.dy), &req.options)?
        }
        _ => unreachable!("compatibility checked above"),
    };
    let times = req.times.clone().unwrap_or_else(|| vec![0.0]);
    let engine = Engine {
        slices,
        sources: setup.sources,
        options: &req.options,
    };
    let field = engine.run(&setup.planes, &times)?;
    Ok(ReconstructionVolume {
        grid: setup.grid,
        field,
        times: req.times.clone(),
    })
}

fn run(
    slices: &FrequencySlices,
    output: OutputGrid,
    algorithm: Algorithm,
    options: &ReconOptions,
) -> Result<ReconstructionVolume> {
    reconstruct(&ReconstructionRequest {
        measurement: slices,
        output,
        algorithm,
        options: options.clone(),
        times: None,
    })
}

/// Plane-to-plane reconstruction from a uniform relay onto a cuboid whose
/// lateral samples lie on the relay lattice.
pub fn rsd(slices: &FrequencySlices, grid: &UniformGrid3D, options: &ReconOptions) -> Result<ReconstructionVolume> {
    run(slices, OutputGrid::Voxels(VoxelGrid::Cuboid(*grid)), Algorithm::Rsd, options)
}

/// Reconstruction onto a frustum whose pitch grows with depth.
pub fn srsd(slices: &FrequencySlices, grid: &FrustumGrid, options: &ReconOptions) -> Result<ReconstructionVolume> {
    run(slices, OutputGrid::Voxels(VoxelGrid::Frustum(grid.clone())), Algorithm::Srsd, options)
}

/// Scattered planar relay samples onto a cuboid.
pub fn nursd1(slices: &FrequencySlices, grid: &UniformGrid3D, options: &ReconOptions) -> Result<ReconstructionVolume> {
    run(slices, OutputGrid::Voxels(VoxelGrid::Cuboid(*grid)), Algorithm::Nursd1, options)
}

/// Uniform relay onto arbitrary voxels grouped by depth.
pub fn nursd2(slices: &FrequencySlices, voxels: &ExplicitVoxels, options: &ReconOptions) -> Result<ReconstructionVolume> {
    run(slices, OutputGrid::Voxels(VoxelGrid::Explicit(voxels.clone())), Algorithm::Nursd2, options)
}

/// Scattered planar relay samples onto arbitrary voxels.
pub fn nursd3(slices: &FrequencySlices, voxels: &ExplicitVoxels, options: &ReconOptions) -> Result<ReconstructionVolume> {
    run(slices, OutputGrid::Voxels(VoxelGrid::Explicit(voxels.clone())), Algorithm::Nursd3, options)
}

/// Curved relay onto a cuboid, first stage by layered deposits.
pub fn rsd3d(slices: &FrequencySlices, grid: &UniformGrid3D, options: &ReconOptions) -> Result<ReconstructionVolume> {
    run(slices, OutputGrid::Voxels(VoxelGrid::Cuboid(*grid)), Algorithm::Rsd3d, options)
}

/// Curved relay onto a cuboid, first stage by a 3D type-1 NUFFT.
pub fn nursd3d(slices: &FrequencySlices, grid: &UniformGrid3D, options: &ReconOptions) -> Result<ReconstructionVolume> {
    run(slices, OutputGrid::Voxels(VoxelGrid::Cuboid(*grid)), Algorithm::Nursd3d, options)
}

/// Uniform relay onto arbitrary targets on scaled planes.
pub fn srsd_nursd2(
    slices: &FrequencySlices,
    targets: &ScaledTargets,
    options: &ReconOptions,
) -> Result<ReconstructionVolume> {
    run(slices, OutputGrid::Scaled(targets.clone()), Algorithm::SrsdNursd2, options)
}

/// Transient video: frame `t` is `sum_w vol_w exp(s i w t)`.
///
/// With `illumination_phase` off, frame `t` shows the virtual wavefront `t`
/// seconds after it leaves the illuminated wall spot; with it on, every
/// scatterer focuses at `t = 0`.
pub fn light_transport_video(
    slices: &FrequencySlices,
    output: OutputGrid,
    algorithm: Algorithm,
    times: Vec<f64>,
    options: &ReconOptions,
) -> Result<ReconstructionVolume> {
    reconstruct(&ReconstructionRequest {
        measurement: slices,
        output,
        algorithm,
        options: options.clone(),
        times: Some(times),
    })
}

fn uniform_relay(slices: &FrequencySlices) -> Result<&UniformGrid2D> {
    match &slices.relay {
        RelaySampling::Uniform(g) => Ok(g),
        other => Err(Error::Incompatible {
            algorithm: "rsd",
            reason: format!("needs a uniform relay, got {}", other.kind_name()),
        }),
    }
}

fn planar_relay(slices: &FrequencySlices) -> Result<(Vec<[f64; 2]>, f64)> {
    match &slices.relay {
        RelaySampling::Uniform(g) => Ok((g.positions().iter().map(|p| [p[0], p[1]]).collect(), g.z)),
        RelaySampling::NonUniformPlanar { points, z } => Ok((points.xy(), *z)),
        RelaySampling::NonPlanar { .. } => Err(Error::Incompatible {
            algorithm: "nursd1",
            reason: "needs a planar relay; use rsd3d or nursd3d".into(),
        }),
    }
}

fn cuboid_planes(g: &UniformGrid3D, lo: [i64; 2]) -> Vec<PlaneJob> {
    (0..g.nz)
        .map(|k| PlaneJob {
            z: g.depth(k),
            positions: g.plane(k).positions(),
            targets: Targets::Window {
                lo,
                n: [g.nx, g.ny],
            },
        })
        .collect()
}

fn setup_rsd(slices: &FrequencySlices, g: &UniformGrid3D, opts: &ReconOptions) -> Result<Setup> {
    g.validate()?;
    let r = uniform_relay(slices)?;
    same_pitch(g.dx, r.dx, "voxel grid x")?;
    same_pitch(g.dy, r.dy, "voxel grid y")?;
    let ox = lattice_index(g.x0, r.x0, r.dx, "voxel grid origin x")?;
    let oy = lattice_index(g.y0, r.y0, r.dy, "voxel grid origin y")?;
    let x = AxisLayout::new(r.x0, r.dx, r.nx, ox as f64, (ox + g.nx as i64 - 1) as f64, 0, opts.extra_padding);
    let y = AxisLayout::new(r.y0, r.dy, r.ny, oy as f64, (oy + g.ny as i64 - 1) as f64, 0, opts.extra_padding);
    let lattice = Lattice { x, y, z: r.z };
    Ok(Setup {
        sources: uniform_sources(slices, r, lattice),
        planes: cuboid_planes(g, [ox, oy]),
        grid: VoxelGrid::Cuboid(*g),
    })
}

fn setup_srsd(slices: &FrequencySlices, f: &FrustumGrid, opts: &ReconOptions) -> Result<Setup> {
    f.validate()?;
    let r = uniform_relay(slices)?;
    same_pitch(f.base.dx, r.dx, "frustum base x")?;
    same_pitch(f.base.dy, r.dy, "frustum base y")?;
    let (cx, cy) = f.center();
    let ncx = lattice_index(cx, r.x0, r.dx, "frustum center x")?;
    let ncy = lattice_index(cy, r.y0, r.dy, "frustum center y")?;
    let (ci, cj) = f.center_index();
    let a_min = f.alpha.iter().cloned().fold(1.0, f64::min);
    let b_min = f.beta.iter().cloned().fold(1.0, f64::min);
    let margin = OFF_LATTICE_MARGIN + opts.extra_padding;
    let x = AxisLayout::new(
        r.x0,
        r.dx,
        r.nx,
        ncx as f64 - ci as f64 / a_min,
        ncx as f64 + (f.base.nx - 1 - ci) as f64 / a_min,
        f.base.nx,
        margin,
    );
    let y = AxisLayout::new(
        r.y0,
        r.dy,
        r.ny,
        ncy as f64 - cj as f64 / b_min,
        ncy as f64 + (f.base.ny - 1 - cj) as f64 / b_min,
        f.base.ny,
        margin,
    );
    let lattice = Lattice { x, y, z: r.z };
    let mut plans: HashMap<(u64, u64), Arc<SfftPlan>> = HashMap::new();
    let mut planes = Vec::with_capacity(f.depths.len());
    for k in 0..f.depths.len() {
        let key = (f.alpha[k].to_bits(), f.beta[k].to_bits());
        let plan = match plans.get(&key) {
            Some(p) => p.clone(),
            None => {
                let p = Arc::new(SfftPlan::new(x.len, y.len, -1.0 / f.alpha[k], -1.0 / f.beta[k])?);
                plans.insert(key, p.clone());
                p
            }
        };
        planes.push(PlaneJob {
            z: f.depths[k],
            positions: f.plane(k),
            targets: Targets::Scaled {
                center: [ncx, ncy],
                n: [f.base.nx, f.base.ny],
                ci: [ci, cj],
                plan,
            },
        });
    }
    Ok(Setup {
        sources: uniform_sources(slices, r, lattice),
        planes,
        grid: VoxelGrid::Frustum(f.clone()),
    })
}

fn coord_range(e: &ExplicitVoxels, base: [f64; 2], pitch: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in e.planes.iter().flat_map(|pl| &pl.points) {
        for a in 0..2 {
            let u = (p[a] - base[a]) / pitch[a];
            lo[a] = lo[a].min(u);
            hi[a] = hi[a].max(u);
        }
    }
    (lo, hi)
}

fn point_planes(lattice: &Lattice, e: &ExplicitVoxels, eps: f64) -> Result<Vec<PlaneJob>> {
    let plan = Arc::new(NufftPlan::new(lattice.shape(), eps)?);
    e.planes
        .iter()
        .map(|pl| PlaneJob::points(lattice, pl.z, &pl.points, plan.clone()))
        .collect()
}

fn setup_nursd2(slices: &FrequencySlices, e: &ExplicitVoxels, opts: &ReconOptions) -> Result<Setup> {
    e.validate()?;
    let r = uniform_relay(slices)?;
    let (lo, hi) = coord_range(e, [r.x0, r.y0], [r.dx, r.dy]);
    let margin = OFF_LATTICE_MARGIN + opts.extra_padding;
    let x = AxisLayout::new(r.x0, r.dx, r.nx, lo[0], hi[0], 0, margin);
    let y = AxisLayout::new(r.y0, r.dy, r.ny, lo[1], hi[1], 0, margin);
    let lattice = Lattice { x, y, z: r.z };
    Ok(Setup {
        planes: point_planes(&lattice, e, opts.eps)?,
        sources: uniform_sources(slices, r, lattice),
        grid: VoxelGrid::Explicit(e.clone()),
    })
}

fn setup_nursd1(slices: &FrequencySlices, g: &UniformGrid3D, opts: &ReconOptions) -> Result<Setup> {
    g.validate()?;
    let (xy, z) = planar_relay(slices)?;
    let frame = scatter_frame(
        &xy,
        [g.x0, g.y0],
        [g.dx, g.dy],
        [0.0, 0.0],
        [(g.nx - 1) as f64, (g.ny - 1) as f64],
        [0, 0],
        true,
        opts.extra_padding,
        z,
    )?;
    Ok(Setup {
        sources: scattered_sources(slices, &xy, frame.lattice, opts.eps)?,
        planes: cuboid_planes(g, [-frame.shift[0], -frame.shift[1]]),
        grid: VoxelGrid::Cuboid(*g),
    })
}

/// Smallest gap between distinct coordinates, floored at `extent / (2 sqrt(n))`.
fn infer_pitch(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let extent = v.last()? - v.first()?;
    if extent <= 0.0 {
        return None;
    }
    let tol = extent * 1e-9;
    let gap = v
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > tol)
        .fold(f64::INFINITY, f64::min);
    Some(gap.max(extent / (2.0 * (values.len() as f64).sqrt())))
}

fn setup_nursd3(slices: &FrequencySlices, e: &ExplicitVoxels, opts: &ReconOptions) -> Result<Setup> {
    e.validate()?;
    let (xy, z) = planar_relay(slices)?;
    let pitch = match opts.lattice_pitch {
        Some(p) => {
            if !(p[0] > 0.0 && p[1] > 0.0) {
                return Err(Error::InvalidArgument("lattice pitch must be positive".into()));
            }
            p
        }
        None => {
            let mut p = [0.0; 2];
            for a in 0..2 {
                let vals: Vec<f64> = xy.iter().map(|q| q[a]).collect();
                p[a] = infer_pitch(&vals).ok_or_else(|| {
                    Error::InvalidGrid("cannot infer a lattice pitch from the relay; set lattice_pitch".into())
                })?;
            }
            p
        }
    };
    let base = [
        xy.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        xy.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
    ];
    let (lo, hi) = coord_range(e, base, pitch);
    let frame = scatter_frame(&xy, base, pitch, lo, hi, [0, 0], true, OFF_LATTICE_MARGIN + opts.extra_padding, z)?;
    Ok(Setup {
        planes: point_planes(&frame.lattice, e, opts.eps)?,
        sources: scattered_sources(slices, &xy, frame.lattice, opts.eps)?,
        grid: VoxelGrid::Explicit(e.clone()),
    })
}

fn setup_3d(slices: &FrequencySlices, g: &UniformGrid3D, alg: Algorithm, opts: &ReconOptions) -> Result<Setup> {
    g.validate()?;
    let xyz = slices.relay.positions();
    if let Some(s) = &opts.stage1_grid {
        s.validate()?;
        let lo = [s.x0, s.y0, s.z0];
        let hi = [
            s.x0 + (s.nx - 1) as f64 * s.dx,
            s.y0 + (s.ny - 1) as f64 * s.dy,
            s.z0 + (s.nz - 1) as f64 * s.dz,
        ];
        for p in &xyz {
            for a in 0..3 {
                let tol = 1e-9 * (hi[a] - lo[a]).abs().max(1.0);
                if p[a] < lo[a] - tol || p[a] > hi[a] + tol {
                    return Err(Error::InvalidGrid(format!(
                        "relay point {p:?} lies outside the stage-one grid"
                    )));
                }
            }
        }
    }
    let z0 = xyz.iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
    let z_min = xyz.iter().map(|p| p[2]).fold(f64::INFINITY, f64::min);
    let span = z0 - z_min;
    let pitch = [g.dx, g.dy];
    let margin = [
        (span / g.dx).ceil() as usize + 1,
        (span / g.dy).ceil() as usize + 1,
    ];
    let xy: Vec<[f64; 2]> = xyz.iter().map(|p| [p[0], p[1]]).collect();
    let frame = scatter_frame(
        &xy,
        [g.x0, g.y0],
        pitch,
        [0.0, 0.0],
        [(g.nx - 1) as f64, (g.ny - 1) as f64],
        margin,
        alg == Algorithm::Nursd3d,
        opts.extra_padding,
        z0,
    )?;
    let sources = if alg == Algorithm::Rsd3d {
        let w_max = slices.frequencies.iter().cloned().fold(0.0, f64::max);
        let lambda_min = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / w_max;
        let dz = opts
            .stage1_dz
            .or(opts.stage1_grid.as_ref().map(|s| s.dz))
            .unwrap_or_else(|| g.dx.min(g.dy).min(lambda_min / 8.0));
        stage1::splat_sources(slices, &xyz, frame.lattice, z0, dz, opts.splat)?
    } else {
        stage1::nufft_sources(slices, &xyz, frame.lattice, z0, opts.eps)?
    };
    Ok(Setup {
        sources,
        planes: cuboid_planes(g, [-frame.shift[0], -frame.shift[1]]),
        grid: VoxelGrid::Cuboid(*g),
    })
}

//! Grids, point lists, relay and voxel geometry, measurements and volumes.
//!
//! Every array in the crate is row-major with x varying fastest, then y,
//! then z (or depth plane).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Complex64;

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be finite")))
    }
}

/// A uniform lattice on a plane of constant z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid2D {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub x0: f64,
    pub y0: f64,
    pub z: f64,
}

impl UniformGrid2D {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, x0: f64, y0: f64, z: f64) -> Result<Self> {
        let g = Self {
            nx,
            ny,
            dx,
            dy,
            x0,
            y0,
            z,
        };
        g.validate()?;
        Ok(g)
    }

    /// A square grid of `n` samples per side centered on the origin of the plane.
    pub fn centered(n: usize, spacing: f64, z: f64) -> Result<Self> {
        let half = (n as f64 - 1.0) * spacing / 2.0;
        Self::new(n, n, spacing, spacing, -half, -half, z)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidGrid(format!(
                "grid counts must be positive, got {}x{}",
                self.nx, self.ny
            )));
        }
        check_finite(&[self.dx, self.dy, self.x0, self.y0, self.z], "grid parameters")?;
        if self.dx <= 0.0 || self.dy <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "grid spacing must be positive, got ({}, {})",
                self.dx, self.dy
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn position(&self, m: usize, n: usize) -> [f64; 3] {
        [
            self.x0 + m as f64 * self.dx,
            self.y0 + n as f64 * self.dy,
            self.z,
        ]
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        let mut out = Vec::with_capacity(self.len());
        for n in 0..self.ny {
            for m in 0..self.nx {
                out.push(self.position(m, n));
            }
        }
        out
    }

    /// Physical width along x covered by the samples.
    pub fn extent_x(&self) -> f64 {
        (self.nx as f64 - 1.0) * self.dx
    }

    pub fn extent_y(&self) -> f64 {
        (self.ny as f64 - 1.0) * self.dy
    }
}

/// Row-major physical coordinates of every sample of `g`.
pub fn grid_coordinates(g: &UniformGrid2D) -> PointList {
    let points = g.positions().into_iter().map(|p| [p[0], p[1], 0.0]).collect();
    PointList {
        points,
        dim: Dim::Planar,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    Planar,
    Spatial,
}

/// An ordered list of 2D or 3D points. Planar lists store z = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PointList {
    points: Vec<[f64; 3]>,
    dim: Dim,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PointStore {
    Planar(Vec<[f64; 2]>),
    Spatial(Vec<[f64; 3]>),
}

impl PointList {
    pub fn planar(points: Vec<[f64; 2]>) -> Result<Self> {
        Self::checked(points.into_iter().map(|p| [p[0], p[1], 0.0]).collect(), Dim::Planar)
    }

    pub fn spatial(points: Vec<[f64; 3]>) -> Result<Self> {
        Self::checked(points, Dim::Spatial)
    }

    fn checked(points: Vec<[f64; 3]>, dim: Dim) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("point list is empty".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("point list has non-finite coordinates".into()));
        }
        Ok(Self { points, dim })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// Lateral coordinates of every point.
    pub fn xy(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p[0], p[1]]).collect()
    }

    /// Points in 3D; planar lists report z = 0.
    pub fn xyz(&self) -> Vec<[f64; 3]> {
        self.points.clone()
    }

    /// Points in 3D with planar lists placed at height `z`.
    pub fn xyz_at(&self, z: f64) -> Vec<[f64; 3]> {
        match self.dim {
            Dim::Planar => self.points.iter().map(|p| [p[0], p[1], z]).collect(),
            Dim::Spatial => self.points.clone(),
        }
    }
}

impl Serialize for PointList {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.dim {
            Dim::Planar => PointStore::Planar(self.xy()).serialize(s),
            Dim::Spatial => PointStore::Spatial(self.points.clone()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for PointList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let list = match PointStore::deserialize(d)? {
            PointStore::Planar(p) => PointList::planar(p),
            PointStore::Spatial(p) => PointList::spatial(p),
        };
        list.map_err(serde::de::Error::custom)
    }
}

/// Where the relay wall was sampled for detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RelaySampling {
    Uniform(UniformGrid2D),
    NonUniformPlanar { points: PointList, z: f64 },
    NonPlanar { points: PointList },
}

impl RelaySampling {
    pub fn non_uniform(points: Vec<[f64; 2]>, z: f64) -> Result<Self> {
        check_finite(&[z], "relay plane height")?;
        Ok(RelaySampling::NonUniformPlanar {
            points: PointList::planar(points)?,
            z,
        })
    }

    pub fn non_planar(points: Vec<[f64; 3]>) -> Result<Self> {
        Ok(RelaySampling::NonPlanar {
            points: PointList::spatial(points)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RelaySampling::Uniform(g) => g.validate(),
            RelaySampling::NonUniformPlanar { points, z } => {
                check_finite(&[*z], "relay plane height")?;
                if points.dim() != Dim::Planar {
                    return Err(Error::InvalidArgument(
                        "non-uniform planar relay needs 2D points".into(),
                    ));
                }
                Ok(())
            }
            RelaySampling::NonPlanar { points } => {
                if points.dim() != Dim::Spatial {
                    return Err(Error::InvalidArgument("non-planar relay needs 3D points".into()));
                }
                Ok(())
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RelaySampling::Uniform(g) => g.len(),
            RelaySampling::NonUniformPlanar { points, .. } => points.len(),
            RelaySampling::NonPlanar { points } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        match self {
            RelaySampling::Uniform(g) => g.positions(),
            RelaySampling::NonUniformPlanar { points, z } => points.xyz_at(*z),
            RelaySampling::NonPlanar { points } => points.xyz(),
        }
    }

    /// Height at which planar illumination lists are placed.
    pub fn plane_z(&self) -> f64 {
        match self {
            RelaySampling::Uniform(g) => g.z,
            RelaySampling::NonUniformPlanar { z, .. } => *z,
            RelaySampling::NonPlanar { .. } => 0.0,
        }
    }

    /// 3D positions of an illumination list relative to this relay.
    pub fn illumination_positions(&self, illum: &PointList) -> Vec<[f64; 3]> {
        illum.xyz_at(self.plane_z())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            RelaySampling::Uniform(_) => "uniform",
            RelaySampling::NonUniformPlanar { .. } => "non-uniform planar",
            RelaySampling::NonPlanar { .. } => "non-planar",
        }
    }
}

/// Axis-aligned half-open box `[lo, hi)` in D dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox<const D: usize> {
    pub lo: [f64; D],
    pub hi: [f64; D],
}

impl<const D: usize> BoundingBox<D> {
    pub fn new(lo: [f64; D], hi: [f64; D]) -> Self {
        Self { lo, hi }
    }
}

/// Affine per-axis map from a bounding box onto `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusMap<const D: usize> {
    pub lo: [f64; D],
    pub hi: [f64; D],
}

impl<const D: usize> TorusMap<D> {
    pub fn apply(&self, p: [f64; D]) -> [f64; D] {
        let mut out = [0.0; D];
        for a in 0..D {
            let t = (p[a] - self.lo[a]) / (self.hi[a] - self.lo[a]);
            out[a] = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * t;
        }
        out
    }

    pub fn invert(&self, p: [f64; D]) -> [f64; D] {
        let mut out = [0.0; D];
        for a in 0..D {
            let t = (p[a] + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
            out[a] = self.lo[a] + t * (self.hi[a] - self.lo[a]);
        }
        out
    }
}

/// Map points inside `bounds` onto the torus `[-pi, pi)^D`.
///
/// Returns the mapped points and the map, whose `invert` undoes it.
pub fn rescale_to_torus<const D: usize>(
    points: &[[f64; D]],
    bounds: &BoundingBox<D>,
) -> Result<(Vec<[f64; D]>, TorusMap<D>)> {
    for a in 0..D {
        let (lo, hi) = (bounds.lo[a], bounds.hi[a]);
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::DegenerateAxis { axis: a, lo, hi });
        }
    }
    let map = TorusMap {
        lo: bounds.lo,
        hi: bounds.hi,
    };
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        for a in 0..D {
            if !(p[a] >= bounds.lo[a] && p[a] < bounds.hi[a]) {
                return Err(Error::OutOfRange {
                    axis: a,
                    value: p[a],
                    lo: bounds.lo[a],
                    hi: bounds.hi[a],
                });
            }
        }
        let mut q = map.apply(*p);
        // rounding can push a point just inside hi onto pi
        for v in q.iter_mut() {
            if *v >= std::f64::consts::PI {
                *v = std::f64::consts::PI - f64::EPSILON * 4.0;
            }
        }
        out.push(q);
    }
    Ok((out, map))
}

/// A regular box of voxels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid3D {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
}

impl UniformGrid3D {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nx: usize,
        ny: usize,
        nz: usize,
        dx: f64,
        dy: f64,
        dz: f64,
        x0: f64,
        y0: f64,
        z0: f64,
    ) -> Result<Self> {
        let g = Self {
            nx,
            ny,
            nz,
            dx,
            dy,
            dz,
            x0,
            y0,
            z0,
        };
        g.validate()?;
        Ok(g)
    }

    /// Lateral lattice identical to `relay`, with `nz` planes from `z0` at pitch `dz`.
    pub fn over(relay: &UniformGrid2D, nz: usize, z0: f64, dz: f64) -> Result<Self> {
        Self::new(
            relay.nx, relay.ny, nz, relay.dx, relay.dy, dz, relay.x0, relay.y0, z0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 {
            return Err(Error::InvalidGrid("voxel counts must be positive".into()));
        }
        check_finite(
            &[self.dx, self.dy, self.dz, self.x0, self.y0, self.z0],
            "voxel grid parameters",
        )?;
        if self.dx <= 0.0 || self.dy <= 0.0 || self.dz <= 0.0 {
            return Err(Error::InvalidGrid("voxel pitch must be positive".into()));
        }
        Ok(())
    }

    pub fn plane(&self, k: usize) -> UniformGrid2D {
        UniformGrid2D {
            nx: self.nx,
            ny: self.ny,
            dx: self.dx,
            dy: self.dy,
            x0: self.x0,
            y0: self.y0,
            z: self.depth(k),
        }
    }

    pub fn depth(&self, k: usize) -> f64 {
        self.z0 + k as f64 * self.dz
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Voxel planes whose lateral pitch grows with depth as `dx/alpha`, `dy/beta`.
///
/// Each plane keeps the base grid's sample counts and is centered on the
/// base sample with index `(nx/2, ny/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrustumGrid {
    pub base: UniformGrid2D,
    pub depths: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl FrustumGrid {
    pub fn new(base: UniformGrid2D, depths: Vec<f64>, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let f = Self {
            base,
            depths,
            alpha,
            beta,
        };
        f.validate()?;
        Ok(f)
    }

    /// Planes at `depths` with pitch growing linearly away from `depths[0]`.
    ///
    /// `alpha0` is the slope parameter: plane k has half-width
    /// `x_in + (z_k - z_first)/alpha0` where `x_in` is the base half-width.
    pub fn linear(base: UniformGrid2D, depths: Vec<f64>, alpha0: f64, beta0: f64) -> Result<Self> {
        if !(alpha0 > 0.0 && beta0 > 0.0) {
            return Err(Error::InvalidGrid("frustum slopes must be positive".into()));
        }
        let z_first = *depths
            .first()
            .ok_or_else(|| Error::InvalidGrid("frustum has no planes".into()))?;
        let hx = (base.nx as f64 * base.dx / 2.0).max(base.dx);
        let hy = (base.ny as f64 * base.dy / 2.0).max(base.dy);
        let alpha = depths
            .iter()
            .map(|z| hx / (hx + (z - z_first) / alpha0))
            .collect();
        let beta = depths
            .iter()
            .map(|z| hy / (hy + (z - z_first) / beta0))
            .collect();
        Self::new(base, depths, alpha, beta)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let n = self.depths.len();
        if n == 0 {
            return Err(Error::InvalidGrid("frustum has no planes".into()));
        }
        if self.alpha.len() != n || self.beta.len() != n {
            return Err(Error::InvalidGrid("frustum needs one (alpha, beta) per plane".into()));
        }
        check_finite(&self.depths, "frustum depths")?;
        for (&a, &b) in self.alpha.iter().zip(&self.beta) {
            if !(a > 0.0 && a <= 1.0 && b > 0.0 && b <= 1.0) {
                return Err(Error::InvalidGrid(format!(
                    "frustum scale factors must lie in (0, 1], got ({a}, {b})"
                )));
            }
        }
        Ok(())
    }

    pub fn center_index(&self) -> (usize, usize) {
        (self.base.nx / 2, self.base.ny / 2)
    }

    /// Physical position of the plane center.
    pub fn center(&self) -> (f64, f64) {
        let (cx, cy) = self.center_index();
        (
            self.base.x0 + cx as f64 * self.base.dx,
            self.base.y0 + cy as f64 * self.base.dy,
        )
    }

    pub fn pitch(&self, k: usize) -> (f64, f64) {
        (self.base.dx / self.alpha[k], self.base.dy / self.beta[k])
    }

    pub fn plane(&self, k: usize) -> Vec<[f64; 3]> {
        let (cx, cy) = self.center();
        let (ci, cj) = self.center_index();
        let (px, py) = self.pitch(k);
        let mut out = Vec::with_capacity(self.base.len());
        for j in 0..self.base.ny {
            for i in 0..self.base.nx {
                out.push([
                    cx + (i as f64 - ci as f64) * px,
                    cy + (j as f64 - cj as f64) * py,
                    self.depths[k],
                ]);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.base.len() * self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One depth plane of an explicit voxel list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelPlane {
    pub z: f64,
    pub points: Vec<[f64; 2]>,
}

/// Arbitrary voxels grouped by depth plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitVoxels {
    pub planes: Vec<VoxelPlane>,
}

impl ExplicitVoxels {
    pub fn new(planes: Vec<VoxelPlane>) -> Result<Self> {
        let e = Self { planes };
        e.validate()?;
        Ok(e)
    }

    /// Group 3D points into planes by exact z, keeping first-seen plane order.
    pub fn from_points(points: &[[f64; 3]]) -> Result<Self> {
        let mut planes: Vec<VoxelPlane> = Vec::new();
        for p in points {
            match planes.iter_mut().find(|pl| pl.z == p[2]) {
                Some(pl) => pl.points.push([p[0], p[1]]),
                None => planes.push(VoxelPlane {
                    z: p[2],
                    points: vec![[p[0], p[1]]],
                }),
            }
        }
        Self::new(planes)
    }

    /// Every voxel of a cuboid, one group per depth.
    pub fn from_cuboid(g: &UniformGrid3D) -> Self {
        let planes = (0..g.nz)
            .map(|k| VoxelPlane {
                z: g.depth(k),
                points: g.plane(k).positions().iter().map(|p| [p[0], p[1]]).collect(),
            })
            .collect();
        Self { planes }
    }

    pub fn validate(&self) -> Result<()> {
        if self.planes.is_empty() {
            return Err(Error::InvalidGrid("explicit voxel list has no planes".into()));
        }
        for (k, pl) in self.planes.iter().enumerate() {
            if pl.points.is_empty() {
                return Err(Error::EmptyTargets(k));
            }
            check_finite(&[pl.z], "voxel depth")?;
            if pl.points.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("voxel list has non-finite coordinates".into()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.planes.iter().map(|p| p.points.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The set of voxels a reconstruction is evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum VoxelGrid {
    Cuboid(UniformGrid3D),
    Frustum(FrustumGrid),
    Explicit(ExplicitVoxels),
}

impl VoxelGrid {
    pub fn validate(&self) -> Result<()> {
        match self {
            VoxelGrid::Cuboid(g) => g.validate(),
            VoxelGrid::Frustum(f) => f.validate(),
            VoxelGrid::Explicit(e) => e.validate(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            VoxelGrid::Cuboid(g) => g.len(),
            VoxelGrid::Frustum(f) => f.len(),
            VoxelGrid::Explicit(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane_count(&self) -> usize {
        match self {
            VoxelGrid::Cuboid(g) => g.nz,
            VoxelGrid::Frustum(f) => f.depths.len(),
            VoxelGrid::Explicit(e) => e.planes.len(),
        }
    }

    /// Positions of the voxels of plane `k`, in storage order.
    pub fn plane_positions(&self, k: usize) -> Vec<[f64; 3]> {
        match self {
            VoxelGrid::Cuboid(g) => g.plane(k).positions(),
            VoxelGrid::Frustum(f) => f.plane(k),
            VoxelGrid::Explicit(e) => {
                let pl = &e.planes[k];
                pl.points.iter().map(|p| [p[0], p[1], pl.z]).collect()
            }
        }
    }

    /// All voxel positions in storage order.
    pub fn positions(&self) -> Vec<[f64; 3]> {
        (0..self.plane_count())
            .flat_map(|k| self.plane_positions(k))
            .collect()
    }

    /// Lateral sample counts when the grid is a stack of equal planes.
    pub fn lateral_shape(&self) -> Option<(usize, usize)> {
        match self {
            VoxelGrid::Cuboid(g) => Some((g.nx, g.ny)),
            VoxelGrid::Frustum(f) => Some((f.base.nx, f.base.ny)),
            VoxelGrid::Explicit(_) => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            VoxelGrid::Cuboid(_) => "cuboid",
            VoxelGrid::Frustum(_) => "frustum",
            VoxelGrid::Explicit(_) => "explicit",
        }
    }
}

/// Photon-count histograms for every illumination/detection pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientMeasurement {
    pub relay: RelaySampling,
    pub illuminations: PointList,
    pub n_bins: usize,
    pub dt: f64,
    pub t0: f64,
    /// `[illumination][detection][bin]`
    pub histograms: Vec<f64>,
}

impl TransientMeasurement {
    pub fn new(
        relay: RelaySampling,
        illuminations: PointList,
        n_bins: usize,
        dt: f64,
        t0: f64,
        histograms: Vec<f64>,
    ) -> Result<Self> {
        let m = Self {
            relay,
            illuminations,
            n_bins,
            dt,
            t0,
            histograms,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.relay.validate()?;
        if self.n_bins == 0 {
            return Err(Error::InvalidArgument("measurement needs at least one bin".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || !self.t0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bin width must be positive and finite, got {}",
                self.dt
            )));
        }
        let expected = self.n_illum() * self.n_detect() * self.n_bins;
        if self.histograms.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "histogram array has {} values, expected {expected}",
                self.histograms.len()
            )));
        }
        if self.histograms.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("histograms"));
        }
        if self.histograms.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument("histogram counts must be non-negative".into()));
        }
        Ok(())
    }

    pub fn n_illum(&self) -> usize {
        self.illuminations.len()
    }

    pub fn n_detect(&self) -> usize {
        self.relay.len()
    }

    pub fn histogram(&self, p: usize, c: usize) -> &[f64] {
        let start = (p * self.n_detect() + c) * self.n_bins;
        &self.histograms[start..start + self.n_bins]
    }
}

/// Phasor-field coefficients per illumination, detection point and frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySlices {
    pub relay: RelaySampling,
    pub illuminations: PointList,
    /// Angular frequencies in rad/s, strictly increasing.
    pub frequencies: Vec<f64>,
    /// `[illumination][detection][frequency]`
    pub coefficients: Vec<Complex64>,
}

impl FrequencySlices {
    pub fn new(
        relay: RelaySampling,
        illuminations: PointList,
        frequencies: Vec<f64>,
        coefficients: Vec<Complex64>,
    ) -> Result<Self> {
        let s = Self {
            relay,
            illuminations,
            frequencies,
            coefficients,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.relay.validate()?;
        if self.frequencies.is_empty() {
            return Err(Error::InvalidArgument("no frequencies".into()));
        }
        if self.frequencies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("frequencies must be strictly increasing".into()));
        }
        let expected = self.n_illum() * self.n_detect() * self.n_freq();
        if self.coefficients.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "coefficient array has {} values, expected {expected}",
                self.coefficients.len()
            )));
        }
        if self.coefficients.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("frequency coefficients"));
        }
        Ok(())
    }

    pub fn n_illum(&self) -> usize {
        self.illuminations.len()
    }

    pub fn n_detect(&self) -> usize {
        self.relay.len()
    }

    pub fn n_freq(&self) -> usize {
        self.frequencies.len()
    }

    pub fn at(&self, p: usize, c: usize, f: usize) -> Complex64 {
        self.coefficients[(p * self.n_detect() + c) * self.n_freq() + f]
    }

    /// Wavefront over all detection points for one illumination and frequency.
    pub fn wavefront(&self, p: usize, f: usize) -> Vec<Complex64> {
        (0..self.n_detect()).map(|c| self.at(p, c, f)).collect()
    }

    /// Same slices with every coefficient scaled by `s`.
    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.coefficients.iter_mut().for_each(|c| *c *= s);
        out
    }
}

/// A reconstructed complex field over a voxel grid, optionally one per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionVolume {
    pub grid: VoxelGrid,
    /// `[frame][voxel]` when `times` is set, `[voxel]` otherwise.
    pub field: Vec<Complex64>,
    pub times: Option<Vec<f64>>,
}

impl ReconstructionVolume {
    pub fn n_frames(&self) -> usize {
        self.times.as_ref().map_or(1, |t| t.len())
    }

    pub fn frame(&self, i: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.field[i * n..(i + 1) * n]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.field.iter().map(|c| c.norm()).collect()
    }

    /// Index of the voxel with the largest magnitude in frame `i`.
    pub fn argmax(&self, i: usize) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (k, c) in self.frame(i).iter().enumerate() {
            let v = c.norm();
            if v > best_v {
                best_v = v;
                best = k;
            }
        }
        best
    }

    pub fn argmax_position(&self) -> [f64; 3] {
        let k = self.argmax(0);
        self.grid.positions()[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn single_sample_grid() {
        let g = UniformGrid2D::new(1, 1, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(grid_coordinates(&g).xy(), vec![[0.0, 0.0]]);
    }

    #[test]
    fn two_by_two_grid_is_row_major() {
        let g = UniformGrid2D::new(2, 2, 0.5, 0.5, -0.25, -0.25, 0.0).unwrap();
        assert_eq!(
            grid_coordinates(&g).xy(),
            vec![[-0.25, -0.25], [0.25, -0.25], [-0.25, 0.25], [0.25, 0.25]]
        );
    }

    #[test]
    fn wall_sized_grid() {
        let g = UniformGrid2D::new(190, 190, 0.01, 0.01, 0.0, 0.0, 0.0).unwrap();
        let pts = grid_coordinates(&g).xy();
        assert_eq!(pts.len(), 36100);
        let last = pts.last().unwrap();
        assert!((last[0] - 1.89).abs() < 1e-12 && (last[1] - 1.89).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(UniformGrid2D::new(0, 3, 1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(UniformGrid2D::new(3, 3, 0.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(UniformGrid2D::new(3, 3, 1.0, f64::NAN, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn torus_identity_box() {
        let b = BoundingBox::new([-PI, -PI], [PI, PI]);
        let pts = [[-PI, -PI], [0.5, -2.0], [3.0, 1.0]];
        let (out, _) = rescale_to_torus(&pts, &b).unwrap();
        for (p, q) in pts.iter().zip(&out) {
            assert!((p[0] - q[0]).abs() < 1e-15 && (p[1] - q[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn torus_center_and_worked_point() {
        let b = BoundingBox::new([0.0, 0.0], [1.9, 1.9]);
        let (out, _) = rescale_to_torus(&[[0.95, 0.95], [0.95, 0.475]], &b).unwrap();
        assert!(out[0][0].abs() < 1e-15 && out[0][1].abs() < 1e-15);
        assert!(out[1][0].abs() < 1e-15);
        assert!((out[1][1] + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn torus_rejects_degenerate_and_outside() {
        let b = BoundingBox::new([0.0, 1.0], [1.0, 1.0]);
        assert!(matches!(
            rescale_to_torus(&[[0.5, 1.0]], &b),
            Err(Error::DegenerateAxis { axis: 1, .. })
        ));
        let b = BoundingBox::new([0.0], [1.0]);
        assert!(matches!(
            rescale_to_torus(&[[1.0]], &b),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn frustum_pitch_matches_scale() {
        let base = UniformGrid2D::centered(8, 0.01, 0.0).unwrap();
        let f = FrustumGrid::linear(base, vec![0.5, 1.0, 1.5], 0.5, 0.25).unwrap();
        for k in 0..3 {
            let (px, py) = f.pitch(k);
            assert_eq!(px, base.dx / f.alpha[k]);
            assert_eq!(py, base.dy / f.beta[k]);
            let pl = f.plane(k);
            assert!(((pl[1][0] - pl[0][0]) - px).abs() < 1e-12);
            assert!(((pl[8][1] - pl[0][1]) - py).abs() < 1e-12);
        }
        assert_eq!(f.alpha[0], 1.0);
        assert!(f.alpha[2] < f.alpha[1]);
    }

    #[test]
    fn explicit_groups_reject_empty() {
        let e = ExplicitVoxels::new(vec![VoxelPlane {
            z: 1.0,
            points: vec![],
        }]);
        assert!(matches!(e, Err(Error::EmptyTargets(0))));
    }

    #[test]
    fn explicit_from_points_groups_by_depth() {
        let e = ExplicitVoxels::from_points(&[[0.0, 0.0, 1.0], [1.0, 0.0, 2.0], [2.0, 0.0, 1.0]])
            .unwrap();
        assert_eq!(e.planes.len(), 2);
        assert_eq!(e.planes[0].points.len(), 2);
    }

    #[test]
    fn spatial_points_round_trip() {
        let pts = vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]];
        let l = PointList::spatial(pts.clone()).unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l.xyz(), pts);
        let json = serde_json::to_string(&l).unwrap();
        let back: PointList = serde_json::from_str(&json).unwrap();
        assert_eq!(back, l);
    }

    proptest! {
        #[test]
        fn torus_round_trip(
            lo in -5.0f64..5.0, w in 0.01f64..10.0,
            t in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 1..20),
        ) {
            let b = BoundingBox::new([lo, lo - 1.0, lo * 0.5], [lo + w, lo - 1.0 + 2.0 * w, lo * 0.5 + 0.5 * w]);
            let pts: Vec<[f64; 3]> = t.iter().map(|&(a, c, d)| {
                [lo + a * w * 0.999, lo - 1.0 + c * 2.0 * w * 0.999, lo * 0.5 + d * 0.5 * w * 0.999]
            }).collect();
            let (out, map) = rescale_to_torus(&pts, &b).unwrap();
            for (p, q) in pts.iter().zip(&out) {
                for a in 0..3 {
                    prop_assert!(q[a] >= -PI && q[a] < PI);
                }
                let back = map.invert(*q);
                for a in 0..3 {
                    prop_assert!((back[a] - p[a]).abs() < 1e-12);
                }
            }
        }
    }
}

//! Binary `NLS1` containers for measurements and volumes, JSON sidecars
//! and PGM images.
//!
//! All numbers are little-endian. A measurement file is
//!
//! ```text
//! "NLS1" u32 version u32 n_illum u32 n_detect u32 n_bins f64 dt f64 t0
//! u8 relay tag, relay block, illumination block, f32 histograms
//! ```
//!
//! Relay tag 0 is a uniform grid (`u32 nx, ny`, `f64 dx, dy, x0, y0, z`),
//! tag 1 a planar point list (`u32 L`, `f64 z`, `L x 2 f64`), tag 2 a 3D
//! point list (`u32 L`, `L x 3 f64`). Illuminations are `u32 L`, `L x 3 f64`.
//!
//! Volumes reuse the header with `n_illum = frames`, `n_detect = voxels`,
//! `n_bins = 2` (real, imaginary), `dt` the frame spacing (0 for a static
//! volume) and `t0` the first frame time, followed by a grid tag
//! (0x10 cuboid, 0x11 frustum, 0x12 explicit), the grid block and
//! `f32` pairs in `[frame][voxel]` order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    ExplicitVoxels, FrustumGrid, PointList, ReconstructionVolume, RelaySampling, TransientMeasurement,
    UniformGrid2D, UniformGrid3D, VoxelGrid, VoxelPlane,
};
use crate::Complex64;

pub const MAGIC: [u8; 4] = *b"NLS1";
pub const VERSION: u32 = 1;

const RELAY_UNIFORM: u8 = 0;
const RELAY_PLANAR: u8 = 1;
const RELAY_SPATIAL: u8 = 2;
const GRID_CUBOID: u8 = 0x10;
const GRID_FRUSTUM: u8 = 0x11;
const GRID_EXPLICIT: u8 = 0x12;

struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.inner.write_all(&[v])?)
    }
    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{v} does not fit in u32")))?;
        Ok(self.inner.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.inner.write_all(&v.to_le_bytes())?)
    }
    fn f32(&mut self, v: f32) -> Result<()> {
        Ok(self.inner.write_all(&v.to_le_bytes())?)
    }
}

struct Reader<R: Read> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Truncated(what),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }
    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.bytes::<1>(what)?[0])
    }
    fn u32(&mut self, what: &'static str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.bytes(what)?) as usize)
    }
    fn f64(&mut self, what: &'static str) -> Result<f64> {
        let v = f64::from_le_bytes(self.bytes(what)?);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(what))
        }
    }
    fn f32(&mut self, what: &'static str) -> Result<f32> {
        let v = f32::from_le_bytes(self.bytes(what)?);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(what))
        }
    }
}

struct Header {
    a: usize,
    b: usize,
    c: usize,
    dt: f64,
    t0: f64,
}

fn write_header<W: Write>(w: &mut Writer<W>, h: &Header) -> Result<()> {
    w.inner.write_all(&MAGIC)?;
    w.u32(VERSION as usize)?;
    w.u32(h.a)?;
    w.u32(h.b)?;
    w.u32(h.c)?;
    w.f64(h.dt)?;
    w.f64(h.t0)
}

fn read_header<R: Read>(r: &mut Reader<R>) -> Result<Header> {
    let magic = r.bytes::<4>("magic")?;
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let version = r.u32("version")? as u32;
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    Ok(Header {
        a: r.u32("header counts")?,
        b: r.u32("header counts")?,
        c: r.u32("header counts")?,
        dt: r.f64("header time axis")?,
        t0: r.f64("header time axis")?,
    })
}

fn write_grid2<W: Write>(w: &mut Writer<W>, g: &UniformGrid2D) -> Result<()> {
    w.u32(g.nx)?;
    w.u32(g.ny)?;
    for v in [g.dx, g.dy, g.x0, g.y0, g.z] {
        w.f64(v)?;
    }
    Ok(())
}

fn read_grid2<R: Read>(r: &mut Reader<R>) -> Result<UniformGrid2D> {
    let (nx, ny) = (r.u32("grid")?, r.u32("grid")?);
    let mut v = [0.0; 5];
    for x in v.iter_mut() {
        *x = r.f64("grid")?;
    }
    UniformGrid2D::new(nx, ny, v[0], v[1], v[2], v[3], v[4])
}

/// Write a measurement container to `path` and a JSON sidecar next to it.
pub fn write_dataset(m: &TransientMeasurement, path: impl AsRef<Path>) -> Result<()> {
    m.validate()?;
    let path = path.as_ref();
    let mut w = Writer {
        inner: BufWriter::new(File::create(path)?),
    };
    write_header(
        &mut w,
        &Header {
            a: m.n_illum(),
            b: m.n_detect(),
            c: m.n_bins,
            dt: m.dt,
            t0: m.t0,
        },
    )?;
    match &m.relay {
        RelaySampling::Uniform(g) => {
            w.u8(RELAY_UNIFORM)?;
            write_grid2(&mut w, g)?;
        }
        RelaySampling::NonUniformPlanar { points, z } => {
            w.u8(RELAY_PLANAR)?;
            w.u32(points.len())?;
            w.f64(*z)?;
            for p in points.xy() {
                w.f64(p[0])?;
                w.f64(p[1])?;
            }
        }
        RelaySampling::NonPlanar { points } => {
            w.u8(RELAY_SPATIAL)?;
            w.u32(points.len())?;
            for p in points.xyz() {
                p.iter().try_for_each(|&v| w.f64(v))?;
            }
        }
    }
    w.u32(m.illuminations.len())?;
    for p in m.illuminations.xyz() {
        p.iter().try_for_each(|&v| w.f64(v))?;
    }
    for &h in &m.histograms {
        w.f32(h as f32)?;
    }
    w.inner.flush()?;
    write_sidecar(m, path)
}

/// Read a measurement container.
///
/// Histograms are stored as `f32`; values read back are the exact `f64`
/// widenings of those, so a read, write, read cycle is bit-exact.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<TransientMeasurement> {
    let mut r = Reader {
        inner: BufReader::new(File::open(path)?),
    };
    let h = read_header(&mut r)?;
    let relay = match r.u8("relay tag")? {
        RELAY_UNIFORM => RelaySampling::Uniform(read_grid2(&mut r)?),
        RELAY_PLANAR => {
            let n = r.u32("relay points")?;
            let z = r.f64("relay points")?;
            let mut pts = Vec::with_capacity(n.min(1 << 24));
            for _ in 0..n {
                pts.push([r.f64("relay points")?, r.f64("relay points")?]);
            }
            RelaySampling::non_uniform(pts, z)?
        }
        RELAY_SPATIAL => {
            let n = r.u32("relay points")?;
            let mut pts = Vec::with_capacity(n.min(1 << 24));
            for _ in 0..n {
                pts.push([r.f64("relay points")?, r.f64("relay points")?, r.f64("relay points")?]);
            }
            RelaySampling::non_planar(pts)?
        }
        t => return Err(Error::UnknownKind(t)),
    };
    let n = r.u32("illuminations")?;
    let mut pts = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        pts.push([r.f64("illuminations")?, r.f64("illuminations")?, r.f64("illuminations")?]);
    }
    let illuminations = match relay {
        RelaySampling::NonPlanar { .. } => PointList::spatial(pts)?,
        _ => PointList::planar(pts.iter().map(|p| [p[0], p[1]]).collect())?,
    };
    if n != h.a || relay.len() != h.b {
        return Err(Error::InvalidArgument(format!(
            "header declares {}x{} pairs, geometry has {}x{}",
            h.a,
            h.b,
            n,
            relay.len()
        )));
    }
    let total = h.a * h.b * h.c;
    let mut histograms = Vec::with_capacity(total.min(1 << 28));
    for _ in 0..total {
        histograms.push(r.f32("histogram payload")? as f64);
    }
    TransientMeasurement::new(relay, illuminations, h.c, h.dt, h.t0, histograms)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    format: &'static str,
    version: u32,
    n_illum: usize,
    n_detect: usize,
    n_bins: usize,
    dt: f64,
    t0: f64,
    relay: &'a RelaySampling,
    illuminations: &'a PointList,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn write_sidecar(m: &TransientMeasurement, path: &Path) -> Result<()> {
    let side = Sidecar {
        format: "NLS1",
        version: VERSION,
        n_illum: m.n_illum(),
        n_detect: m.n_detect(),
        n_bins: m.n_bins,
        dt: m.dt,
        t0: m.t0,
        relay: &m.relay,
        illuminations: &m.illuminations,
    };
    let f = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(f, &side)?;
    Ok(())
}

/// Write a reconstruction volume as complex `f32` pairs.
///
/// Video time axes are stored as first time and spacing, so they must be
/// evenly spaced.
pub fn write_volume(v: &ReconstructionVolume, path: impl AsRef<Path>) -> Result<()> {
    v.grid.validate()?;
    let (frame_dt, t_first) = match &v.times {
        None => (0.0, 0.0),
        Some(t) if t.is_empty() => return Err(Error::InvalidArgument("empty time axis".into())),
        Some(t) => {
            let step = if t.len() > 1 { t[1] - t[0] } else { 0.0 };
            let even = t
                .iter()
                .enumerate()
                .all(|(i, &x)| (x - (t[0] + i as f64 * step)).abs() <= 1e-9 * step.abs().max(1e-30));
            if !even {
                return Err(Error::InvalidArgument("volume time axis must be evenly spaced".into()));
            }
            (step, t[0])
        }
    };
    if v.field.len() != v.n_frames() * v.grid.len() {
        return Err(Error::InvalidArgument("field length does not match grid".into()));
    }
    let mut w = Writer {
        inner: BufWriter::new(File::create(path)?),
    };
    write_header(
        &mut w,
        &Header {
            a: v.n_frames(),
            b: v.grid.len(),
            c: 2,
            dt: frame_dt,
            t0: t_first,
        },
    )?;
    match &v.grid {
        VoxelGrid::Cuboid(g) => {
            w.u8(GRID_CUBOID)?;
            for n in [g.nx, g.ny, g.nz] {
                w.u32(n)?;
            }
            for x in [g.dx, g.dy, g.dz, g.x0, g.y0, g.z0] {
                w.f64(x)?;
            }
        }
        VoxelGrid::Frustum(f) => {
            w.u8(GRID_FRUSTUM)?;
            for n in [f.base.nx, f.base.ny, f.depths.len()] {
                w.u32(n)?;
            }
            for x in [f.base.dx, f.base.dy, f.base.x0, f.base.y0] {
                w.f64(x)?;
            }
            for k in 0..f.depths.len() {
                w.f64(f.depths[k])?;
                w.f64(f.alpha[k])?;
                w.f64(f.beta[k])?;
            }
        }
        VoxelGrid::Explicit(e) => {
            w.u8(GRID_EXPLICIT)?;
            w.u32(e.planes.len())?;
            for pl in &e.planes {
                w.f64(pl.z)?;
                w.u32(pl.points.len())?;
                for p in &pl.points {
                    w.f64(p[0])?;
                    w.f64(p[1])?;
                }
            }
        }
    }
    for c in &v.field {
        w.f32(c.re as f32)?;
        w.f32(c.im as f32)?;
    }
    w.inner.flush()?;
    Ok(())
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<ReconstructionVolume> {
    let mut r = Reader {
        inner: BufReader::new(File::open(path)?),
    };
    let h = read_header(&mut r)?;
    let grid = match r.u8("grid tag")? {
        GRID_CUBOID => {
            let n: Vec<usize> = (0..3).map(|_| r.u32("grid")).collect::<Result<_>>()?;
            let x: Vec<f64> = (0..6).map(|_| r.f64("grid")).collect::<Result<_>>()?;
            VoxelGrid::Cuboid(UniformGrid3D::new(n[0], n[1], n[2], x[0], x[1], x[2], x[3], x[4], x[5])?)
        }
        GRID_FRUSTUM => {
            let n: Vec<usize> = (0..3).map(|_| r.u32("grid")).collect::<Result<_>>()?;
            let x: Vec<f64> = (0..4).map(|_| r.f64("grid")).collect::<Result<_>>()?;
            let base = UniformGrid2D::new(n[0], n[1], x[0], x[1], x[2], x[3], 0.0)?;
            let (mut depths, mut alpha, mut beta) = (Vec::new(), Vec::new(), Vec::new());
            for _ in 0..n[2] {
                depths.push(r.f64("grid planes")?);
                alpha.push(r.f64("grid planes")?);
                beta.push(r.f64("grid planes")?);
            }
            let base = UniformGrid2D { z: depths.first().copied().unwrap_or(0.0), ..base };
            VoxelGrid::Frustum(FrustumGrid::new(base, depths, alpha, beta)?)
        }
        GRID_EXPLICIT => {
            let np = r.u32("grid")?;
            let mut planes = Vec::with_capacity(np.min(1 << 20));
            for _ in 0..np {
                let z = r.f64("grid planes")?;
                let n = r.u32("grid planes")?;
                let mut points = Vec::with_capacity(n.min(1 << 24));
                for _ in 0..n {
                    points.push([r.f64("grid planes")?, r.f64("grid planes")?]);
                }
                planes.push(VoxelPlane { z, points });
            }
            VoxelGrid::Explicit(ExplicitVoxels::new(planes)?)
        }
        t => return Err(Error::UnknownKind(t)),
    };
    if h.b != grid.len() || h.c != 2 {
        return Err(Error::InvalidArgument("volume header does not match its grid".into()));
    }
    let mut field = Vec::with_capacity((h.a * h.b).min(1 << 28));
    for _ in 0..h.a * h.b {
        let re = r.f32("volume payload")? as f64;
        let im = r.f32("volume payload")? as f64;
        field.push(Complex64::new(re, im));
    }
    let times = if h.dt > 0.0 || h.a > 1 {
        Some((0..h.a).map(|i| h.t0 + i as f64 * h.dt).collect())
    } else {
        None
    };
    Ok(ReconstructionVolume { grid, field, times })
}

/// Write a grayscale image as binary PGM, scaled so the maximum is 255.
///
/// Row 0 of the file is the first row of `values` (smallest y).
pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, values: &[f64]) -> Result<()> {
    if values.len() != width * height || width == 0 {
        return Err(Error::InvalidArgument("image size does not match its data".into()));
    }
    let max = values.iter().cloned().fold(0.0, f64::max);
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{width} {height}\n255\n")?;
    let bytes: Vec<u8> = values
        .iter()
        .map(|&v| {
            if max > 0.0 {
                (v.max(0.0) / max * 255.0).round().min(255.0) as u8
            } else {
                0
            }
        })
        .collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Read a binary PGM written by [`write_pgm`].
pub fn read_pgm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>)> {
    let mut data = Vec::new();
    File::open(path)?.read_to_end(&mut data)?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Truncated("pgm header"));
        }
        fields.push(String::from_utf8_lossy(&data[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(Error::InvalidArgument("not a binary PGM".into()));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| Error::InvalidArgument("bad pgm header".into()));
    let (w, h) = (parse(&fields[1])?, parse(&fields[2])?);
    let pixels = data.get(pos + 1..pos + 1 + w * h).ok_or(Error::Truncated("pgm pixels"))?;
    Ok((w, h, pixels.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ExplicitVoxels;

    fn sample_measurement(relay: RelaySampling) -> TransientMeasurement {
        let illum = match relay {
            RelaySampling::NonPlanar { .. } => PointList::spatial(vec![[0.0, 0.1, 0.2], [0.3, 0.1, 0.0]]).unwrap(),
            _ => PointList::planar(vec![[0.0, 0.1], [0.3, 0.1]]).unwrap(),
        };
        let n = 2 * relay.len() * 5;
        let hist = (0..n).map(|i| (i as f64 * 0.37).sin().abs() * 1e-3 + 1.0 / 3.0).collect();
        TransientMeasurement::new(relay, illum, 5, 16e-12, 1e-9, hist).unwrap()
    }

    fn relays() -> Vec<RelaySampling> {
        vec![
            RelaySampling::Uniform(UniformGrid2D::new(3, 2, 0.1, 0.2, -0.1, -0.2, 0.05).unwrap()),
            RelaySampling::non_uniform(vec![[0.0, 0.0], [0.1, 0.3], [0.2, -0.1]], 0.5).unwrap(),
            RelaySampling::non_planar(vec![[0.0, 0.0, 0.1], [0.1, 0.3, 0.0]]).unwrap(),
        ]
    }

    #[test]
    fn dataset_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        for (i, relay) in relays().into_iter().enumerate() {
            let m = sample_measurement(relay);
            let p = dir.path().join(format!("m{i}.nls1"));
            write_dataset(&m, &p).unwrap();
            let a = read_dataset(&p).unwrap();
            assert_eq!(a.relay, m.relay);
            assert_eq!(a.illuminations, m.illuminations);
            assert_eq!((a.n_bins, a.dt, a.t0), (m.n_bins, m.dt, m.t0));
            for (x, y) in a.histograms.iter().zip(&m.histograms) {
                assert_eq!(*x, *y as f32 as f64);
            }
            let q = dir.path().join(format!("m{i}b.nls1"));
            write_dataset(&a, &q).unwrap();
            let b = read_dataset(&q).unwrap();
            assert_eq!(a, b);
            assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
            assert!(sidecar_path(&p).exists());
        }
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.nls1");
        write_dataset(&sample_measurement(relays().remove(0)), &p).unwrap();
        let good = std::fs::read(&p).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_dataset(&p), Err(Error::BadMagic(_))));

        let mut bad = good.clone();
        bad[4] = 2;
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_dataset(&p), Err(Error::VersionMismatch { found: 2, .. })));

        std::fs::write(&p, &good[..good.len() - 3]).unwrap();
        assert!(matches!(read_dataset(&p), Err(Error::Truncated("histogram payload"))));

        let mut bad = good.clone();
        let n = bad.len();
        bad[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_dataset(&p), Err(Error::NonFinite(_))));

        assert!(matches!(read_dataset(dir.path().join("missing")), Err(Error::Io(_))));
    }

    #[test]
    fn volume_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let base = UniformGrid2D::centered(4, 0.1, 1.0).unwrap();
        let grids = vec![
            VoxelGrid::Cuboid(UniformGrid3D::over(&base, 3, 1.0, 0.1).unwrap()),
            VoxelGrid::Frustum(FrustumGrid::linear(base, vec![1.0, 1.5], 0.5, 0.5).unwrap()),
            VoxelGrid::Explicit(ExplicitVoxels::from_points(&[[0.0, 0.1, 1.0], [0.2, 0.1, 1.3]]).unwrap()),
        ];
        for (i, grid) in grids.into_iter().enumerate() {
            let n = grid.len();
            let times = if i == 1 { Some(vec![0.0, 1e-10, 2e-10]) } else { None };
            let frames = times.as_ref().map_or(1, |t| t.len());
            let field = (0..n * frames).map(|k| Complex64::new(k as f64, -0.5 * k as f64)).collect();
            let v = ReconstructionVolume { grid, field, times };
            let p = dir.path().join(format!("v{i}.vol"));
            write_volume(&v, &p).unwrap();
            let back = read_volume(&p).unwrap();
            assert_eq!(back.grid.len(), v.grid.len());
            assert_eq!(back.field, v.field);
            assert_eq!(back.n_frames(), v.n_frames());
        }
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        write_pgm(&p, 3, 2, &[0.0, 1.0, 2.0, 4.0, 3.0, 0.5]).unwrap();
        let (w, h, px) = read_pgm(&p).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(px, vec![0, 64, 128, 255, 191, 32]);
    }
}

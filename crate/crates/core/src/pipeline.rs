//! Command implementations behind the `nlos` binary.
//!
//! Each command takes its parsed arguments and returns the text to print,
//! so the same pipelines can be driven from tests without a subprocess.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::container::{read_dataset, read_volume, write_dataset, write_pgm, write_volume};
use crate::error::{Error, Result};
use crate::geometry::{
    ExplicitVoxels, FrustumGrid, ReconstructionVolume, TransientMeasurement, UniformGrid2D,
    UniformGrid3D, VoxelGrid,
};
use crate::metrics::{align_by_correlation, ncc, ssim};
use crate::phasor::{frustum_volume, sampling_report, to_frequency, PhasorKernel};
use crate::reconstruct::{
    check_compatible, project_max_depth, reconstruct, Algorithm, OutputGrid, ReconOptions, ReconstructionRequest,
    ScaledTargets,
};
use crate::scene::SceneFile;
use crate::sim::add_poisson_noise;
use crate::spectral::DEFAULT_EPS;

#[derive(Debug, Parser)]
#[command(name = "nlos", version, about = "Phasor-field NLOS simulation and reconstruction")]
pub struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scene description into a measurement container.
    Simulate(SimulateArgs),
    /// Reconstruct a volume from a measurement container.
    Reconstruct(ReconstructArgs),
    /// Compare the max-depth projections of two volumes.
    Metrics(MetricsArgs),
    /// Describe a measurement or volume container.
    Info(InfoArgs),
    /// Lateral sampling limits for a hidden point.
    SamplingReport(SamplingArgs),
    /// Frustum versus cuboid volume.
    Frustum(FrustumArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    pub scene: PathBuf,
    pub out: PathBuf,
    /// Replace counts by Poisson draws with mean `scale * value`.
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Force confocal acquisition regardless of the scene file.
    #[arg(long)]
    pub confocal: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    pub input: PathBuf,
    #[arg(long = "algo")]
    pub algorithm: Algorithm,
    /// Central wavelength of the virtual illumination, in meters.
    #[arg(long)]
    pub lambda_c: f64,
    /// `cuboid:nx,ny,nz,dx,dy,dz,x0,y0,z0`, `frustum:<cuboid values>,alpha0[,beta0]` or `@grid.json`.
    #[arg(long)]
    pub grid: String,
    /// Turn a cuboid grid into a frustum with this slope.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    /// `t0:t1:steps`, evenly spaced frame times in seconds. Frame `t` shows
    /// the virtual wavefront `t` seconds after it leaves the illuminated spot.
    #[arg(long)]
    pub video: Option<String>,
    /// Zero voxels below this percentile before projecting to the image.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Smallest kernel weight retained.
    #[arg(long, default_value_t = 0.01)]
    pub kernel_threshold: f64,
    /// Volume output; the projection goes next to it with a `.pgm` extension.
    #[arg(short, long, default_value = "volume.nls1")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Ssim,
    Ncc,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, value_enum)]
    pub metric: Metric,
    /// Circularly shift the first image onto the second before comparing.
    #[arg(long)]
    pub align: bool,
}

#[derive(Debug, Clone, Args)]
pub struct InfoArgs {
    pub path: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub z_off: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub x_off: f64,
    #[arg(long)]
    pub lambda_star: f64,
    #[arg(long)]
    pub confocal: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FrustumArgs {
    #[arg(long)]
    pub x_in: f64,
    /// Defaults to `x_in`.
    #[arg(long)]
    pub y_in: Option<f64>,
    #[arg(long)]
    pub alpha: f64,
    /// Defaults to `alpha`.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Far depth of the volume.
    #[arg(long, allow_negative_numbers = true)]
    pub z: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub z_in: f64,
}

/// Process exit code for an error: 3 for filesystem failures, 2 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_io() {
        3
    } else {
        2
    }
}

/// Run one parsed command line and return its report.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Reconstruct(a) => run_reconstruct(a).map(|r| r.report),
        Command::Metrics(a) => run_metrics(a).map(|v| format!("{v:.6}\n")),
        Command::Info(a) => run_info(a),
        Command::SamplingReport(a) => run_sampling_report(a),
        Command::Frustum(a) => run_frustum(a),
    }
}

/// Which relay kinds and outputs each algorithm accepts.
pub fn compatibility_table() -> String {
    let mut s = format!("{:<12} {:<42} {}\n", "algorithm", "relay", "output");
    for a in Algorithm::ALL {
        let _ = writeln!(s, "{:<12} {:<42} {}", a.name(), a.relay_kinds().join(", "), a.output_kind());
    }
    s
}

pub fn summarize_measurement(m: &TransientMeasurement) -> String {
    let pos = m.relay.positions();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &pos {
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let total: f64 = m.histograms.iter().sum();
    format!(
        "relay: {} ({} points)\nextent: x [{:.4}, {:.4}] y [{:.4}, {:.4}] z [{:.4}, {:.4}]\n\
         illuminations: {}\nbins: {} x {:e} s from {:e} s\ntotal counts: {:.6e}\n",
        m.relay.kind_name(),
        m.n_detect(),
        lo[0],
        hi[0],
        lo[1],
        hi[1],
        lo[2],
        hi[2],
        m.n_illum(),
        m.n_bins,
        m.dt,
        m.t0,
        total
    )
}

pub fn run_simulate(a: &SimulateArgs) -> Result<String> {
    let mut scene = SceneFile::load(&a.scene).map_err(json_is_validation)?;
    scene.confocal |= a.confocal;
    let mut m = scene.simulate()?;
    if let Some(s) = a.noise_scale {
        m = add_poisson_noise(&m, s, a.seed)?;
    }
    write_dataset(&m, &a.out)?;
    Ok(summarize_measurement(&m))
}

fn json_is_validation(e: Error) -> Error {
    match e {
        Error::Json(j) => Error::InvalidArgument(format!("malformed JSON: {j}")),
        other => other,
    }
}

fn numbers(body: &str) -> Result<Vec<f64>> {
    body.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("'{v}' is not a number in grid spec")))
        })
        .collect()
}

fn count(v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidGrid(format!("sample count must be a positive integer, got {v}")))
    }
}

fn cuboid(v: &[f64]) -> Result<UniformGrid3D> {
    UniformGrid3D::new(count(v[0])?, count(v[1])?, count(v[2])?, v[3], v[4], v[5], v[6], v[7], v[8])
}

fn frustum_over(g: &UniformGrid3D, alpha: f64, beta: f64) -> Result<FrustumGrid> {
    let base = UniformGrid2D::new(g.nx, g.ny, g.dx, g.dy, g.x0, g.y0, g.z0)?;
    let depths = (0..g.nz).map(|k| g.depth(k)).collect();
    FrustumGrid::linear(base, depths, alpha, beta)
}

/// Parse a grid specification.
///
/// `cuboid:nx,ny,nz,dx,dy,dz,x0,y0,z0` gives a box; `frustum:` takes the
/// same nine values plus `alpha0[,beta0]`; `@path` reads a JSON file holding
/// a tagged voxel grid, scaled targets, or a bare list of `[x, y, z]` points.
pub fn parse_grid(spec: &str) -> Result<OutputGrid> {
    if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path)?;
        if let Ok(points) = serde_json::from_str::<Vec<[f64; 3]>>(&text) {
            return Ok(OutputGrid::Voxels(VoxelGrid::Explicit(ExplicitVoxels::from_points(&points)?)));
        }
        let g: OutputGrid =
            serde_json::from_str(&text).map_err(|e| Error::InvalidGrid(format!("{path}: {e}")))?;
        match &g {
            OutputGrid::Voxels(v) => v.validate()?,
            OutputGrid::Scaled(s) => s.validate()?,
        }
        return Ok(g);
    }
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidGrid(format!("grid spec '{spec}' has no kind prefix")))?;
    let v = numbers(body)?;
    match kind {
        "cuboid" if v.len() == 9 => Ok(OutputGrid::Voxels(VoxelGrid::Cuboid(cuboid(&v)?))),
        "frustum" if v.len() == 10 || v.len() == 11 => {
            let alpha = v[9];
            let beta = v.get(10).copied().unwrap_or(alpha);
            Ok(OutputGrid::Voxels(VoxelGrid::Frustum(frustum_over(&cuboid(&v[..9])?, alpha, beta)?)))
        }
        "cuboid" | "frustum" => Err(Error::InvalidGrid(format!(
            "{kind} spec needs {} values, got {}",
            if kind == "cuboid" { "9" } else { "10 or 11" },
            v.len()
        ))),
        other => Err(Error::InvalidGrid(format!("unknown grid kind '{other}'"))),
    }
}

/// Adapt a parsed grid to what `algorithm` consumes: `--alpha`/`--beta`
/// turn a cuboid into a frustum, and frusta become scaled targets for
/// `srsd-nursd2`.
pub fn resolve_grid(grid: OutputGrid, algorithm: Algorithm, alpha: Option<f64>, beta: Option<f64>) -> Result<OutputGrid> {
    let grid = match (grid, alpha.or(beta)) {
        (OutputGrid::Voxels(VoxelGrid::Cuboid(g)), Some(_)) => {
            let a = alpha.or(beta).unwrap_or(1.0);
            let b = beta.unwrap_or(a);
            OutputGrid::Voxels(VoxelGrid::Frustum(frustum_over(&g, a, b)?))
        }
        (g, Some(_)) => {
            return Err(Error::InvalidArgument(format!(
                "--alpha/--beta apply to cuboid specs, got a {} grid",
                g.kind_name()
            )))
        }
        (g, None) => g,
    };
    Ok(match (grid, algorithm) {
        (OutputGrid::Voxels(VoxelGrid::Frustum(f)), Algorithm::SrsdNursd2) => {
            OutputGrid::Scaled(ScaledTargets::from_frustum(&f))
        }
        (g, _) => g,
    })
}

/// Parse `t0:t1:steps` into evenly spaced times, both ends included.
pub fn parse_video(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("video spec '{spec}' is not t0:t1:steps"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let t0: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let t1: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !t0.is_finite() || !t1.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![t0]);
    }
    let step = (t1 - t0) / (n - 1) as f64;
    Ok((0..n).map(|i| t0 + i as f64 * step).collect())
}

pub struct ReconstructOutcome {
    pub volume: ReconstructionVolume,
    pub image: Option<PathBuf>,
    /// Wall-clock seconds divided by the number of illumination positions.
    pub seconds_per_illumination: f64,
    pub report: String,
}

pub fn image_path(volume: &Path) -> PathBuf {
    volume.with_extension("pgm")
}

pub fn run_reconstruct(a: &ReconstructArgs) -> Result<ReconstructOutcome> {
    let m = read_dataset(&a.input)?;
    let grid = resolve_grid(parse_grid(&a.grid)?, a.algorithm, a.alpha, a.beta)?;
    if let Err(e @ Error::Incompatible { .. }) = check_compatible(a.algorithm, &m.relay, &grid) {
        return Err(Error::InvalidArgument(format!("{e}\n\n{}", compatibility_table())));
    }
    let times = a.video.as_deref().map(parse_video).transpose()?;
    if let Some(p) = a.threshold {
        if !(0.0..=100.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("percentile must lie in [0, 100], got {p}")));
        }
    }
    let start = Instant::now();
    let kernel = PhasorKernel::new(a.lambda_c, a.kernel_threshold, m.n_bins, m.dt)?;
    let slices = to_frequency(&m, &kernel)?;
    let volume = reconstruct(&ReconstructionRequest {
        measurement: &slices,
        output: grid,
        algorithm: a.algorithm,
        options: ReconOptions {
            eps: a.eps,
            // a video follows the virtual wavefront from the wall, so the
            // illumination leg stays in the timing
            illumination_phase: times.is_none(),
            ..ReconOptions::default()
        },
        times,
    })?;
    let per_illum = start.elapsed().as_secs_f64() / m.n_illum() as f64;
    write_volume(&volume, &a.out)?;
    let mut report = format!(
        "{}: {} voxels x {} frame(s), {} frequencies\n",
        a.algorithm,
        volume.grid.len(),
        volume.n_frames(),
        slices.n_freq()
    );
    let image = match volume.grid {
        VoxelGrid::Explicit(_) => {
            report.push_str("explicit voxel list: no projection image written\n");
            None
        }
        _ => {
            let p = project_max_depth(&volume, 0, a.threshold)?;
            let path = image_path(&a.out);
            write_pgm(&path, p.nx, p.ny, &p.image)?;
            Some(path)
        }
    };
    let _ = writeln!(report, "peak at {:?}", volume.argmax_position());
    let _ = writeln!(report, "time per illumination position: {per_illum:.6} s");
    Ok(ReconstructOutcome {
        volume,
        image,
        seconds_per_illumination: per_illum,
        report,
    })
}

fn projection(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let v = read_volume(path)?;
    let p = project_max_depth(&v, 0, None)?;
    Ok((p.nx, p.ny, p.image))
}

/// Compare the frame-0 max-depth projections of two volume files.
pub fn run_metrics(a: &MetricsArgs) -> Result<f64> {
    let (nx, ny, img) = projection(&a.a)?;
    let (mx, my, reference) = projection(&a.b)?;
    if (nx, ny) != (mx, my) {
        return Err(Error::InvalidArgument(format!(
            "projections differ in shape: {nx}x{ny} vs {mx}x{my}"
        )));
    }
    let img = if a.align {
        align_by_correlation(&img, &reference, nx, ny)?.image
    } else {
        img
    };
    match a.metric {
        Metric::Ssim => ssim(&img, &reference, nx, ny),
        Metric::Ncc => ncc(&img, &reference),
    }
}

pub fn run_info(a: &InfoArgs) -> Result<String> {
    match read_dataset(&a.path) {
        Ok(m) => Ok(format!("measurement\n{}", summarize_measurement(&m))),
        Err(Error::UnknownKind(tag)) if tag >= 0x10 => {
            let v = read_volume(&a.path)?;
            let mags = v.magnitudes();
            let peak = mags.iter().cloned().fold(0.0, f64::max);
            let mut s = format!(
                "volume\ngrid: {} ({} voxels in {} planes)\nframes: {}\npeak magnitude: {peak:.6e} at {:?}\n",
                v.grid.kind_name(),
                v.grid.len(),
                v.grid.plane_count(),
                v.n_frames(),
                v.argmax_position()
            );
            if let Some(t) = &v.times {
                let _ = writeln!(s, "times: {:e} .. {:e} s", t[0], t[t.len() - 1]);
            }
            Ok(s)
        }
        Err(e) => Err(e),
    }
}

pub fn run_sampling_report(a: &SamplingArgs) -> Result<String> {
    let r = sampling_report(a.x_off, a.z_off, a.lambda_star, a.confocal)?;
    let mut s = format!(
        "lambda_sz = {:.6} m\nratio 2|z|/|x| = {}\nlambda_sx = {} m\n",
        r.lambda_sz,
        fmt_ratio(r.ratio),
        fmt_ratio(r.lambda_sx)
    );
    match r.max_integer_factor() {
        None => s.push_str("every downsampling factor is admissible\n"),
        Some(0) => s.push_str("no downsampling factor is admissible\n"),
        Some(d) => {
            let _ = writeln!(s, "admissible: D <= {d}");
        }
    }
    Ok(s)
}

fn fmt_ratio(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:.6}")
    }
}

pub fn run_frustum(a: &FrustumArgs) -> Result<String> {
    let v = frustum_volume(
        a.x_in,
        a.y_in.unwrap_or(a.x_in),
        a.z_in,
        a.z,
        a.alpha,
        a.beta.unwrap_or(a.alpha),
    )?;
    Ok(format!(
        "V_F = {:.2}\nV_C = {:.2}\ndV = {:.2}\nincrease = +{:.0}%\n",
        v.frustum, v.cuboid, v.difference, v.increase_percent
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cuboid_and_frustum_specs() {
        let g = parse_grid("cuboid:4,3,2,0.1,0.1,0.05,-0.2,-0.1,0.5").unwrap();
        match g {
            OutputGrid::Voxels(VoxelGrid::Cuboid(c)) => {
                assert_eq!((c.nx, c.ny, c.nz), (4, 3, 2));
                assert_eq!(c.z0, 0.5);
            }
            other => panic!("{other:?}"),
        }
        let f = parse_grid("frustum:4,4,3,0.1,0.1,0.1,-0.2,-0.2,1.0,0.5").unwrap();
        match f {
            OutputGrid::Voxels(VoxelGrid::Frustum(f)) => {
                assert_eq!(f.depths, vec![1.0, 1.1, 1.2]);
                assert_eq!(f.alpha[0], 1.0);
                assert_eq!(f.alpha, f.beta);
                // half-width 0.2 grows by dz/alpha0 = 0.2 per plane
                assert!((f.alpha[1] - 0.5).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_specs_are_rejected() {
        for s in [
            "cuboid:4,4,2",
            "box:1,1,1,1,1,1,0,0,1",
            "cuboid:4,4,2.5,0.1,0.1,0.1,0,0,1",
            "cuboid:4,4,2,x,0.1,0.1,0,0,1",
            "nocolon",
        ] {
            assert!(parse_grid(s).is_err(), "{s}");
        }
    }

    #[test]
    fn json_grid_files() {
        let dir = tempfile::tempdir().unwrap();
        let pts = dir.path().join("pts.json");
        std::fs::write(&pts, "[[0.0, 0.0, 1.0], [0.1, 0.0, 1.0], [0.0, 0.0, 1.2]]").unwrap();
        match parse_grid(&format!("@{}", pts.display())).unwrap() {
            OutputGrid::Voxels(VoxelGrid::Explicit(e)) => assert_eq!(e.len(), 3),
            other => panic!("{other:?}"),
        }
        let g = UniformGrid3D::new(2, 2, 1, 0.1, 0.1, 0.1, 0.0, 0.0, 1.0).unwrap();
        let tagged = dir.path().join("grid.json");
        std::fs::write(&tagged, serde_json::to_string(&VoxelGrid::Cuboid(g)).unwrap()).unwrap();
        assert_eq!(
            parse_grid(&format!("@{}", tagged.display())).unwrap(),
            OutputGrid::Voxels(VoxelGrid::Cuboid(g))
        );
        let missing = parse_grid("@/nonexistent/grid.json").unwrap_err();
        assert_eq!(exit_code(&missing), 3);
    }

    #[test]
    fn alpha_flag_and_scaled_conversion() {
        let c = parse_grid("cuboid:4,4,2,0.1,0.1,0.1,-0.2,-0.2,1.0").unwrap();
        let f = resolve_grid(c.clone(), Algorithm::Srsd, Some(0.5), None).unwrap();
        assert_eq!(f.kind_name(), "frustum");
        let s = resolve_grid(f, Algorithm::SrsdNursd2, None, None).unwrap();
        assert_eq!(s.kind_name(), "scaled");
        assert_eq!(resolve_grid(c, Algorithm::Rsd, None, None).unwrap().kind_name(), "cuboid");
    }

    #[test]
    fn video_spec() {
        assert_eq!(parse_video("0:1e-9:3").unwrap(), vec![0.0, 0.5e-9, 1e-9]);
        assert_eq!(parse_video("2e-9:5:1").unwrap(), vec![2e-9]);
        assert!(parse_video("0:1:0").is_err());
        assert!(parse_video("0:1").is_err());
    }

    #[test]
    fn frustum_worked_example() {
        let out = run_frustum(&FrustumArgs {
            x_in: 4.0,
            y_in: None,
            alpha: 0.5,
            beta: None,
            z: 4.0,
            z_in: 0.0,
        })
        .unwrap();
        assert_eq!(out, "V_F = 277.33\nV_C = 64.00\ndV = 213.33\nincrease = +333%\n");
    }

    #[test]
    fn sampling_report_text() {
        let out = run_sampling_report(&SamplingArgs {
            z_off: 2.5,
            x_off: 1.0,
            lambda_star: 0.04,
            confocal: false,
        })
        .unwrap();
        assert!(out.contains("ratio 2|z|/|x| = 5.000000"), "{out}");
        assert!(out.contains("admissible: D <= 4"), "{out}");
    }

    #[test]
    fn table_lists_every_algorithm() {
        let t = compatibility_table();
        for a in Algorithm::ALL {
            assert!(t.lines().any(|l| l.starts_with(a.name())));
        }
    }
}

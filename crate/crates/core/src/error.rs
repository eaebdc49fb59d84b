use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate bounding box on axis {axis}: lo={lo}, hi={hi}")]
    DegenerateAxis { axis: usize, lo: f64, hi: f64 },

    #[error("coordinate {value} on axis {axis} lies outside [{lo}, {hi})")]
    OutOfRange {
        axis: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("tolerance {0} outside the supported range [1e-14, 1e-1]")]
    Tolerance(f64),

    #[error("{algorithm} cannot run on this geometry: {reason}")]
    Incompatible {
        algorithm: &'static str,
        reason: String,
    },

    #[error("no frequency bin clears the kernel threshold {threshold}")]
    EmptyKernel { threshold: f64 },

    #[error("voxel plane {0} has no targets")]
    EmptyTargets(usize),

    #[error("scatterer {index} at {position:?} falls outside the time window ({detail})")]
    ScattererOutsideWindow {
        index: usize,
        position: [f64; 3],
        detail: String,
    },

    #[error("bad magic bytes {0:?}, expected \"NLS1\"")]
    BadMagic([u8; 4]),

    #[error("unsupported container version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("container truncated while reading {0}")]
    Truncated(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("unknown kind tag {0:#04x}")]
    UnknownKind(u8),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the filesystem rather than by the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

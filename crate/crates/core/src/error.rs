use std::fmt;

use crate::scene::Violation;
use crate::synth::ChannelId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("degenerate geometry on channel {channel}: {message}")]
    ChannelGeometry { channel: ChannelId, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("scenario schema violation in `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("scenario failed validation: {}", ViolationList(.0))]
    InvalidScenario(Vec<Violation>),

    #[error("pair ({tx}, {rx}) is not active in the association matrix")]
    InactiveChannel { tx: usize, rx: usize },

    #[error(
        "record window [{t_min:e}, {t_max:e}] s would truncate the response at {delay:e} s on channel {channel}"
    )]
    WindowTooShort {
        channel: ChannelId,
        delay: f64,
        t_min: f64,
        t_max: f64,
    },

    #[error("pixel ({ix}, {iy}) delay {delay:e} s is outside the record window of channel {channel}")]
    DelayOutsideWindow {
        ix: usize,
        iy: usize,
        channel: ChannelId,
        delay: f64,
    },

    #[error("no signal records supplied")]
    EmptyRecords,

    #[error("records span more than one Tx/Rx pair")]
    MixedPairs,

    #[error("images are defined on different grids")]
    GridMismatch,

    #[error("image `{0}` is not monostatic; incoherent fusion accepts monostatic images only")]
    NotMonostatic(String),

    #[error("invalid fusion weights: {0}")]
    InvalidWeights(String),

    #[error("image peak lies on the grid boundary")]
    PeakOnBoundary,

    #[error("mainlobe is not resolved by the grid ({samples} samples above -3 dB)")]
    MainlobeUnresolved { samples: usize },

    #[error("mainlobe extends past the grid edge")]
    MainlobeTruncated,

    #[error("mainlobe region covers the whole image")]
    NoSidelobeRegion,

    #[error("only {found} background pixels available, at least {needed} required")]
    TooFewBackground { found: usize, needed: usize },

    #[error("position lies outside the image grid")]
    OutsideGrid,

    #[error("no feasible plan: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateGeometry(_) | Error::ChannelGeometry { .. } => "degenerate_geometry",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse { .. } => "parse",
            Error::Schema { .. } => "schema",
            Error::InvalidScenario(_) => "validation",
            Error::InactiveChannel { .. } => "inactive_channel",
            Error::WindowTooShort { .. } => "window_too_short",
            Error::DelayOutsideWindow { .. } => "delay_outside_window",
            Error::EmptyRecords => "empty_records",
            Error::MixedPairs => "mixed_pairs",
            Error::GridMismatch => "grid_mismatch",
            Error::NotMonostatic(_) => "not_monostatic",
            Error::InvalidWeights(_) => "invalid_weights",
            Error::PeakOnBoundary => "peak_on_boundary",
            Error::MainlobeUnresolved { .. } => "mainlobe_unresolved",
            Error::MainlobeTruncated => "mainlobe_truncated",
            Error::NoSidelobeRegion => "no_sidelobe_region",
            Error::TooFewBackground { .. } => "too_few_background",
            Error::OutsideGrid => "outside_grid",
            Error::Infeasible(_) => "infeasible",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for errors caused by malformed or invalid inputs rather than
    /// failures while running the pipeline.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Schema { .. } | Error::InvalidScenario(_)
        )
    }
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

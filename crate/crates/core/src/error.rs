use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing view file for grid position ({row}, {col})")]
    MissingView { row: usize, col: usize },

    #[error("view {file:?} has dimensions {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        file: PathBuf,
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("cannot read image {file:?}: {reason}")]
    UnreadableImage { file: PathBuf, reason: String },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported view grid size {0} (odd size >= 5 required)")]
    UnsupportedGrid(usize),

    #[error("invalid inner crop {inner} for {rows}x{cols} grid")]
    InvalidCrop {
        inner: usize,
        rows: usize,
        cols: usize,
    },

    #[error("view subset is empty")]
    EmptySubset,

    #[error("input contains non-finite samples")]
    NonFiniteSamples,

    #[error("samples outside the valid [0, 1] range")]
    SamplesOutOfRange,

    #[error("view coordinate ({s}, {t}) exceeds the layer pad budget {pad}")]
    CoordOutOfPad { s: i32, t: i32, pad: usize },

    #[error("rank {rank} out of range for a {rows}x{cols} matrix")]
    RankOutOfRange {
        rank: usize,
        rows: usize,
        cols: usize,
    },

    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty frame list")]
    EmptyInput,

    #[error("invalid codec configuration: {0}")]
    InvalidCodecConfig(String),

    #[error("payload decode error at byte {offset}: {reason}")]
    DecodeError { offset: usize, reason: String },

    #[error("external codec failed: {0}")]
    ExternalCodec(String),

    #[error("corrupt container at byte {offset}: {reason}")]
    CorruptContainer { offset: usize, reason: String },

    #[error("container payload count mismatch: header declares {expected}, found {found}")]
    PayloadCountMismatch { expected: usize, found: usize },

    #[error("invalid encode configuration: {0}")]
    InvalidEncodeConfig(String),

    #[error("calibration needs at least two views")]
    TooFewViews,

    #[error("fdl model error: {0}")]
    FdlModel(String),

    #[error("rate-distortion curves need at least {needed} points, got {got}")]
    TooFewRdPoints { needed: usize, got: usize },

    #[error("rate-distortion curves have no overlapping quality range")]
    NoQualityOverlap,

    #[error("invalid scene spec: {0}")]
    InvalidSceneSpec(String),

    #[error("csv error: {0}")]
    Csv(String),
}

//! On-disk interchange formats: point clouds, posed frames with RLE masks,
//! label embedding tables, per-point visual features and depth maps.
//!
//! A dataset directory has a fixed layout (see [`layout`]). Every loader
//! validates the invariants of the type it returns, so downstream stages can
//! assume well-formed input.

mod depth;
mod embedding;
mod features;
mod frames;
mod ply;
mod rle;
mod validate;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use depth::{read_depth_png, write_depth_png, DepthMap};
pub use embedding::{load_embedding_table, write_embedding_table, EmbeddingTable};
pub(crate) use embedding::dot;
pub use features::{read_feature_matrix, write_feature_matrix, FeatureMatrix};
pub use frames::{
    load_frames, write_frames, Frame, Intrinsics, ManifestFile, ManifestFrame, Mask2D, MaskEntry,
    MasksFile,
};
pub use ply::{load_point_cloud, write_point_cloud, PlyEncoding, PointCloud};
pub use rle::{decode_rle, encode_rle, Bitmap};
pub use validate::{validate_dataset, Issue, Severity, ValidationReport};

/// File names inside a dataset directory.
pub mod layout {
    pub const CLOUD: &str = "cloud.ply";
    pub const MANIFEST: &str = "frames.json";
    pub const EMBEDDINGS: &str = "embeddings.json";
    pub const FEATURES: &str = "features.pvft";
    pub const GROUND_TRUTH: &str = "gt_instances.json";
    pub const MASKS_DIR: &str = "masks";
    pub const DEPTH_DIR: &str = "depth";
}

#[derive(Debug, Error)]
pub enum PcioError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("missing field: {0}")]
    MissingField(String),

    #[error("malformed PLY: {0}")]
    MalformedPly(String),

    #[error("non-finite coordinate at point {0}")]
    NonFiniteCoordinate(usize),

    #[error("point cloud arrays disagree: {0}")]
    LengthMismatch(String),

    #[error("normal {index} is not unit length (norm {norm})")]
    BadNormal { index: usize, norm: f64 },

    #[error("missing mask file {0}")]
    MissingMaskFile(PathBuf),

    #[error("bad extrinsics for frame {image_id}: {reason}")]
    BadExtrinsics { image_id: String, reason: String },

    #[error("invalid frame {image_id}: {reason}")]
    InvalidFrame { image_id: String, reason: String },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("RLE counts sum to {actual}, expected {expected}")]
    CountMismatch { expected: usize, actual: usize },

    #[error("embedding for {label:?} has dimension {actual}, expected {expected}")]
    DimMismatch {
        label: String,
        expected: usize,
        actual: usize,
    },

    #[error("duplicate label {0:?} in embedding table")]
    DuplicateLabel(String),

    #[error("zero vector for label {0:?} cannot be normalized")]
    ZeroVector(String),

    #[error("bad feature matrix: {0}")]
    BadFeatures(String),

    #[error("bad depth map {path}: {reason}")]
    BadDepth { path: PathBuf, reason: String },

    #[error("bad instance file {path}: {reason}")]
    BadInstances { path: PathBuf, reason: String },
}

impl PcioError {
    /// Stable machine-readable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            PcioError::Io { .. } => "Io",
            PcioError::Json { .. } => "Json",
            PcioError::MissingField(_) => "MissingField",
            PcioError::MalformedPly(_) => "MalformedPly",
            PcioError::NonFiniteCoordinate(_) => "NonFiniteCoordinate",
            PcioError::LengthMismatch(_) => "LengthMismatch",
            PcioError::BadNormal { .. } => "BadNormal",
            PcioError::MissingMaskFile(_) => "MissingMaskFile",
            PcioError::BadExtrinsics { .. } => "BadExtrinsics",
            PcioError::InvalidFrame { .. } => "InvalidFrame",
            PcioError::InvalidMask(_) => "InvalidMask",
            PcioError::CountMismatch { .. } => "CountMismatch",
            PcioError::DimMismatch { .. } => "DimMismatch",
            PcioError::DuplicateLabel(_) => "DuplicateLabel",
            PcioError::ZeroVector(_) => "ZeroVector",
            PcioError::BadFeatures(_) => "BadFeatures",
            PcioError::BadDepth { .. } => "BadDepth",
            PcioError::BadInstances { .. } => "BadInstances",
        }
    }
}

pub type Result<T> = std::result::Result<T, PcioError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PcioError + '_ {
    move |source| PcioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> PcioError + '_ {
    move |source| PcioError::Json {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

/// Everything the segmentation pipeline consumes, loaded from one directory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub cloud: PointCloud,
    pub frames: Vec<Frame>,
    pub table: Option<EmbeddingTable>,
    pub features: Option<FeatureMatrix>,
}

impl Dataset {
    /// Loads cloud and frames (required) plus the embedding table and
    /// feature matrix when present.
    pub fn load(root: &Path) -> Result<Self> {
        let cloud = load_point_cloud(&root.join(layout::CLOUD))?;
        let frames = load_frames(&root.join(layout::MANIFEST))?;
        let table_path = root.join(layout::EMBEDDINGS);
        let table = if table_path.exists() {
            Some(load_embedding_table(&table_path)?)
        } else {
            None
        };
        let feat_path = root.join(layout::FEATURES);
        let features = if feat_path.exists() {
            let f = read_feature_matrix(&feat_path)?;
            if f.rows != cloud.len() {
                return Err(PcioError::BadFeatures(format!(
                    "{} rows for a cloud of {} points",
                    f.rows,
                    cloud.len()
                )));
            }
            Some(f)
        } else {
            None
        };
        Ok(Self {
            root: root.to_path_buf(),
            cloud,
            frames,
            table,
            features,
        })
    }
}

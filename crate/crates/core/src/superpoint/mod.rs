//! Oversegmentation of a point cloud into superpoints.
//!
//! Normals come from the cloud or from local PCA; a k-NN graph weighted by
//! normal and color dissimilarity is then cut with the Felzenszwalb–
//! Huttenlocher criterion. Each superpoint also carries farthest-point
//! samples used by the spatial adjacency test.

mod cache;
mod fps;
mod graph;
mod normals;
mod segment;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pcio::PointCloud;

pub use cache::{read_superpoint_cache, write_superpoint_cache};
pub use fps::sample_fps;
pub use graph::{build_knn_graph, Edge, PointGraph};
pub use normals::{estimate_normals, NormalEstimate};
pub use segment::{felzenszwalb_components, segment_labels, segment_superpoints};

#[derive(Debug, Error)]
pub enum SuperpointError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("superpoint cache: {0}")]
    BadCache(String),

    #[error(transparent)]
    Io(#[from] crate::pcio::PcioError),
}

pub type Result<T> = std::result::Result<T, SuperpointError>;

/// A group of points treated as one unit during merging.
#[derive(Debug, Clone, PartialEq)]
pub struct Superpoint {
    pub id: usize,
    /// Sorted, non-empty.
    pub point_indices: Vec<u32>,
    pub centroid: Point3<f64>,
    pub fps_samples: Vec<u32>,
    pub label: Option<String>,
    pub label_embedding: Option<Vec<f64>>,
}

impl Superpoint {
    pub fn new(id: usize, mut point_indices: Vec<u32>, cloud: &PointCloud) -> Self {
        assert!(!point_indices.is_empty(), "superpoint must be non-empty");
        point_indices.sort_unstable();
        point_indices.dedup();
        let centroid = centroid_of(&point_indices, cloud);
        Self {
            id,
            point_indices,
            centroid,
            fps_samples: Vec::new(),
            label: None,
            label_embedding: None,
        }
    }

    pub fn len(&self) -> usize {
        self.point_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_indices.is_empty()
    }
}

pub(crate) fn centroid_of(indices: &[u32], cloud: &PointCloud) -> Point3<f64> {
    let pos = cloud.positions();
    let sum = indices
        .iter()
        .fold(Vector3::zeros(), |acc, &i| acc + pos[i as usize].coords);
    Point3::from(sum / indices.len() as f64)
}

/// Knobs of the oversegmentation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuperpointParams {
    /// Neighbour count for normals and the k-NN graph.
    pub k: usize,
    /// Felzenszwalb–Huttenlocher scale constant.
    pub kf: f64,
    pub min_size: usize,
    pub w_normal: f64,
    pub w_color: f64,
}

impl Default for SuperpointParams {
    fn default() -> Self {
        Self {
            k: 16,
            kf: 0.05,
            min_size: 30,
            w_normal: 1.0,
            w_color: 0.2,
        }
    }
}

/// Result of [`oversegment`].
#[derive(Debug, Clone)]
pub struct Oversegmentation {
    pub superpoints: Vec<Superpoint>,
    /// Points whose neighbourhood was degenerate and got the fallback normal.
    pub degenerate_normals: Vec<usize>,
}

/// Normals (given or estimated), k-NN graph, segmentation and FPS samples.
pub fn oversegment(
    cloud: &PointCloud,
    params: &SuperpointParams,
    k_fps: usize,
) -> Result<Oversegmentation> {
    if params.k == 0 {
        return Err(SuperpointError::InvalidParameter("k must be >= 1".into()));
    }
    if k_fps == 0 {
        return Err(SuperpointError::InvalidParameter("k_fps must be >= 1".into()));
    }
    let (normals, degenerate_normals) = match cloud.normals() {
        Some(n) => (n.to_vec(), Vec::new()),
        None if cloud.len() >= 3 => {
            let est = estimate_normals(cloud, params.k.clamp(3, cloud.len()))?;
            (est.normals, est.degenerate)
        }
        None => (vec![Vector3::z(); cloud.len()], Vec::new()),
    };
    let graph = build_knn_graph(cloud, &normals, params.k, params.w_normal, params.w_color);
    let mut superpoints = segment_superpoints(&graph, cloud, params.kf, params.min_size);
    for sp in &mut superpoints {
        sp.fps_samples = sample_fps(sp, cloud, k_fps);
    }
    Ok(Oversegmentation {
        superpoints,
        degenerate_normals,
    })
}

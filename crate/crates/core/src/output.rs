//! On-disk formats for predicted instances, ground truth and the point-to-
//! instance map.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::evalkit::{GroundTruthInstance, Prediction};
use crate::pcio::{self, PcioError};
use crate::semantics::Instance3D;

const POINT_MAP_MAGIC: &[u8; 4] = b"PVIM";

/// Marks points that belong to no instance in the point map.
pub const NO_INSTANCE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: usize,
    pub label: String,
    pub confidence: f64,
    pub points: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstancesFile {
    pub vocabulary: Vec<String>,
    pub instances: Vec<InstanceRecord>,
}

impl InstancesFile {
    pub fn new(vocabulary: Vec<String>, instances: &[Instance3D]) -> Self {
        Self {
            vocabulary,
            instances: instances
                .iter()
                .map(|i| InstanceRecord {
                    id: i.id,
                    label: i.label.clone(),
                    confidence: i.confidence,
                    points: i.point_indices.clone(),
                    embedding: i.embedding.clone(),
                })
                .collect(),
        }
    }

    pub fn to_instances(&self) -> Vec<Instance3D> {
        self.instances
            .iter()
            .map(|r| {
                let mut point_indices = r.points.clone();
                point_indices.sort_unstable();
                Instance3D {
                    id: r.id,
                    point_indices,
                    label: r.label.clone(),
                    confidence: r.confidence,
                    embedding: r.embedding.clone(),
                }
            })
            .collect()
    }

    /// Predictions for the evaluator, point lists sorted.
    pub fn predictions(&self) -> Vec<Prediction> {
        self.to_instances().iter().map(Prediction::from).collect()
    }
}

pub fn write_instances(path: &Path, file: &InstancesFile) -> pcio::Result<()> {
    pcio::write_json(path, file)
}

pub fn read_instances(path: &Path) -> pcio::Result<InstancesFile> {
    pcio::read_json(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub instances: Vec<GroundTruthInstance>,
}

pub fn write_ground_truth(path: &Path, gts: &[GroundTruthInstance]) -> pcio::Result<()> {
    pcio::write_json(
        path,
        &GroundTruthFile {
            instances: gts.to_vec(),
        },
    )
}

/// Ground-truth instances with sorted point lists; pairwise disjointness is
/// checked.
pub fn read_ground_truth(path: &Path) -> pcio::Result<Vec<GroundTruthInstance>> {
    let mut file: GroundTruthFile = pcio::read_json(path)?;
    let mut seen = std::collections::HashSet::new();
    for g in &mut file.instances {
        g.points.sort_unstable();
        g.points.dedup();
        if g.points.is_empty() {
            return Err(PcioError::BadInstances {
                path: path.to_path_buf(),
                reason: format!("ground-truth instance {} has no points", g.id),
            });
        }
        for &p in &g.points {
            if !seen.insert(p) {
                return Err(PcioError::BadInstances {
                    path: path.to_path_buf(),
                    reason: format!("point {p} belongs to two ground-truth instances"),
                });
            }
        }
    }
    Ok(file.instances)
}

/// `"PVIM"`, `u32` point count, then one `u32` instance id per point, all
/// little-endian.
pub fn write_point_map(path: &Path, ids: &[u32]) -> pcio::Result<()> {
    let mut bytes = Vec::with_capacity(8 + 4 * ids.len());
    bytes.extend_from_slice(POINT_MAP_MAGIC);
    bytes.extend_from_slice(&(ids.len() as u32).to_le_bytes());
    for id in ids {
        bytes.extend_from_slice(&id.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|source| PcioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_point_map(path: &Path) -> pcio::Result<Vec<u32>> {
    let bytes = std::fs::read(path).map_err(|source| PcioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |m: &str| PcioError::BadInstances {
        path: path.to_path_buf(),
        reason: m.to_string(),
    };
    if bytes.len() < 8 || &bytes[..4] != POINT_MAP_MAGIC {
        return Err(bad("not a point map"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + 4 * n {
        return Err(bad("length does not match header"));
    }
    Ok(bytes[8..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Instance id per point, [`NO_INSTANCE`] where uncovered.
pub fn point_map(num_points: usize, instances: &[Instance3D]) -> Vec<u32> {
    let mut ids = vec![NO_INSTANCE; num_points];
    for inst in instances {
        for &p in &inst.point_indices {
            ids[p as usize] = inst.id as u32;
        }
    }
    ids
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Result, Superpoint, SuperpointError};
use crate::pcio::{self, PointCloud};

#[derive(Debug, Serialize, Deserialize)]
struct CacheFile {
    superpoints: Vec<CacheEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    id: usize,
    points: Vec<u32>,
}

pub fn write_superpoint_cache(path: &Path, superpoints: &[Superpoint]) -> Result<()> {
    let file = CacheFile {
        superpoints: superpoints
            .iter()
            .map(|s| CacheEntry {
                id: s.id,
                points: s.point_indices.clone(),
            })
            .collect(),
    };
    Ok(pcio::write_json(path, &file)?)
}

/// Loads a cached partition; it must be a disjoint cover of `cloud` with ids
/// `0..M` in order. FPS samples are not cached.
pub fn read_superpoint_cache(path: &Path, cloud: &PointCloud) -> Result<Vec<Superpoint>> {
    let file: CacheFile = pcio::read_json(path)?;
    let mut seen = vec![false; cloud.len()];
    let mut out = Vec::with_capacity(file.superpoints.len());
    for (pos, e) in file.superpoints.into_iter().enumerate() {
        if e.id != pos {
            return Err(SuperpointError::BadCache(format!(
                "superpoint at position {pos} has id {}",
                e.id
            )));
        }
        if e.points.is_empty() {
            return Err(SuperpointError::BadCache(format!("superpoint {pos} is empty")));
        }
        for &p in &e.points {
            let slot = seen.get_mut(p as usize).ok_or_else(|| {
                SuperpointError::BadCache(format!("point index {p} out of range"))
            })?;
            if *slot {
                return Err(SuperpointError::BadCache(format!(
                    "point {p} belongs to two superpoints"
                )));
            }
            *slot = true;
        }
        out.push(Superpoint::new(e.id, e.points, cloud));
    }
    if let Some(p) = seen.iter().position(|s| !s) {
        return Err(SuperpointError::BadCache(format!(
            "point {p} is not covered"
        )));
    }
    Ok(out)
}

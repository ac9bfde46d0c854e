//! Scene vocabulary, fused point features, instance embeddings and labels.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::pcio::{EmbeddingTable, FeatureMatrix, Frame};
use crate::superpoint::Superpoint;

/// Label given to instances without any usable feature.
pub const UNKNOWN_LABEL: &str = "unknown";

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error("feature dimension {actual} does not match embedding dimension {expected}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("label {0:?} is not in the embedding table")]
    UnknownLabel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, SemanticsError>;

/// Unique labels grounded anywhere in the scene, sorted, with the number of
/// frames that grounded each.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SceneVocabulary {
    pub labels: Vec<String>,
    pub frame_counts: BTreeMap<String, usize>,
}

impl SceneVocabulary {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn build_scene_vocab(frames: &[Frame]) -> SceneVocabulary {
    let mut frame_counts: BTreeMap<String, usize> = BTreeMap::new();
    for f in frames {
        let in_frame: BTreeSet<&str> = f.masks.iter().map(|m| m.label.as_str()).collect();
        for l in in_frame {
            *frame_counts.entry(l.to_string()).or_default() += 1;
        }
    }
    SceneVocabulary {
        labels: frame_counts.keys().cloned().collect(),
        frame_counts,
    }
}

/// Per-point feature rows (`f32`, row-major); a row is either unit length or
/// all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFeatures {
    pub dim: usize,
    pub data: Vec<f32>,
}

impl PointFeatures {
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

/// Fuses visual and superpoint-label features per point.
///
/// Both present: normalized mean. Only the label embedding: passed through.
/// Only the visual feature: normalized. Neither: zero row.
pub fn point_features(
    num_points: usize,
    superpoints: &[Superpoint],
    visual: Option<&FeatureMatrix>,
    dim: usize,
) -> Result<PointFeatures> {
    if let Some(v) = visual {
        if v.dim != dim {
            return Err(SemanticsError::DimMismatch {
                expected: dim,
                actual: v.dim,
            });
        }
        if v.rows != num_points {
            return Err(SemanticsError::InvalidParameter(format!(
                "{} feature rows for {num_points} points",
                v.rows
            )));
        }
    }
    for sp in superpoints {
        if let Some(e) = &sp.label_embedding {
            if e.len() != dim {
                return Err(SemanticsError::DimMismatch {
                    expected: dim,
                    actual: e.len(),
                });
            }
        }
    }
    let mut data = vec![0f32; num_points * dim];
    let rows: Vec<(u32, Vec<f32>)> = superpoints
        .par_iter()
        .flat_map_iter(|sp| {
            let f_q = sp.label_embedding.as_deref();
            sp.point_indices.iter().filter_map(move |&p| {
                let f_v: Option<Vec<f64>> = visual.and_then(|v| {
                    normalized(&v.row(p as usize).iter().map(|&x| x as f64).collect::<Vec<_>>())
                });
                let fused = match (f_v, f_q) {
                    (Some(fv), Some(fq)) => {
                        let mean: Vec<f64> = fv.iter().zip(fq).map(|(a, b)| 0.5 * (a + b)).collect();
                        normalized(&mean)
                    }
                    (None, Some(fq)) => Some(fq.to_vec()),
                    (Some(fv), None) => Some(fv),
                    (None, None) => None,
                }?;
                Some((p, fused.into_iter().map(|x| x as f32).collect()))
            })
        })
        .collect();
    for (p, row) in rows {
        let p = p as usize;
        data[p * dim..(p + 1) * dim].copy_from_slice(&row);
    }
    Ok(PointFeatures { dim, data })
}

/// Normalized mean of the nonzero member features; `None` when every member
/// row is zero.
pub fn instance_embedding(points: &[u32], features: &PointFeatures) -> Option<Vec<f64>> {
    let mut acc = vec![0.0f64; features.dim];
    let mut any = false;
    for &p in points {
        let row = features.row(p as usize);
        if row.iter().all(|&x| x == 0.0) {
            continue;
        }
        any = true;
        acc.iter_mut().zip(row).for_each(|(a, &x)| *a += x as f64);
    }
    if !any {
        return None;
    }
    normalized(&acc)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Best vocabulary label by cosine and its clamped cosine.
///
/// `None` embeddings and an empty vocabulary give `("unknown", 0)`. Equal
/// cosines resolve to the lexicographically first label.
pub fn assign_labels(
    embeddings: &[Option<Vec<f64>>],
    vocab: &[String],
    table: &EmbeddingTable,
) -> Result<Vec<(String, f64)>> {
    let mut sorted: Vec<&String> = vocab.iter().collect();
    sorted.sort();
    sorted.dedup();
    let vecs: Vec<(&str, &[f64])> = sorted
        .iter()
        .map(|l| {
            table
                .get(l)
                .map(|v| (l.as_str(), v))
                .ok_or_else(|| SemanticsError::UnknownLabel((*l).clone()))
        })
        .collect::<Result<_>>()?;
    Ok(embeddings
        .iter()
        .map(|e| {
            let Some(e) = e else {
                return (UNKNOWN_LABEL.to_string(), 0.0);
            };
            let mut best: Option<(&str, f64)> = None;
            for &(label, v) in &vecs {
                let c = dot(e, v);
                if best.is_none_or(|b| c > b.1) {
                    best = Some((label, c));
                }
            }
            match best {
                Some((l, c)) => (l.to_string(), c.clamp(0.0, 1.0)),
                None => (UNKNOWN_LABEL.to_string(), 0.0),
            }
        })
        .collect())
}

/// A labeled 3D instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance3D {
    pub id: usize,
    /// Sorted point indices.
    pub point_indices: Vec<u32>,
    pub label: String,
    pub confidence: f64,
    /// Unit vector, or all zeros for an `unknown` instance.
    pub embedding: Vec<f64>,
}

/// Instances ranked by cosine to `query` (descending, then id), at most
/// `top_k` of them.
pub fn query(instances: &[Instance3D], query: &[f64], top_k: usize) -> Result<Vec<(usize, f64)>> {
    if top_k == 0 {
        return Err(SemanticsError::InvalidParameter("top_k must be >= 1".into()));
    }
    let mut scored: Vec<(usize, f64)> = instances
        .iter()
        .map(|i| (i.id, dot(&i.embedding, query)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(top_k);
    Ok(scored)
}

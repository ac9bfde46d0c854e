//! Pairwise superpoint affinities.
//!
//! Three factors are built separately and multiplied entrywise: mask
//! coherence (shared 2D masks), semantic coherence (voted-label embeddings)
//! and spatial adjacency (FPS sample gaps).

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::pcio::{self, EmbeddingTable, PcioError, PointCloud};
use crate::project::OverlapTable;
use crate::superpoint::Superpoint;

#[derive(Debug, Error)]
pub enum AffinityError {
    #[error("label {0:?} is not in the embedding table")]
    UnknownLabel(String),

    #[error("affinity size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, AffinityError>;

/// Sparse symmetric matrix over superpoints with an implicit unit diagonal.
///
/// Only strictly upper entries `(i, j)`, `i < j`, with positive value are
/// stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffinityMatrix {
    size: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl AffinityMatrix {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries(
        size: usize,
        entries: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Self {
        let mut m = Self::new(size);
        for ((i, j), v) in entries {
            m.set(i, j, v);
        }
        m
    }

    /// Sets `(i, j)` and `(j, i)`; zero removes the entry, the diagonal is
    /// ignored.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.size && j < self.size, "({i},{j}) outside {}", self.size);
        assert!(value.is_finite() && value >= 0.0, "bad affinity {value}");
        if i == j {
            return;
        }
        let key = (i.min(j), i.max(j));
        if value > 0.0 {
            self.entries.insert(key, value);
        } else {
            self.entries.remove(&key);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        self.entries
            .get(&(i.min(j), i.max(j)))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Upper-triangle entries `(i, j, value)` in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    /// Off-diagonal row sums.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.size];
        for (i, j, v) in self.iter() {
            d[i] += v;
            d[j] += v;
        }
        d
    }

    /// Symmetric adjacency lists, each sorted by neighbour id.
    pub fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.size];
        for (i, j, v) in self.iter() {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        for row in &mut adj {
            row.sort_by_key(|e| e.0);
        }
        adj
    }

    /// Sub-matrix on `ids`; row `k` of the result is `ids[k]`.
    pub fn induced(&self, ids: &[usize]) -> AffinityMatrix {
        let mut local = vec![usize::MAX; self.size];
        for (k, &id) in ids.iter().enumerate() {
            local[id] = k;
        }
        let mut out = AffinityMatrix::new(ids.len());
        for (i, j, v) in self.iter() {
            let (a, b) = (local[i], local[j]);
            if a != usize::MAX && b != usize::MAX {
                out.set(a, b, v);
            }
        }
        out
    }
}

/// `x` if `x > tau`, else 0.
pub fn gate(x: f64, tau: f64) -> f64 {
    if x > tau {
        x
    } else {
        0.0
    }
}

/// `a^M_ij = Σ_t gate(O_it)·gate(O_jt)` over all masks.
pub fn mask_coherence(table: &OverlapTable, tau_iou: f64) -> AffinityMatrix {
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); table.masks.len()];
    for (sp, m, s) in table.entries() {
        let g = gate(s, tau_iou);
        if g > 0.0 {
            columns[m].push((sp, g));
        }
    }
    let contributions: Vec<Vec<((usize, usize), f64)>> = columns
        .par_iter()
        .map(|col| {
            let mut out = Vec::new();
            for (a, &(i, gi)) in col.iter().enumerate() {
                for &(j, gj) in &col[a + 1..] {
                    out.push(((i, j), gi * gj));
                }
            }
            out
        })
        .collect();
    // Summed in mask order so the result is independent of thread count.
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for c in contributions.into_iter().flatten() {
        *acc.entry(c.0).or_insert(0.0) += c.1;
    }
    AffinityMatrix::from_entries(table.num_superpoints, acc)
}

/// Majority label among each superpoint's `k` best-overlapping masks.
///
/// Masks are ranked by overlap descending, then mask id. Label ties go to the
/// larger summed overlap, then to the lexicographically smaller label.
pub fn vote_labels(table: &OverlapTable, k: usize) -> Vec<Option<String>> {
    assert!(k >= 1, "top-k must be at least 1");
    (0..table.num_superpoints)
        .map(|sp| {
            let mut row = table.row(sp).to_vec();
            if row.is_empty() {
                return None;
            }
            row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
            for &(m, s) in row.iter().take(k) {
                let e = tally.entry(table.masks[m].label.as_str()).or_default();
                e.0 += 1;
                e.1 += s;
            }
            // BTreeMap iterates labels in ascending order, so keeping the
            // first of equal candidates gives the lexicographic tie-break.
            let mut best: Option<(&str, usize, f64)> = None;
            for (&label, &(count, sum)) in &tally {
                let better = match best {
                    None => true,
                    Some((_, bc, bs)) => count > bc || (count == bc && sum > bs),
                };
                if better {
                    best = Some((label, count, sum));
                }
            }
            best.map(|b| b.0.to_string())
        })
        .collect()
}

/// Writes voted labels and their embeddings onto the superpoints.
pub fn attach_labels(
    superpoints: &mut [Superpoint],
    labels: &[Option<String>],
    table: &EmbeddingTable,
) -> Result<()> {
    for (sp, label) in superpoints.iter_mut().zip(labels) {
        sp.label_embedding = match label {
            Some(l) => Some(
                table
                    .get(l)
                    .ok_or_else(|| AffinityError::UnknownLabel(l.clone()))?
                    .to_vec(),
            ),
            None => None,
        };
        sp.label = label.clone();
    }
    Ok(())
}

fn semantic_value(
    a: Option<&[f64]>,
    b: Option<&[f64]>,
    tau_sim: f64,
) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => gate(pcio::dot(a, b), tau_sim),
        _ => 1.0,
    }
}

fn label_vectors<'a>(
    labels: &[Option<String>],
    table: &'a EmbeddingTable,
) -> Result<Vec<Option<&'a [f64]>>> {
    labels
        .iter()
        .map(|l| match l {
            Some(l) => table
                .get(l)
                .map(Some)
                .ok_or_else(|| AffinityError::UnknownLabel(l.clone())),
            None => Ok(None),
        })
        .collect()
}

/// `A^S` over every pair: gated cosine of the voted labels, 1 when either
/// side is unlabeled.
pub fn semantic_coherence(
    labels: &[Option<String>],
    table: &EmbeddingTable,
    tau_sim: f64,
) -> Result<AffinityMatrix> {
    let m = labels.len();
    let pairs = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j)));
    semantic_coherence_on(labels, table, tau_sim, pairs)
}

/// `A^S` evaluated only on the given pairs; all other entries are 0.
pub fn semantic_coherence_on(
    labels: &[Option<String>],
    table: &EmbeddingTable,
    tau_sim: f64,
    pairs: impl IntoIterator<Item = (usize, usize)>,
) -> Result<AffinityMatrix> {
    let vecs = label_vectors(labels, table)?;
    let entries = pairs
        .into_iter()
        .map(|(i, j)| ((i, j), semantic_value(vecs[i], vecs[j], tau_sim)));
    Ok(AffinityMatrix::from_entries(labels.len(), entries))
}

fn dist(cloud: &PointCloud, a: u32, b: u32) -> f64 {
    let p = cloud.positions();
    (p[a as usize] - p[b as usize]).norm()
}

/// Nearest-neighbour distance of each sample within its own sample set
/// (infinite for a single sample).
fn own_nn(samples: &[u32], cloud: &PointCloud) -> Vec<f64> {
    samples
        .iter()
        .enumerate()
        .map(|(a, &p)| {
            samples
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(_, &q)| dist(cloud, p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Exact spatial test for one pair: `d < τ_c`, where `d` is the smallest
/// cross-sample distance and `τ_c` twice the mean nearest-neighbour distance
/// in the union of both sample sets.
pub fn spatially_adjacent(a: &Superpoint, b: &Superpoint, cloud: &PointCloud) -> bool {
    pair_test(
        &a.fps_samples,
        &own_nn(&a.fps_samples, cloud),
        &b.fps_samples,
        &own_nn(&b.fps_samples, cloud),
        cloud,
    )
}

fn pair_test(sa: &[u32], na: &[f64], sb: &[u32], nb: &[f64], cloud: &PointCloud) -> bool {
    let mut nn_b = nb.to_vec();
    let mut sum = 0.0;
    let mut d_min = f64::INFINITY;
    for (x, &p) in sa.iter().enumerate() {
        let mut nn_p = na[x];
        for (y, &q) in sb.iter().enumerate() {
            let d = dist(cloud, p, q);
            nn_p = nn_p.min(d);
            nn_b[y] = nn_b[y].min(d);
            d_min = d_min.min(d);
        }
        sum += nn_p;
    }
    sum += nn_b.iter().sum::<f64>();
    let tau_c = 2.0 * sum / (sa.len() + sb.len()) as f64;
    d_min < tau_c
}

/// Binary `A^C` from FPS samples.
///
/// Pairs are pruned with a cheap bound before the exact test: the union
/// nearest-neighbour mean never exceeds the larger of the two per-set means,
/// and the sample gap is at least the centroid distance minus both sample
/// radii.
pub fn spatial_adjacency(superpoints: &[Superpoint], cloud: &PointCloud) -> AffinityMatrix {
    let pos = cloud.positions();
    let nn: Vec<Vec<f64>> = superpoints
        .par_iter()
        .map(|sp| own_nn(&sp.fps_samples, cloud))
        .collect();
    let mean_nn: Vec<f64> = nn
        .iter()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let radius: Vec<f64> = superpoints
        .iter()
        .map(|sp| {
            sp.fps_samples
                .iter()
                .map(|&i| (pos[i as usize] - sp.centroid).norm())
                .fold(0.0, f64::max)
        })
        .collect();

    let m = superpoints.len();
    let hits: Vec<Vec<usize>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let si = &superpoints[i];
            (i + 1..m)
                .filter(|&j| {
                    let sj = &superpoints[j];
                    if si.fps_samples.is_empty() || sj.fps_samples.is_empty() {
                        return false;
                    }
                    let bound = 2.0 * mean_nn[i].max(mean_nn[j]);
                    let gap = (si.centroid - sj.centroid).norm() - radius[i] - radius[j];
                    if gap >= bound {
                        return false;
                    }
                    pair_test(&si.fps_samples, &nn[i], &sj.fps_samples, &nn[j], cloud)
                })
                .collect()
        })
        .collect();
    let entries = hits
        .into_iter()
        .enumerate()
        .flat_map(|(i, js)| js.into_iter().map(move |j| ((i, j), 1.0)));
    AffinityMatrix::from_entries(m, entries)
}

/// Entrywise product `A^M ⊙ A^S ⊙ A^C`.
pub fn combine(
    am: &AffinityMatrix,
    a_s: &AffinityMatrix,
    ac: &AffinityMatrix,
) -> Result<AffinityMatrix> {
    for other in [a_s, ac] {
        if other.size() != am.size() {
            return Err(AffinityError::SizeMismatch {
                left: am.size(),
                right: other.size(),
            });
        }
    }
    let entries = am
        .iter()
        .map(|(i, j, v)| ((i, j), v * a_s.get(i, j) * ac.get(i, j)));
    Ok(AffinityMatrix::from_entries(am.size(), entries))
}

/// All three factors and their product.
#[derive(Debug, Clone)]
pub struct Affinities {
    pub mask: AffinityMatrix,
    pub semantic: AffinityMatrix,
    pub spatial: AffinityMatrix,
    pub combined: AffinityMatrix,
}

/// Builds every factor; `A^S` is only evaluated where `A^M` and `A^C` are
/// both nonzero, since it cannot matter elsewhere.
pub fn build_affinities(
    superpoints: &[Superpoint],
    overlaps: &OverlapTable,
    labels: &[Option<String>],
    table: &EmbeddingTable,
    cloud: &PointCloud,
    tau_iou: f64,
    tau_sim: f64,
) -> Result<Affinities> {
    let mask = mask_coherence(overlaps, tau_iou);
    let spatial = spatial_adjacency(superpoints, cloud);
    let support: Vec<(usize, usize)> = mask
        .iter()
        .filter(|&(i, j, _)| spatial.get(i, j) > 0.0)
        .map(|(i, j, _)| (i, j))
        .collect();
    let semantic = semantic_coherence_on(labels, table, tau_sim, support)?;
    let combined = combine(&mask, &semantic, &spatial)?;
    Ok(Affinities {
        mask,
        semantic,
        spatial,
        combined,
    })
}

#[derive(Serialize)]
struct Triplet {
    i: usize,
    j: usize,
    value: f64,
}

/// Upper-triangle triplets, one JSON object per line.
pub fn write_affinity_jsonl(path: &Path, matrix: &AffinityMatrix) -> pcio::Result<()> {
    let io = |source| PcioError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for (i, j, value) in matrix.iter() {
        let line = serde_json::to_string(&Triplet { i, j, value }).map_err(|source| {
            PcioError::Json {
                path: path.to_path_buf(),
                source,
            }
        })?;
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::project::MaskRef;
    use nalgebra::Point3;

    fn mask(label: &str) -> MaskRef {
        MaskRef {
            frame: 0,
            mask: 0,
            label: label.into(),
            detector_score: 1.0,
        }
    }

    #[test]
    fn gate_is_strict() {
        assert_eq!(gate(0.95, 0.9), 0.95);
        assert_eq!(gate(0.9, 0.9), 0.0);
        assert_eq!(gate(0.0, 0.9), 0.0);
    }

    #[test]
    fn mask_coherence_examples() {
        let t = OverlapTable::from_entries(
            2,
            vec![mask("a"), mask("a")],
            [((0, 0), 0.95), ((1, 0), 0.92), ((1, 1), 0.91)],
        );
        let am = mask_coherence(&t, 0.9);
        assert!((am.get(0, 1) - 0.95 * 0.92).abs() < 1e-12);

        let t = OverlapTable::from_entries(
            2,
            vec![mask("a"), mask("a")],
            [((0, 0), 1.0), ((1, 0), 1.0), ((0, 1), 1.0), ((1, 1), 1.0)],
        );
        assert_eq!(mask_coherence(&t, 0.9).get(0, 1), 2.0);

        let t = OverlapTable::from_entries(
            2,
            vec![mask("a"), mask("a")],
            [((0, 0), 1.0), ((1, 1), 1.0)],
        );
        assert_eq!(mask_coherence(&t, 0.9).nnz(), 0);
    }

    #[test]
    fn vote_majority_and_ties() {
        let labels = ["chair", "chair", "table", "chair", "table"];
        let t = OverlapTable::from_entries(
            1,
            labels.iter().map(|l| mask(l)).collect(),
            (0..5).map(|m| ((0, m), 0.9)),
        );
        assert_eq!(vote_labels(&t, 5), vec![Some("chair".to_string())]);

        let t = OverlapTable::from_entries(
            1,
            vec![mask("chair"), mask("table"), mask("chair"), mask("table")],
            [((0, 0), 0.9), ((0, 1), 0.95), ((0, 2), 0.8), ((0, 3), 0.95)],
        );
        // chair 1.7 vs table 1.9
        assert_eq!(vote_labels(&t, 5), vec![Some("table".to_string())]);

        let t = OverlapTable::from_entries(1, vec![mask("chair")], []);
        assert_eq!(vote_labels(&t, 5), vec![None]);
    }

    #[test]
    fn vote_uses_only_top_k() {
        // the two best masks say "lamp"; three weaker ones say "desk"
        let t = OverlapTable::from_entries(
            1,
            vec![mask("desk"), mask("desk"), mask("desk"), mask("lamp"), mask("lamp")],
            [((0, 0), 0.5), ((0, 1), 0.5), ((0, 2), 0.5), ((0, 3), 0.9), ((0, 4), 0.9)],
        );
        assert_eq!(vote_labels(&t, 2), vec![Some("lamp".to_string())]);
        assert_eq!(vote_labels(&t, 5), vec![Some("desk".to_string())]);
    }

    fn table() -> EmbeddingTable {
        let c = 0.95f64;
        EmbeddingTable::new(
            3,
            [
                ("a", vec![1.0, 0.0, 0.0]),
                ("b", vec![c, (1.0 - c * c).sqrt(), 0.0]),
                ("z", vec![0.0, 0.0, 1.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn semantic_examples() {
        let labels = vec![
            Some("a".to_string()),
            Some("a".to_string()),
            Some("b".to_string()),
            Some("z".to_string()),
            None,
        ];
        let s = semantic_coherence(&labels, &table(), 0.9).unwrap();
        assert!((s.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((s.get(0, 2) - 0.95).abs() < 1e-12);
        assert_eq!(s.get(0, 3), 0.0);
        assert_eq!(s.get(3, 4), 1.0);

        let bad = vec![Some("nope".to_string())];
        assert!(matches!(
            semantic_coherence(&bad, &table(), 0.9),
            Err(AffinityError::UnknownLabel(l)) if l == "nope"
        ));
    }

    #[test]
    fn combine_products() {
        let am = AffinityMatrix::from_entries(3, [((0, 1), 0.874), ((1, 2), 1.0)]);
        let a_s = AffinityMatrix::from_entries(3, [((0, 1), 0.95), ((1, 2), 1.0)]);
        let ac = AffinityMatrix::from_entries(3, [((0, 1), 1.0)]);
        let a = combine(&am, &a_s, &ac).unwrap();
        assert!((a.get(0, 1) - 0.8303).abs() < 1e-12);
        assert_eq!(a.get(1, 2), 0.0);
        assert_eq!(a.get(2, 2), 1.0);
        assert!(matches!(
            combine(&am, &AffinityMatrix::new(2), &ac),
            Err(AffinityError::SizeMismatch { .. })
        ));
    }

    fn grid_superpoints(offset_x: f64, spacing: f64) -> (PointCloud, Vec<Superpoint>) {
        // two 8×8 patches; the second starts one spacing after the first,
        // or `offset_x` further away
        let mut pts = Vec::new();
        for patch in 0..2 {
            let x0 = patch as f64 * (8.0 * spacing + offset_x);
            for a in 0..8 {
                for b in 0..8 {
                    pts.push(Point3::new(x0 + a as f64 * spacing, b as f64 * spacing, 0.0));
                }
            }
        }
        let cloud = PointCloud::new(pts, None, None).unwrap();
        let mut sps = vec![
            Superpoint::new(0, (0..64).collect(), &cloud),
            Superpoint::new(1, (64..128).collect(), &cloud),
        ];
        for sp in &mut sps {
            sp.fps_samples = sp.point_indices.clone();
        }
        (cloud, sps)
    }

    #[test]
    fn spatial_contiguous_and_far() {
        let (cloud, sps) = grid_superpoints(0.0, 0.01);
        // gap 0.01, union NN mean 0.01 → τ_c = 0.02
        assert!(spatially_adjacent(&sps[0], &sps[1], &cloud));
        assert_eq!(spatial_adjacency(&sps, &cloud).get(0, 1), 1.0);

        let (cloud, sps) = grid_superpoints(10.0, 0.01);
        assert!(!spatially_adjacent(&sps[0], &sps[1], &cloud));
        let ac = spatial_adjacency(&sps, &cloud);
        assert_eq!(ac.get(0, 1), 0.0);
        assert_eq!(ac.get(1, 1), 1.0);
    }

    #[test]
    fn induced_and_degrees() {
        let a = AffinityMatrix::from_entries(4, [((0, 1), 1.0), ((1, 3), 0.5), ((2, 3), 2.0)]);
        assert_eq!(a.degrees(), vec![1.0, 1.5, 2.0, 2.5]);
        let sub = a.induced(&[3, 1]);
        assert_eq!(sub.size(), 2);
        assert_eq!(sub.get(0, 1), 0.5);
    }
}

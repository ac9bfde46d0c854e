//! Spectral clustering of superpoints.
//!
//! Zero-degree superpoints are split off as singletons; the rest are embedded
//! with the low eigenvectors of the normalized Laplacian, the cluster count is
//! read from the eigengap and rows are discretized with k-means. The
//! hierarchical variant clusters Hilbert-ordered windows separately and then
//! merges coarse masks across neighbouring windows.

mod eigen;
mod hierarchical;
mod hilbert;
mod kmeans;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::affinity::AffinityMatrix;

pub use eigen::{eig_ascending, Spectrum};
pub use hierarchical::{coarse_masks, hierarchical_cluster, CoarseMask, HierarchicalParams};
pub use hilbert::{hilbert_index, hilbert_serialize, quantize};

use eigen::SparseSym;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("superpoint {0} has zero degree; strip isolated nodes first")]
    ZeroDegree(usize),

    #[error("eigensolver did not converge")]
    ConvergenceFailure,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    pub seed: u64,
    /// Largest matrix handed to the dense eigensolver.
    pub dense_limit: usize,
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self {
            seed: 0,
            dense_limit: 2000,
        }
    }
}

/// Hard partition of superpoints into clusters.
///
/// Cluster ids are canonical: clusters with at least one edge are numbered by
/// their smallest superpoint id, then zero-degree singletons follow in
/// ascending id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterResult {
    pub assignments: Vec<usize>,
    pub num_clusters: usize,
    pub singletons: Vec<usize>,
}

impl ClusterResult {
    /// Members of each cluster, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (sp, &c) in self.assignments.iter().enumerate() {
            out[c].push(sp);
        }
        out
    }

    pub(crate) fn from_groups(size: usize, mut groups: Vec<Vec<usize>>, mut singletons: Vec<usize>) -> Self {
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.retain(|g| !g.is_empty());
        groups.sort_by_key(|g| g[0]);
        singletons.sort_unstable();
        let mut assignments = vec![usize::MAX; size];
        for (c, g) in groups.iter().enumerate() {
            for &sp in g {
                assignments[sp] = c;
            }
        }
        for (k, &sp) in singletons.iter().enumerate() {
            assignments[sp] = groups.len() + k;
        }
        assert!(
            assignments.iter().all(|&c| c != usize::MAX),
            "groups must cover every superpoint"
        );
        Self {
            assignments,
            num_clusters: groups.len() + singletons.len(),
            singletons,
        }
    }
}

fn check_degrees(a: &AffinityMatrix) -> Result<Vec<f64>> {
    let d = a.degrees();
    if let Some(i) = d.iter().position(|&x| x <= 0.0) {
        return Err(SpectralError::ZeroDegree(i));
    }
    Ok(d)
}

/// `L = D^{-1/2} (D − A) D^{-1/2}` over off-diagonal entries of `A`.
pub fn normalized_laplacian(a: &AffinityMatrix) -> Result<DMatrix<f64>> {
    Ok(sparse_laplacian(a)?.to_dense())
}

fn sparse_laplacian(a: &AffinityMatrix) -> Result<SparseSym> {
    let d = check_degrees(a)?;
    let inv: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let rows = a
        .neighbors()
        .into_iter()
        .enumerate()
        .map(|(i, row)| row.into_iter().map(|(j, v)| (j, -v * inv[i] * inv[j])).collect())
        .collect();
    Ok(SparseSym {
        diag: vec![1.0; a.size()],
        rows,
    })
}

/// Connected components, each ascending, ordered by smallest member.
pub fn connected_components(a: &AffinityMatrix) -> Vec<Vec<usize>> {
    let adj = a.neighbors();
    let mut seen = vec![false; a.size()];
    let mut out = Vec::new();
    for start in 0..a.size() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut k = 0;
        while k < comp.len() {
            for &(j, _) in &adj[comp[k]] {
                if !seen[j] {
                    seen[j] = true;
                    comp.push(j);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Laplacian spectrum assembled per connected component. Above
/// `dense_limit` only the lowest `max(64, M/10)` eigenpairs are kept and large
/// components are solved with Lanczos.
pub fn laplacian_spectrum(a: &AffinityMatrix, params: &SpectralParams) -> Result<Spectrum> {
    check_degrees(a)?;
    let m = a.size();
    let keep = if m <= params.dense_limit {
        m
    } else {
        (m / 10).max(64).min(m)
    };
    let comps = connected_components(a);
    let mut parts = Vec::with_capacity(comps.len());
    for comp in &comps {
        let op = sparse_laplacian(&a.induced(comp))?;
        let s = if comp.len() <= params.dense_limit {
            eig_ascending(&op.to_dense())?
        } else {
            eigen::lanczos_lowest(&op, keep, params.seed)?
        };
        parts.push(s);
    }

    let mut keys: Vec<(f64, usize, usize)> = parts
        .iter()
        .enumerate()
        .flat_map(|(c, s)| s.values.iter().enumerate().map(move |(k, &v)| (v, c, k)))
        .collect();
    keys.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    keys.truncate(keep);

    let mut vectors = DMatrix::zeros(m, keys.len());
    for (col, &(_, c, k)) in keys.iter().enumerate() {
        for (local, &global) in comps[c].iter().enumerate() {
            vectors[(global, col)] = parts[c].vectors[(local, k)];
        }
    }
    Ok(Spectrum {
        values: keys.iter().map(|k| k.0).collect(),
        vectors,
    })
}

/// Index `H` whose eigenvectors `y_0..y_H` define `H + 1` clusters.
///
/// `H = argmax_{1 ≤ j ≤ M−2} (λ_{j+1} − λ_j)`, smallest `j` on ties, except
/// that `H = 0` when the first gap `λ_1 − λ_0` is strictly larger than every
/// candidate (a single connected, well-mixed graph). With two values, `H = 0`
/// if they differ and 1 otherwise; with one value `H = 0`.
pub fn eigengap(lambdas: &[f64]) -> usize {
    let m = lambdas.len();
    if m <= 1 {
        return 0;
    }
    let first = lambdas[1] - lambdas[0];
    if m == 2 {
        return if first > 0.0 { 0 } else { 1 };
    }
    let mut h = 1;
    let mut best = lambdas[2] - lambdas[1];
    for j in 2..=m - 2 {
        let g = lambdas[j + 1] - lambdas[j];
        if g > best {
            best = g;
            h = j;
        }
    }
    if first > best {
        0
    } else {
        h
    }
}

/// Row-normalizes `y` and runs seeded k-means with `k` clusters.
pub fn cluster_eigvecs(y: &DMatrix<f64>, k: usize, seed: u64) -> Vec<usize> {
    let rows: Vec<Vec<f64>> = y
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    kmeans::kmeans(&kmeans::normalize_rows(rows), k, seed, kmeans::RESTARTS)
}

/// Flat spectral clustering of all superpoints.
pub fn spectral_cluster(a: &AffinityMatrix, params: &SpectralParams) -> Result<ClusterResult> {
    let degrees = a.degrees();
    let (active, singletons): (Vec<usize>, Vec<usize>) =
        (0..a.size()).partition(|&i| degrees[i] > 0.0);
    if active.is_empty() {
        return Ok(ClusterResult::from_groups(a.size(), Vec::new(), singletons));
    }
    let sub = a.induced(&active);
    let spectrum = laplacian_spectrum(&sub, params)?;
    let k = eigengap(&spectrum.values) + 1;
    let y = spectrum.vectors.columns(0, k).into_owned();
    let labels = cluster_eigvecs(&y, k, params.seed);
    let mut groups = vec![Vec::new(); k];
    for (local, &l) in labels.iter().enumerate() {
        groups[l].push(active[local]);
    }
    Ok(ClusterResult::from_groups(a.size(), groups, singletons))
}

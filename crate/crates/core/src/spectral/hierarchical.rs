use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::{hilbert_serialize, spectral_cluster, ClusterResult, Result, SpectralError, SpectralParams};
use crate::affinity::AffinityMatrix;
use crate::superpoint::Superpoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchicalParams {
    /// Window size `N_s`; `None` means `ceil(M / 2)`.
    pub window: Option<usize>,
    pub hilbert_bits: u32,
    /// Coarse masks merge while their best cross affinity is at least this.
    pub merge_threshold: f64,
}

impl Default for HierarchicalParams {
    fn default() -> Self {
        Self {
            window: None,
            hilbert_bits: 10,
            merge_threshold: 0.9 * 0.9,
        }
    }
}

/// A cluster found inside one Hilbert window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseMask {
    pub superpoint_ids: Vec<usize>,
    pub group_index: usize,
}

fn window_size(params: &HierarchicalParams, m: usize) -> Result<usize> {
    let w = params.window.unwrap_or(m.div_ceil(2)).max(1);
    if params.window.is_some_and(|w| w < 2) {
        return Err(SpectralError::InvalidParameter(format!(
            "window size must be >= 2, got {w}"
        )));
    }
    Ok(w)
}

/// Clusters each Hilbert window separately. Superpoints without any edge in
/// the full matrix are left out; they become singletons of the final result.
pub fn coarse_masks(
    superpoints: &[Superpoint],
    a: &AffinityMatrix,
    hparams: &HierarchicalParams,
    params: &SpectralParams,
) -> Result<Vec<CoarseMask>> {
    assert_eq!(superpoints.len(), a.size());
    let m = a.size();
    if m == 0 {
        return Ok(Vec::new());
    }
    let size = window_size(hparams, m)?;
    let centroids: Vec<_> = superpoints.iter().map(|s| s.centroid).collect();
    let order = hilbert_serialize(&centroids, hparams.hilbert_bits);
    let degrees = a.degrees();

    let windows: Vec<Vec<usize>> = order
        .chunks(size)
        .map(|w| {
            let mut ids = w.to_vec();
            // ascending ids make a single window identical to the flat run
            ids.sort_unstable();
            ids
        })
        .collect();
    let per_window: Vec<Result<Vec<CoarseMask>>> = windows
        .par_iter()
        .enumerate()
        .map(|(g, ids)| {
            let r = spectral_cluster(&a.induced(ids), params)?;
            Ok(r.clusters()
                .into_iter()
                .map(|c| c.into_iter().map(|local| ids[local]).collect::<Vec<_>>())
                .filter(|c| !(c.len() == 1 && degrees[c[0]] <= 0.0))
                .map(|superpoint_ids| CoarseMask {
                    superpoint_ids,
                    group_index: g,
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for w in per_window {
        out.extend(w?);
    }
    Ok(out)
}

struct Merged {
    members: Vec<usize>,
    groups: BTreeSet<usize>,
    alive: bool,
}

fn eligible(a: &Merged, b: &Merged) -> bool {
    a.groups.is_disjoint(&b.groups)
        && a
            .groups
            .iter()
            .any(|&g| b.groups.contains(&(g + 1)) || (g > 0 && b.groups.contains(&(g - 1))))
}

/// Hilbert-windowed spectral clustering followed by greedy max-linkage
/// merging of coarse masks from neighbouring windows.
///
/// A merged mask remembers which windows it spans; two masks may merge only
/// if they share no window and at least one of their windows are adjacent.
pub fn hierarchical_cluster(
    superpoints: &[Superpoint],
    a: &AffinityMatrix,
    hparams: &HierarchicalParams,
    params: &SpectralParams,
) -> Result<ClusterResult> {
    let m = a.size();
    let coarse = coarse_masks(superpoints, a, hparams, params)?;
    let mut owner = vec![usize::MAX; m];
    let mut masks: Vec<Merged> = coarse
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            for &sp in &c.superpoint_ids {
                owner[sp] = k;
            }
            Merged {
                members: c.superpoint_ids,
                groups: BTreeSet::from([c.group_index]),
                alive: true,
            }
        })
        .collect();

    let mut scores: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, j, v) in a.iter() {
        let (x, y) = (owner[i], owner[j]);
        if x != y {
            let e = scores.entry((x.min(y), x.max(y))).or_insert(0.0);
            *e = e.max(v);
        }
    }

    loop {
        let mut best: Option<((usize, usize), f64)> = None;
        for (&(x, y), &s) in &scores {
            if s >= hparams.merge_threshold
                && eligible(&masks[x], &masks[y])
                && best.is_none_or(|b| s > b.1)
            {
                best = Some(((x, y), s));
            }
        }
        let Some(((x, y), _)) = best else { break };

        let moved = std::mem::take(&mut masks[y].members);
        let groups = std::mem::take(&mut masks[y].groups);
        masks[y].alive = false;
        masks[x].members.extend(moved);
        masks[x].groups.extend(groups);

        let touching: Vec<((usize, usize), f64)> = scores
            .iter()
            .filter(|(&(p, q), _)| p == y || q == y)
            .map(|(&k, &v)| (k, v))
            .collect();
        for (key, v) in touching {
            scores.remove(&key);
            let other = if key.0 == y { key.1 } else { key.0 };
            if other != x {
                let e = scores.entry((x.min(other), x.max(other))).or_insert(0.0);
                *e = e.max(v);
            }
        }
    }

    let degrees = a.degrees();
    let singletons: Vec<usize> = (0..m).filter(|&i| degrees[i] <= 0.0).collect();
    let groups = masks
        .into_iter()
        .filter(|mk| mk.alive)
        .map(|mk| mk.members)
        .collect();
    Ok(ClusterResult::from_groups(m, groups, singletons))
}

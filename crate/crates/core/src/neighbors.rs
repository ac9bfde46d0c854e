//! k-nearest-neighbour queries over 3D points.

use std::num::NonZeroUsize;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::Point3;
use rayon::prelude::*;

/// For every point, the indices of its `k` nearest neighbours sorted by
/// (distance, index). With `include_self` the point itself counts as one
/// of the `k`.
pub fn knn_indices(points: &[Point3<f64>], k: usize, include_self: bool) -> Vec<Vec<u32>> {
    let n = points.len();
    if n == 0 || k == 0 {
        return vec![Vec::new(); n];
    }
    let coords: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
    let tree: ImmutableKdTree<f64, 3> =
        ImmutableKdTree::new_from_slice(&coords).expect("kd-tree construction");
    let want = if include_self { k } else { k + 1 }.min(n);
    let qty = NonZeroUsize::new(want).unwrap();

    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut found: Vec<(f64, u32)> = tree
                .query(&coords[i])
                .nearest_n::<SquaredEuclidean<f64>>(qty)
                .execute()
                .into_iter()
                .map(|r| (r.distance, r.item as u32))
                .collect();
            found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut ids: Vec<u32> = found.into_iter().map(|(_, j)| j).collect();
            if !include_self {
                match ids.iter().position(|&j| j as usize == i) {
                    Some(pos) => {
                        ids.remove(pos);
                    }
                    None => {
                        ids.pop();
                    }
                }
            }
            ids.truncate(k);
            ids
        })
        .collect()
}

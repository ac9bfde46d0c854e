use nalgebra::Vector3;

use crate::neighbors::knn_indices;
use crate::pcio::PointCloud;

/// Largest possible RGB distance, 255·√3.
pub(crate) fn max_rgb_distance() -> f64 {
    255.0 * 3f64.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: u32,
    pub j: u32,
    pub weight: f64,
}

/// Undirected k-NN graph; every edge has `i < j` and appears once.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGraph {
    pub num_points: usize,
    pub k: usize,
    pub edges: Vec<Edge>,
}

pub(crate) fn edge_weight(
    ni: &Vector3<f64>,
    nj: &Vector3<f64>,
    ci: Option<[u8; 3]>,
    cj: Option<[u8; 3]>,
    w_normal: f64,
    w_color: f64,
) -> f64 {
    let normal_term = (1.0 - ni.dot(nj).abs()).max(0.0);
    let color_term = match (ci, cj) {
        (Some(a), Some(b)) => {
            let d2: f64 = (0..3)
                .map(|c| {
                    let d = a[c] as f64 - b[c] as f64;
                    d * d
                })
                .sum();
            d2.sqrt() / max_rgb_distance()
        }
        _ => 0.0,
    };
    w_normal * normal_term + w_color * color_term
}

pub fn build_knn_graph(
    cloud: &PointCloud,
    normals: &[Vector3<f64>],
    k: usize,
    w_normal: f64,
    w_color: f64,
) -> PointGraph {
    assert_eq!(normals.len(), cloud.len());
    let nn = knn_indices(cloud.positions(), k, false);
    let mut pairs: Vec<(u32, u32)> = nn
        .iter()
        .enumerate()
        .flat_map(|(i, ids)| {
            let i = i as u32;
            ids.iter().map(move |&j| (i.min(j), i.max(j)))
        })
        .filter(|(i, j)| i != j)
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let colors = cloud.colors();
    let edges = pairs
        .into_iter()
        .map(|(i, j)| Edge {
            i,
            j,
            weight: edge_weight(
                &normals[i as usize],
                &normals[j as usize],
                colors.map(|c| c[i as usize]),
                colors.map(|c| c[j as usize]),
                w_normal,
                w_color,
            ),
        })
        .collect();
    PointGraph {
        num_points: cloud.len(),
        k,
        edges,
    }
}

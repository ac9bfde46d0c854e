use std::collections::BTreeMap;

use super::graph::{Edge, PointGraph};
use super::Superpoint;
use crate::pcio::PointCloud;

struct Forest {
    parent: Vec<u32>,
    size: Vec<u32>,
    /// Largest MST edge inside the component (valid at roots).
    internal: Vec<f64>,
}

impl Forest {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            internal: vec![0.0; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32, w: f64) -> u32 {
        let (big, small) = if self.size[a as usize] >= self.size[b as usize] {
            (a, b)
        } else {
            (b, a)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        self.internal[big as usize] = w;
        big
    }

    fn threshold(&self, root: u32, kf: f64) -> f64 {
        self.internal[root as usize] + kf / self.size[root as usize] as f64
    }

    /// Component id per point, numbered by smallest member index.
    fn labels(&mut self) -> Vec<u32> {
        let n = self.parent.len();
        let mut ids: BTreeMap<u32, u32> = BTreeMap::new();
        let mut out = Vec::with_capacity(n);
        for i in 0..n as u32 {
            let r = self.find(i);
            let next = ids.len() as u32;
            out.push(*ids.entry(r).or_insert(next));
        }
        out
    }
}

fn sorted_edges(graph: &PointGraph) -> Vec<Edge> {
    let mut edges = graph.edges.clone();
    edges.sort_by(|a, b| {
        a.weight
            .total_cmp(&b.weight)
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });
    edges
}

fn run_fh(graph: &PointGraph, edges: &[Edge], kf: f64) -> Forest {
    let mut forest = Forest::new(graph.num_points);
    for e in edges {
        let a = forest.find(e.i);
        let b = forest.find(e.j);
        if a == b {
            continue;
        }
        if e.weight <= forest.threshold(a, kf) && e.weight <= forest.threshold(b, kf) {
            forest.union(a, b, e.weight);
        }
    }
    forest
}

/// Felzenszwalb–Huttenlocher components before the minimum-size pass.
pub fn felzenszwalb_components(graph: &PointGraph, kf: f64) -> Vec<u32> {
    let edges = sorted_edges(graph);
    run_fh(graph, &edges, kf).labels()
}

/// Component label per point after folding components smaller than
/// `min_size` into their lowest-weight neighbour.
pub fn segment_labels(graph: &PointGraph, kf: f64, min_size: usize) -> Vec<u32> {
    let edges = sorted_edges(graph);
    let mut forest = run_fh(graph, &edges, kf);
    for e in &edges {
        let a = forest.find(e.i);
        let b = forest.find(e.j);
        if a != b
            && (forest.size[a as usize] < min_size as u32
                || forest.size[b as usize] < min_size as u32)
        {
            forest.union(a, b, e.weight);
        }
    }
    forest.labels()
}

/// Superpoints ordered (and numbered) by their smallest point index.
pub fn segment_superpoints(
    graph: &PointGraph,
    cloud: &PointCloud,
    kf: f64,
    min_size: usize,
) -> Vec<Superpoint> {
    assert_eq!(graph.num_points, cloud.len());
    let labels = segment_labels(graph, kf, min_size);
    group_by_label(&labels)
        .into_iter()
        .enumerate()
        .map(|(id, pts)| Superpoint::new(id, pts, cloud))
        .collect()
}

pub(crate) fn group_by_label(labels: &[u32]) -> Vec<Vec<u32>> {
    let n_groups = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut groups = vec![Vec::new(); n_groups];
    for (i, &l) in labels.iter().enumerate() {
        groups[l as usize].push(i as u32);
    }
    groups
}

//! Independent reference implementations shared by the integration tests.
//!
//! None of these call into the code they check beyond plain data types.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use nalgebra::Point3;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use superseg::affinity::AffinityMatrix;
use superseg::evalkit::{GroundTruthInstance, Prediction};
use superseg::pcio::{Bitmap, DepthMap, EmbeddingTable, Frame, Intrinsics, Mask2D, PointCloud};

pub type Q = Ratio<i128>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn q_to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn iou_exact(a: &[u32], b: &[u32]) -> Q {
    let a: HashSet<u32> = a.iter().copied().collect();
    let b: HashSet<u32> = b.iter().copied().collect();
    let inter = a.intersection(&b).count() as i128;
    let union = a.union(&b).count() as i128;
    Ratio::new(inter, union)
}

/// Area under the interpolated precision/recall curve, evaluated at every
/// recall level `m / num_gt`.
fn ap_from_hits(hits: &[bool], num_gt: usize) -> Q {
    if num_gt == 0 {
        return Q::from_integer(0);
    }
    let mut curve = Vec::new();
    let mut tp = 0i128;
    for (k, &h) in hits.iter().enumerate() {
        tp += h as i128;
        curve.push((Ratio::new(tp, num_gt as i128), Ratio::new(tp, k as i128 + 1)));
    }
    let mut ap = Q::from_integer(0);
    for m in 1..=num_gt as i128 {
        let r = Ratio::new(m, num_gt as i128);
        let p = curve
            .iter()
            .filter(|(rec, _)| *rec >= r)
            .map(|(_, prec)| *prec)
            .max()
            .unwrap_or(Q::from_integer(0));
        ap += p / Q::from_integer(num_gt as i128);
    }
    ap
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApResult {
    pub ap: f64,
    pub ap50: f64,
    pub ap25: f64,
}

/// Reference evaluator in exact rational arithmetic: rank by confidence then
/// id, walk each class and threshold, let every prediction take the free
/// ground truth with the highest IoU (first on ties), and average per class,
/// then per threshold.
pub fn brute_force_ap(
    preds: &[Prediction],
    gts: &[GroundTruthInstance],
    table: &EmbeddingTable,
    tau_bert: f64,
) -> ApResult {
    let mut order: Vec<&Prediction> = preds.iter().filter(|p| p.label != "unknown").collect();
    order.sort_by(|a, b| b.confidence.partial_cmp(&a.confidence).unwrap().then(a.id.cmp(&b.id)));
    let mut classes: BTreeMap<&str, Vec<&GroundTruthInstance>> = BTreeMap::new();
    for g in gts {
        classes.entry(&g.label).or_default().push(g);
    }

    let at = |t: Q| -> Q {
        if classes.is_empty() {
            return Q::from_integer(0);
        }
        let mut total = Q::from_integer(0);
        for (class, members) in &classes {
            let mut taken = vec![false; members.len()];
            let mut hits = Vec::new();
            for p in &order {
                if table.cosine(&p.label, class).unwrap() < tau_bert {
                    continue;
                }
                let mut pick: Option<(usize, Q)> = None;
                for (k, g) in members.iter().enumerate() {
                    let v = iou_exact(&p.points, &g.points);
                    if taken[k] || v < t {
                        continue;
                    }
                    if pick.map_or(true, |(_, bv)| v > bv) {
                        pick = Some((k, v));
                    }
                }
                if let Some((k, _)) = pick {
                    taken[k] = true;
                }
                hits.push(pick.is_some());
            }
            total += ap_from_hits(&hits, members.len());
        }
        total / Q::from_integer(classes.len() as i128)
    };

    let sweep: Vec<Q> = (0..10).map(|i| at(Ratio::new(50 + 5 * i, 100))).collect();
    let ap = sweep.iter().fold(Q::from_integer(0), |a, &b| a + b) / Q::from_integer(10);
    ApResult {
        ap: q_to_f64(ap),
        ap50: q_to_f64(at(Ratio::new(1, 2))),
        ap25: q_to_f64(at(Ratio::new(1, 4))),
    }
}

/// Random tiny evaluation problem: up to 5 disjoint ground-truth instances
/// and up to 5 predictions over 20 points, labels from a 3-word vocabulary.
pub fn random_eval_case(r: &mut ChaCha8Rng) -> (Vec<Prediction>, Vec<GroundTruthInstance>) {
    let labels = ["chair", "table", "lamp"];
    let mut pool: Vec<u32> = (0..20).collect();
    for i in (1..pool.len()).rev() {
        pool.swap(i, r.gen_range(0..=i));
    }
    let n_gt = r.gen_range(1..=5);
    let mut gts = Vec::new();
    let mut cursor = 0;
    for id in 0..n_gt {
        let len = r.gen_range(1..=4);
        let mut points: Vec<u32> = pool[cursor..cursor + len].to_vec();
        points.sort_unstable();
        cursor += len;
        gts.push(GroundTruthInstance {
            id,
            label: labels[r.gen_range(0..labels.len())].to_string(),
            points,
        });
    }
    let n_pred = r.gen_range(0..=5);
    let preds = (0..n_pred)
        .map(|id| {
            let mut points: Vec<u32> = if r.gen_bool(0.6) && !gts.is_empty() {
                // perturb a ground-truth instance
                let g = &gts[r.gen_range(0..gts.len())];
                let mut p: Vec<u32> = g.points.iter().copied().filter(|_| r.gen_bool(0.8)).collect();
                for _ in 0..r.gen_range(0..3) {
                    p.push(r.gen_range(0..20));
                }
                p
            } else {
                (0..r.gen_range(1..5)).map(|_| r.gen_range(0..20)).collect()
            };
            if points.is_empty() {
                points.push(r.gen_range(0..20));
            }
            points.sort_unstable();
            points.dedup();
            Prediction {
                id,
                label: labels[r.gen_range(0..labels.len())].to_string(),
                // a coarse grid so confidence ties occur
                confidence: r.gen_range(0..5) as f64 / 4.0,
                points,
            }
        })
        .collect();
    (preds, gts)
}

pub fn one_hot(labels: &[&str]) -> EmbeddingTable {
    let n = labels.len();
    EmbeddingTable::new(
        n,
        labels.iter().enumerate().map(|(i, l)| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            (l.to_string(), v)
        }),
    )
    .unwrap()
}

/// Nearest pixel index with halves away from zero, written without
/// `f64::round`.
fn nearest(x: f64) -> f64 {
    if x >= 0.0 {
        (x + 0.5).floor()
    } else {
        (x - 0.5).ceil()
    }
}

/// Pixel of one point rendered by an explicit pinhole model, `None` when
/// behind the camera, off the image or occluded per the depth map.
pub fn raster_pixel(p: &Point3<f64>, frame: &Frame, tau_depth: f64) -> Option<(u32, u32)> {
    let m = &frame.world_to_camera;
    let cam: Vec<f64> = (0..3)
        .map(|r| m[(r, 0)] * p.x + m[(r, 1)] * p.y + m[(r, 2)] * p.z + m[(r, 3)])
        .collect();
    let z = cam[2];
    if !(z > 0.0) {
        return None;
    }
    let k = &frame.intrinsics;
    let u = nearest(k.fx * (cam[0] / z) + k.cx);
    let v = nearest(k.fy * (cam[1] / z) + k.cy);
    if u < 0.0 || v < 0.0 || u >= frame.width as f64 || v >= frame.height as f64 {
        return None;
    }
    let (u, v) = (u as u32, v as u32);
    if let Some(d) = &frame.depth {
        let mm = d.millimeters[(v * frame.width + u) as usize];
        if mm != 0 && (z - mm as f64 / 1000.0).abs() > tau_depth {
            return None;
        }
    }
    Some((u, v))
}

/// Containment score: share of the visible member points that land in the
/// mask.
pub fn raster_containment(points: &[u32], cloud: &PointCloud, mask: &Mask2D, frame: &Frame, tau_depth: f64) -> f64 {
    let mut visible = 0usize;
    let mut inside = 0usize;
    for &i in points {
        if let Some((u, v)) = raster_pixel(&cloud.positions()[i as usize], frame, tau_depth) {
            visible += 1;
            if mask.bitmap.bits()[(u * frame.height + v) as usize] {
                inside += 1;
            }
        }
    }
    if visible == 0 {
        0.0
    } else {
        inside as f64 / visible as f64
    }
}

/// Pixel IoU between the distinct projected footprint and the mask.
pub fn raster_iou(points: &[u32], cloud: &PointCloud, mask: &Mask2D, frame: &Frame, tau_depth: f64) -> f64 {
    let fp: HashSet<(u32, u32)> = points
        .iter()
        .filter_map(|&i| raster_pixel(&cloud.positions()[i as usize], frame, tau_depth))
        .collect();
    if fp.is_empty() {
        return 0.0;
    }
    let area = mask.bitmap.bits().iter().filter(|&&b| b).count();
    let inter = fp
        .iter()
        .filter(|&&(u, v)| mask.bitmap.bits()[(u * frame.height + v) as usize])
        .count();
    inter as f64 / (fp.len() + area - inter) as f64
}

/// A random camera roughly facing the unit cube, random rectangular masks
/// and, for odd seeds, a random depth map.
pub fn random_frame(r: &mut ChaCha8Rng, with_depth: bool) -> Frame {
    let (w, h) = (r.gen_range(40..120), r.gen_range(30..90));
    let eye = Point3::new(r.gen_range(-4.0..4.0), r.gen_range(-4.0..4.0), r.gen_range(2.0..5.0));
    let target = Point3::new(r.gen_range(-0.3..0.3), r.gen_range(-0.3..0.3), r.gen_range(-0.3..0.3));
    let f = r.gen_range(40.0..120.0);
    let masks = (0..r.gen_range(1..5))
        .map(|k| {
            let mut bm = Bitmap::new(w, h);
            let (u0, v0) = (r.gen_range(0..w), r.gen_range(0..h));
            let (u1, v1) = (r.gen_range(u0..w), r.gen_range(v0..h));
            for u in u0..=u1 {
                for v in v0..=v1 {
                    bm.set(u, v, true);
                }
            }
            Mask2D {
                label: format!("m{k}"),
                score: 1.0,
                bitmap: bm,
            }
        })
        .collect();
    let depth = with_depth.then(|| DepthMap {
        width: w,
        height: h,
        millimeters: (0..w * h)
            .map(|_| if r.gen_bool(0.3) { 0 } else { r.gen_range(2000..7000) })
            .collect(),
    });
    Frame {
        image_id: "rand".into(),
        width: w,
        height: h,
        intrinsics: Intrinsics {
            fx: f,
            fy: f * r.gen_range(0.8..1.2),
            cx: w as f64 / 2.0 + r.gen_range(-5.0..5.0),
            cy: h as f64 / 2.0 + r.gen_range(-5.0..5.0),
        },
        world_to_camera: superseg::synth::look_at(eye, target),
        masks,
        depth,
    }
}

pub fn random_cloud(r: &mut ChaCha8Rng, n: usize) -> PointCloud {
    let pts = (0..n)
        .map(|_| Point3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
        .collect();
    PointCloud::new(pts, None, None).unwrap()
}

/// Union-find component label of every node, numbered by first appearance.
pub fn union_find_labels(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<usize> {
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut ids = BTreeMap::new();
    (0..n)
        .map(|i| {
            let root = find(&mut parent, i);
            let next = ids.len();
            *ids.entry(root).or_insert(next)
        })
        .collect()
}

/// True when the two labelings induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut ab = BTreeMap::new();
    let mut ba = BTreeMap::new();
    a.iter().zip(b).all(|(&x, &y)| *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x)
}

/// Block-diagonal affinity over shuffled ids: `blocks` cliques of 2..=8
/// nodes with weights uniform in `[0.5, 1]`. Returns the matrix and the
/// block of every node.
pub fn random_block_affinity(r: &mut ChaCha8Rng, blocks: usize, max_nodes: usize) -> (AffinityMatrix, Vec<usize>) {
    let mut sizes: Vec<usize> = (0..blocks).map(|_| 2).collect();
    let mut total = 2 * blocks;
    while total < max_nodes && r.gen_bool(0.8) {
        let b = r.gen_range(0..blocks);
        if sizes[b] < 8 {
            sizes[b] += 1;
            total += 1;
        }
    }
    let mut ids: Vec<usize> = (0..total).collect();
    for i in (1..total).rev() {
        ids.swap(i, r.gen_range(0..=i));
    }
    let mut a = AffinityMatrix::new(total);
    let mut block_of = vec![0; total];
    let mut cursor = 0;
    for (b, &s) in sizes.iter().enumerate() {
        let members = &ids[cursor..cursor + s];
        for (x, &i) in members.iter().enumerate() {
            block_of[i] = b;
            for &j in &members[x + 1..] {
                a.set(i, j, r.gen_range(0.5..=1.0));
            }
        }
        cursor += s;
    }
    (a, block_of)
}

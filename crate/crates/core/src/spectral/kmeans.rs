use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) const RESTARTS: usize = 10;
pub(crate) const MAX_ITER: usize = 300;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center (lowest index on ties) and the distance.
fn nearest(row: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = dist2(row, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn farthest_first(rows: &[Vec<f64>], k: usize, first: usize) -> Vec<Vec<f64>> {
    let mut centers = vec![rows[first].clone()];
    let mut min_d: Vec<f64> = rows.iter().map(|r| dist2(r, &rows[first])).collect();
    while centers.len() < k {
        let mut pick = 0;
        for (i, &d) in min_d.iter().enumerate() {
            if d > min_d[pick] {
                pick = i;
            }
        }
        centers.push(rows[pick].clone());
        for (i, r) in rows.iter().enumerate() {
            min_d[i] = min_d[i].min(dist2(r, &rows[pick]));
        }
    }
    centers
}

/// Lloyd iterations from the given centers; returns labels and inertia.
fn lloyd(rows: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> (Vec<usize>, f64) {
    let dim = rows.first().map_or(0, Vec::len);
    let k = centers.len();
    let mut labels: Vec<usize> = rows.iter().map(|r| nearest(r, &centers).0).collect();
    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (r, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(r).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            // an empty cluster keeps its previous center
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = rows.iter().map(|r| nearest(r, &centers).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = rows
        .iter()
        .zip(&labels)
        .map(|(r, &l)| dist2(r, &centers[l]))
        .sum();
    (labels, inertia)
}

/// k-means with farthest-first seeding; each restart draws a new random first
/// center from one seeded stream and the lowest-inertia run wins (earliest on
/// ties).
pub(crate) fn kmeans(rows: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Vec<usize> {
    let n = rows.len();
    assert!(k >= 1 && k <= n, "k={k} with {n} rows");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..restarts.max(1) {
        let first = rng.gen_range(0..n);
        let (labels, inertia) = lloyd(rows, farthest_first(rows, k, first), MAX_ITER);
        if best.as_ref().is_none_or(|b| inertia < b.1) {
            best = Some((labels, inertia));
        }
    }
    best.unwrap().0
}

/// Rows of `y` scaled to unit length; all-zero rows stay zero.
pub(crate) fn normalize_rows(mut rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for r in &mut rows {
        let n = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            r.iter_mut().for_each(|x| *x /= n);
        }
    }
    rows
}

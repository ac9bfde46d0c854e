use nalgebra::Point3;

/// Hilbert index of a point on the `2^bits` grid (Skilling's transpose
/// algorithm; the x bit is the most significant of each 3-bit digit).
pub fn hilbert_index(coords: [u32; 3], bits: u32) -> u64 {
    assert!((1..=21).contains(&bits), "bits must be in 1..=21");
    let mut x = coords;
    let m = 1u32 << (bits - 1);

    let mut q = m;
    while q > 1 {
        let p = q - 1;
        for i in 0..3 {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }
    for i in 1..3 {
        x[i] ^= x[i - 1];
    }
    let mut t = 0;
    let mut q = m;
    while q > 1 {
        if x[2] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for v in &mut x {
        *v ^= t;
    }

    let mut h = 0u64;
    for b in (0..bits).rev() {
        for v in &x {
            h = (h << 1) | ((v >> b) & 1) as u64;
        }
    }
    h
}

/// Per-axis min-max quantization onto `[0, 2^bits − 1]`; a flat axis maps
/// to 0.
pub fn quantize(points: &[Point3<f64>], bits: u32) -> Vec<[u32; 3]> {
    let top = ((1u64 << bits) - 1) as f64;
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    points
        .iter()
        .map(|p| {
            let mut c = [0u32; 3];
            for a in 0..3 {
                let span = hi[a] - lo[a];
                if span > 0.0 {
                    c[a] = ((p[a] - lo[a]) / span * top).round().clamp(0.0, top) as u32;
                }
            }
            c
        })
        .collect()
}

/// Ids `0..n` ordered along the Hilbert curve through the centroids; equal
/// indices keep ascending id order.
pub fn hilbert_serialize(centroids: &[Point3<f64>], bits: u32) -> Vec<usize> {
    assert!((1..=20).contains(&bits), "bits must be in 1..=20");
    let keys: Vec<u64> = quantize(centroids, bits)
        .into_iter()
        .map(|c| hilbert_index(c, bits))
        .collect();
    let mut order: Vec<usize> = (0..centroids.len()).collect();
    order.sort_by_key(|&i| (keys[i], i));
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_centroids_keep_id_order() {
        let c = vec![Point3::new(1.0, 2.0, 3.0); 5];
        assert_eq!(hilbert_serialize(&c, 10), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn curve_is_a_bijection_with_unit_steps() {
        let bits = 3;
        let side = 1u32 << bits;
        let mut by_index = vec![None; (side * side * side) as usize];
        for x in 0..side {
            for y in 0..side {
                for z in 0..side {
                    let h = hilbert_index([x, y, z], bits) as usize;
                    assert!(by_index[h].is_none());
                    by_index[h] = Some([x as i64, y as i64, z as i64]);
                }
            }
        }
        for w in by_index.windows(2) {
            let (a, b) = (w[0].unwrap(), w[1].unwrap());
            let step: i64 = (0..3).map(|k| (a[k] - b[k]).abs()).sum();
            assert_eq!(step, 1);
        }
    }

    // Frozen from an independent reference implementation (the Python
    // `hilbertcurve` package, n=3).
    #[test]
    fn matches_reference_first_cells() {
        let expected: [[u32; 3]; 16] = [
            [0, 0, 0], [0, 1, 0], [1, 1, 0], [1, 0, 0],
            [1, 0, 1], [1, 1, 1], [0, 1, 1], [0, 0, 1],
            [0, 0, 2], [0, 0, 3], [1, 0, 3], [1, 0, 2],
            [1, 1, 2], [1, 1, 3], [0, 1, 3], [0, 1, 2],
        ];
        for (h, p) in expected.iter().enumerate() {
            assert_eq!(hilbert_index(*p, 2), h as u64, "{p:?}");
        }
    }

    #[test]
    fn matches_reference_ten_bits() {
        let cases: [([u32; 3], u64); 8] = [
            ([0, 0, 0], 0),
            ([1023, 0, 0], 1073741823),
            ([0, 1023, 0], 498522989),
            ([0, 0, 1023], 153391689),
            ([512, 300, 77], 1032693923),
            ([1, 2, 3], 36),
            ([1023, 1023, 1023], 766958445),
            ([100, 900, 450], 440517950),
        ];
        for (p, h) in cases {
            assert_eq!(hilbert_index(p, 10), h, "{p:?}");
        }
    }

    #[test]
    fn two_centroids_follow_index() {
        let c = [Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 0.0, 0.0)];
        // quantized to [1023,0,0] (index 2^30−1) and [0,0,0] (index 0)
        assert_eq!(hilbert_serialize(&c, 10), vec![1, 0]);
        let rev = [c[1], c[0]];
        assert_eq!(hilbert_serialize(&rev, 10), vec![0, 1]);
    }
}

use super::{PcioError, Result};

/// Binary image stored column-major: pixel `(u, v)` (column, row) lives at
/// `u * height + v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_column_major(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize);
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn index(&self, u: u32, v: u32) -> usize {
        u as usize * self.height as usize + v as usize
    }

    #[inline]
    pub fn get(&self, u: u32, v: u32) -> bool {
        self.bits[self.index(u, v)]
    }

    #[inline]
    pub fn set(&mut self, u: u32, v: u32, value: bool) {
        let i = self.index(u, v);
        self.bits[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// 8-neighbourhood dilation by `radius` pixels.
    pub fn dilate(&self, radius: u32) -> Bitmap {
        let mut out = Bitmap::new(self.width, self.height);
        let r = radius as i64;
        for u in 0..self.width {
            for v in 0..self.height {
                if !self.get(u, v) {
                    continue;
                }
                for du in -r..=r {
                    for dv in -r..=r {
                        let (nu, nv) = (u as i64 + du, v as i64 + dv);
                        if nu >= 0 && nv >= 0 && nu < self.width as i64 && nv < self.height as i64
                        {
                            out.set(nu as u32, nv as u32, true);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Decodes uncompressed COCO-style counts: column-major, alternating runs
/// starting with zeros.
pub fn decode_rle(counts: &[u32], width: u32, height: u32) -> Result<Bitmap> {
    let expected = width as usize * height as usize;
    let actual: usize = counts.iter().map(|&c| c as usize).sum();
    if actual != expected {
        return Err(PcioError::CountMismatch { expected, actual });
    }
    let mut bits = Vec::with_capacity(expected);
    let mut value = false;
    for &c in counts {
        bits.extend(std::iter::repeat(value).take(c as usize));
        value = !value;
    }
    Ok(Bitmap::from_column_major(width, height, bits))
}

/// Canonical encoding: the first run counts zeros (possibly 0), no other run
/// is empty.
pub fn encode_rle(bitmap: &Bitmap) -> Vec<u32> {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for &b in &bitmap.bits {
        if b != current {
            counts.push(run);
            run = 0;
            current = b;
        }
        run += 1;
    }
    counts.push(run);
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decode_hand_example() {
        let m = decode_rle(&[1, 2, 1], 2, 2).unwrap();
        assert_eq!(m.bits(), &[false, true, true, false]);
        // (row 1, col 0) and (row 0, col 1)
        assert!(m.get(0, 1));
        assert!(m.get(1, 0));
        assert!(!m.get(0, 0));
        assert!(!m.get(1, 1));
    }

    #[test]
    fn all_zero_and_all_one() {
        assert_eq!(decode_rle(&[4], 2, 2).unwrap().area(), 0);
        assert_eq!(decode_rle(&[0, 4], 2, 2).unwrap().area(), 4);
    }

    #[test]
    fn count_mismatch() {
        assert!(matches!(
            decode_rle(&[1, 2], 2, 2),
            Err(PcioError::CountMismatch {
                expected: 4,
                actual: 3
            })
        ));
    }

    #[test]
    fn dilate_single_pixel() {
        let mut m = Bitmap::new(5, 5);
        m.set(0, 0, true);
        let d = m.dilate(1);
        assert_eq!(d.area(), 4);
        assert!(d.get(1, 1));
    }

    fn canonical_counts() -> impl Strategy<Value = (Vec<u32>, u32, u32)> {
        (prop::collection::vec(1u32..6, 0..12), 0u32..4).prop_map(|(runs, first)| {
            let mut counts = vec![first];
            counts.extend(runs);
            let total: u32 = counts.iter().sum();
            if total == 0 {
                return (vec![0, 1], 1, 1);
            }
            (counts, total, 1)
        })
    }

    proptest! {
        #[test]
        fn rle_round_trip((counts, w, h) in canonical_counts()) {
            let m = decode_rle(&counts, w, h).unwrap();
            prop_assert_eq!(encode_rle(&m), counts);
        }
    }
}

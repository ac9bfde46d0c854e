use super::Superpoint;
use crate::pcio::PointCloud;

/// Farthest point sampling seeded at the member nearest the centroid.
///
/// Ties are broken by smallest point index, so the result does not depend on
/// the storage order of `sp.point_indices`.
pub fn sample_fps(sp: &Superpoint, cloud: &PointCloud, k_fps: usize) -> Vec<u32> {
    let pos = cloud.positions();
    let mut members = sp.point_indices.clone();
    members.sort_unstable();
    let take = k_fps.min(members.len());
    if take == 0 {
        return Vec::new();
    }

    let mut first = 0;
    let mut best = f64::INFINITY;
    for (slot, &i) in members.iter().enumerate() {
        let d = (pos[i as usize] - sp.centroid).norm_squared();
        if d < best {
            best = d;
            first = slot;
        }
    }

    let mut chosen = vec![members[first]];
    let mut min_d: Vec<f64> = members
        .iter()
        .map(|&i| (pos[i as usize] - pos[members[first] as usize]).norm_squared())
        .collect();
    while chosen.len() < take {
        let mut arg = 0;
        let mut far = -1.0;
        for (slot, &d) in min_d.iter().enumerate() {
            if d > far {
                far = d;
                arg = slot;
            }
        }
        let pick = members[arg];
        chosen.push(pick);
        let p = pos[pick as usize];
        for (slot, &i) in members.iter().enumerate() {
            let d = (pos[i as usize] - p).norm_squared();
            if d < min_d[slot] {
                min_d[slot] = d;
            }
        }
    }
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn square() -> PointCloud {
        PointCloud::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
            ],
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn two_points_both_returned() {
        let cloud = square();
        let sp = Superpoint::new(0, vec![0, 3], &cloud);
        let mut s = sample_fps(&sp, &cloud, 64);
        s.sort();
        assert_eq!(s, vec![0, 3]);
    }

    #[test]
    fn square_picks_opposite_corners() {
        let cloud = square();
        let sp = Superpoint::new(0, vec![0, 1, 2, 3], &cloud);
        let s = sample_fps(&sp, &cloud, 2);
        // every corner is equidistant from the centroid, so the seed is the
        // smallest index and the second sample its diagonal partner
        assert_eq!(s, vec![0, 3]);
        let d = (cloud.positions()[s[0] as usize] - cloud.positions()[s[1] as usize]).norm();
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_sample_is_nearest_centroid() {
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.1, 0.0, 0.0),
        ];
        let cloud = PointCloud::new(pts, None, None).unwrap();
        let sp = Superpoint::new(0, vec![0, 1, 2], &cloud);
        assert_eq!(sample_fps(&sp, &cloud, 1), vec![1]);
    }

    #[test]
    fn order_invariant() {
        let pts: Vec<_> = (0..50)
            .map(|i| Point3::new((i * 7 % 13) as f64, (i * 3 % 11) as f64, 0.0))
            .collect();
        let cloud = PointCloud::new(pts, None, None).unwrap();
        let fwd = Superpoint::new(0, (0..50).collect(), &cloud);
        let mut rev = fwd.clone();
        rev.point_indices.reverse();
        assert_eq!(sample_fps(&fwd, &cloud, 10), sample_fps(&rev, &cloud, 10));
    }
}

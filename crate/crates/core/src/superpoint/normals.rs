use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use super::{Result, SuperpointError};
use crate::neighbors::knn_indices;
use crate::pcio::PointCloud;

const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct NormalEstimate {
    pub normals: Vec<Vector3<f64>>,
    /// Points whose neighbours were all coincident; they got (0,0,1).
    pub degenerate: Vec<usize>,
}

/// Flips `n` to the +z hemisphere; normals lying in the xy-plane point to
/// +x, then +y.
fn orient(n: Vector3<f64>) -> Vector3<f64> {
    let key = if n.z.abs() > TIE_EPS {
        n.z
    } else if n.x.abs() > TIE_EPS {
        n.x
    } else {
        n.y
    };
    if key < 0.0 {
        -n
    } else {
        n
    }
}

/// PCA normal per point: eigenvector of the smallest eigenvalue of the
/// covariance of its `k` nearest neighbours (itself included).
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<NormalEstimate> {
    if k < 3 {
        return Err(SuperpointError::InvalidParameter(format!(
            "normal estimation needs k >= 3, got {k}"
        )));
    }
    if cloud.len() < k {
        return Err(SuperpointError::InvalidParameter(format!(
            "normal estimation needs at least k={k} points, got {}",
            cloud.len()
        )));
    }
    let pos = cloud.positions();
    let nn = knn_indices(pos, k, true);
    let results: Vec<Option<Vector3<f64>>> = nn
        .par_iter()
        .map(|ids| {
            let mean = ids
                .iter()
                .fold(Vector3::zeros(), |acc, &j| acc + pos[j as usize].coords)
                / ids.len() as f64;
            let mut cov = Matrix3::zeros();
            for &j in ids {
                let d = pos[j as usize].coords - mean;
                cov += d * d.transpose();
            }
            // Relative test so the threshold is scale-free.
            let scale = mean.norm_squared().max(1.0);
            if cov.trace() <= 1e-24 * scale {
                return None;
            }
            let eig = SymmetricEigen::new(cov);
            let (imin, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            let n = eig.eigenvectors.column(imin).normalize();
            Some(orient(n))
        })
        .collect();

    let mut degenerate = Vec::new();
    let normals = results
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            n.unwrap_or_else(|| {
                degenerate.push(i);
                Vector3::z()
            })
        })
        .collect();
    Ok(NormalEstimate {
        normals,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn grid(f: impl Fn(f64, f64) -> Point3<f64>) -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                pts.push(f(i as f64 * 0.1, j as f64 * 0.07));
            }
        }
        PointCloud::new(pts, None, None).unwrap()
    }

    #[test]
    fn plane_z0_gives_up_normals() {
        let cloud = grid(|a, b| Point3::new(a, b, 0.0));
        for k in [5, 8, 16] {
            let est = estimate_normals(&cloud, k).unwrap();
            assert!(est.degenerate.is_empty());
            for n in &est.normals {
                assert!((n - Vector3::z()).norm() < 1e-9, "{n:?}");
            }
        }
    }

    #[test]
    fn plane_x0_consistent_sign() {
        let cloud = grid(|a, b| Point3::new(0.0, a, b));
        let est = estimate_normals(&cloud, 10).unwrap();
        let first = est.normals[0];
        assert!((first.x.abs() - 1.0).abs() < 1e-9);
        for n in &est.normals {
            assert!((n - first).norm() < 1e-9);
        }
    }

    #[test]
    fn coincident_points_fall_back() {
        let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0); 5], None, None).unwrap();
        let est = estimate_normals(&cloud, 3).unwrap();
        assert_eq!(est.degenerate, vec![0, 1, 2, 3, 4]);
        assert!(est.normals.iter().all(|n| *n == Vector3::z()));
    }

    #[test]
    fn k_below_three_is_rejected() {
        let cloud = grid(|a, b| Point3::new(a, b, 0.0));
        assert!(estimate_normals(&cloud, 2).is_err());
    }
}

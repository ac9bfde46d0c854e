//! Projection of superpoints into posed frames and per-mask overlap scores.
//!
//! A point is visible in a frame when it lies in front of the camera, lands on
//! a pixel inside the image and (if the frame has a depth map with a reading at
//! that pixel) agrees with the measured depth within `tau_depth`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pcio::{self, Frame, Mask2D, PcioError, PointCloud};
use crate::superpoint::Superpoint;

/// How the superpoint-to-mask overlap score is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMode {
    /// Fraction of the superpoint's visible points that land in the mask.
    #[default]
    Containment,
    /// Pixel IoU between the superpoint's projected footprint and the mask.
    StrictIou,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectParams {
    pub tau_depth: f64,
    pub mode: OverlapMode,
}

impl Default for ProjectParams {
    fn default() -> Self {
        Self {
            tau_depth: 0.05,
            mode: OverlapMode::Containment,
        }
    }
}

/// Pixel `(u, v)` of each point, `None` when the point is not visible.
pub fn project_points(
    points: &[Point3<f64>],
    frame: &Frame,
    tau_depth: f64,
) -> Vec<Option<(u32, u32)>> {
    let r = frame.rotation();
    let t = frame.translation();
    let k = &frame.intrinsics;
    let (w, h) = (frame.width as f64, frame.height as f64);
    points
        .iter()
        .map(|p| {
            let c = r * p.coords + t;
            if c.z <= 0.0 {
                return None;
            }
            let u = (k.fx * c.x / c.z + k.cx).round();
            let v = (k.fy * c.y / c.z + k.cy).round();
            if !(u >= 0.0 && u < w && v >= 0.0 && v < h) {
                return None;
            }
            let (u, v) = (u as u32, v as u32);
            if let Some(depth) = &frame.depth {
                if let Some(d) = depth.meters(u, v) {
                    if (c.z - d).abs() > tau_depth {
                        return None;
                    }
                }
            }
            Some((u, v))
        })
        .collect()
}

fn score_from_pixels(pixels: &[(u32, u32)], mask: &Mask2D, mode: OverlapMode) -> f64 {
    if pixels.is_empty() {
        return 0.0;
    }
    match mode {
        OverlapMode::Containment => {
            let inside = pixels
                .iter()
                .filter(|&&(u, v)| mask.bitmap.get(u, v))
                .count();
            inside as f64 / pixels.len() as f64
        }
        OverlapMode::StrictIou => {
            let mut footprint: Vec<usize> = pixels
                .iter()
                .map(|&(u, v)| mask.bitmap.index(u, v))
                .collect();
            footprint.sort_unstable();
            footprint.dedup();
            let bits = mask.bitmap.bits();
            let inter = footprint.iter().filter(|&&i| bits[i]).count();
            let union = footprint.len() + mask.bitmap.area() - inter;
            inter as f64 / union as f64
        }
    }
}

/// Overlap score of one superpoint against one mask of `frame`.
pub fn overlap_score(
    sp: &Superpoint,
    mask: &Mask2D,
    frame: &Frame,
    cloud: &PointCloud,
    params: &ProjectParams,
) -> f64 {
    let pos = cloud.positions();
    let pts: Vec<Point3<f64>> = sp.point_indices.iter().map(|&i| pos[i as usize]).collect();
    let pixels: Vec<(u32, u32)> = project_points(&pts, frame, params.tau_depth)
        .into_iter()
        .flatten()
        .collect();
    score_from_pixels(&pixels, mask, params.mode)
}

/// Where a global mask id comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskRef {
    pub frame: usize,
    pub mask: usize,
    pub label: String,
    pub detector_score: f64,
}

/// Sparse positive overlap scores, keyed by superpoint and global mask id.
///
/// Global mask ids enumerate masks in frame order, then in order within the
/// frame.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTable {
    pub num_superpoints: usize,
    pub masks: Vec<MaskRef>,
    /// Per superpoint: `(mask id, score)` ascending by mask id.
    rows: Vec<Vec<(usize, f64)>>,
}

impl OverlapTable {
    pub fn from_entries(
        num_superpoints: usize,
        masks: Vec<MaskRef>,
        entries: impl IntoIterator<Item = ((usize, usize), f64)>,
    ) -> Self {
        let mut rows = vec![Vec::new(); num_superpoints];
        let sorted: BTreeMap<(usize, usize), f64> = entries.into_iter().collect();
        for ((sp, m), s) in sorted {
            assert!(m < masks.len(), "mask id {m} out of range");
            assert!((0.0..=1.0).contains(&s), "overlap {s} outside [0,1]");
            if s > 0.0 {
                rows[sp].push((m, s));
            }
        }
        Self {
            num_superpoints,
            masks,
            rows,
        }
    }

    pub fn row(&self, sp: usize) -> &[(usize, f64)] {
        &self.rows[sp]
    }

    pub fn get(&self, sp: usize, mask: usize) -> f64 {
        let row = &self.rows[sp];
        row.binary_search_by_key(&mask, |e| e.0)
            .map(|k| row[k].1)
            .unwrap_or(0.0)
    }

    /// All entries as `(sp, mask, score)`, ordered by superpoint then mask.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(sp, row)| row.iter().map(move |&(m, s)| (sp, m, s)))
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn build_overlap_table(
    superpoints: &[Superpoint],
    frames: &[Frame],
    cloud: &PointCloud,
    params: &ProjectParams,
) -> OverlapTable {
    let mut masks = Vec::new();
    let mut offsets = Vec::with_capacity(frames.len());
    for (fi, frame) in frames.iter().enumerate() {
        offsets.push(masks.len());
        for (mi, m) in frame.masks.iter().enumerate() {
            masks.push(MaskRef {
                frame: fi,
                mask: mi,
                label: m.label.clone(),
                detector_score: m.score,
            });
        }
    }

    let per_frame: Vec<Vec<((usize, usize), f64)>> = frames
        .par_iter()
        .enumerate()
        .map(|(fi, frame)| {
            if frame.masks.is_empty() {
                return Vec::new();
            }
            let proj = project_points(cloud.positions(), frame, params.tau_depth);
            let mut out = Vec::new();
            let mut pixels = Vec::new();
            for sp in superpoints {
                pixels.clear();
                pixels.extend(sp.point_indices.iter().filter_map(|&i| proj[i as usize]));
                if pixels.is_empty() {
                    continue;
                }
                for (mi, mask) in frame.masks.iter().enumerate() {
                    let s = score_from_pixels(&pixels, mask, params.mode);
                    if s > 0.0 {
                        out.push(((sp.id, offsets[fi] + mi), s));
                    }
                }
            }
            out
        })
        .collect();

    OverlapTable::from_entries(superpoints.len(), masks, per_frame.into_iter().flatten())
}

#[derive(Serialize)]
struct OverlapRecord {
    sp: usize,
    mask: usize,
    score: f64,
}

/// One JSON object per line: `{"sp", "mask", "score"}`.
pub fn write_overlap_jsonl(path: &Path, table: &OverlapTable) -> pcio::Result<()> {
    let io = |source| PcioError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = std::io::BufWriter::new(file);
    for (sp, mask, score) in table.entries() {
        let line = serde_json::to_string(&OverlapRecord { sp, mask, score }).map_err(|source| {
            PcioError::Json {
                path: path.to_path_buf(),
                source,
            }
        })?;
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcio::{Bitmap, DepthMap, Intrinsics};
    use nalgebra::Matrix4;

    fn camera(w: u32, h: u32) -> Frame {
        Frame {
            image_id: "f".into(),
            width: w,
            height: h,
            intrinsics: Intrinsics {
                fx: 100.0,
                fy: 100.0,
                cx: 50.0,
                cy: 50.0,
            },
            world_to_camera: Matrix4::identity(),
            masks: Vec::new(),
            depth: None,
        }
    }

    fn full_mask(w: u32, h: u32) -> Mask2D {
        Mask2D {
            label: "thing".into(),
            score: 1.0,
            bitmap: Bitmap::from_column_major(w, h, vec![true; (w * h) as usize]),
        }
    }

    #[test]
    fn principal_axis_hits_principal_point() {
        let f = camera(100, 100);
        let px = project_points(
            &[
                Point3::new(0.0, 0.0, 2.0),
                Point3::new(0.5, 0.0, 2.0),
                Point3::new(0.0, 0.0, -1.0),
            ],
            &f,
            0.05,
        );
        assert_eq!(px, vec![Some((50, 50)), Some((75, 50)), None]);
    }

    #[test]
    fn right_border_is_outside() {
        // u = 100·0.5/1 + 50 = 100 == width
        let f = camera(100, 100);
        assert_eq!(project_points(&[Point3::new(0.5, 0.0, 1.0)], &f, 0.05), vec![None]);
    }

    #[test]
    fn depth_filters_occluded_points() {
        let mut f = camera(100, 100);
        let mut mm = vec![0u16; 100 * 100];
        mm[50 * 100 + 50] = 1000;
        f.depth = Some(DepthMap {
            width: 100,
            height: 100,
            millimeters: mm,
        });
        let px = project_points(
            &[
                Point3::new(0.0, 0.0, 1.03),
                Point3::new(0.0, 0.0, 2.0),
                Point3::new(0.2, 0.0, 2.0),
            ],
            &f,
            0.05,
        );
        // the third point lands on a pixel without a depth reading
        assert_eq!(px, vec![Some((50, 50)), None, Some((60, 50))]);
    }

    fn line_superpoint(n: usize, cloud_x0: f64) -> (PointCloud, Superpoint) {
        let pts: Vec<_> = (0..n)
            .map(|i| Point3::new(cloud_x0 + i as f64 * 0.02, 0.0, 2.0))
            .collect();
        let cloud = PointCloud::new(pts, None, None).unwrap();
        let sp = Superpoint::new(0, (0..n as u32).collect(), &cloud);
        (cloud, sp)
    }

    #[test]
    fn containment_counts() {
        let f = camera(100, 100);
        // x = 0, 0.02, ..., 0.18 → u = 50, 51, ..., 59
        let (cloud, sp) = line_superpoint(10, 0.0);
        let params = ProjectParams::default();
        assert_eq!(overlap_score(&sp, &full_mask(100, 100), &f, &cloud, &params), 1.0);

        let mut m = full_mask(100, 100);
        m.bitmap.set(59, 50, false);
        assert!((overlap_score(&sp, &m, &f, &cloud, &params) - 0.9).abs() < 1e-12);

        let (behind, sp_b) = line_superpoint(10, 0.0);
        let mut flipped = f.clone();
        flipped.world_to_camera[(2, 2)] = -1.0;
        flipped.world_to_camera[(1, 1)] = -1.0;
        assert_eq!(overlap_score(&sp_b, &m, &flipped, &behind, &params), 0.0);
    }

    #[test]
    fn strict_iou_uses_pixel_footprint() {
        let f = camera(100, 100);
        let (cloud, sp) = line_superpoint(10, 0.0);
        let mut m = Mask2D {
            label: "x".into(),
            score: 1.0,
            bitmap: Bitmap::new(100, 100),
        };
        for u in 50..70 {
            m.bitmap.set(u, 50, true);
        }
        let params = ProjectParams {
            mode: OverlapMode::StrictIou,
            ..Default::default()
        };
        // footprint 10 px, mask 20 px, intersection 10
        assert!((overlap_score(&sp, &m, &f, &cloud, &params) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn table_basics() {
        let mut f = camera(100, 100);
        f.masks.push(full_mask(100, 100));
        let (cloud, sp) = line_superpoint(10, 0.0);
        let params = ProjectParams::default();
        let t = build_overlap_table(std::slice::from_ref(&sp), std::slice::from_ref(&f), &cloud, &params);
        assert_eq!(t.entries().collect::<Vec<_>>(), vec![(0, 0, 1.0)]);

        let t2 = build_overlap_table(&[sp.clone()], &[f.clone(), f.clone()], &cloud, &params);
        assert_eq!(t2.masks.len(), 2);
        assert_eq!(t2.row(0), &[(0, 1.0), (1, 1.0)]);

        let empty = build_overlap_table(&[sp], &[], &cloud, &params);
        assert!(empty.is_empty());
    }
}

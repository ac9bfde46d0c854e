use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use super::depth::{read_depth_png, DepthMap};
use super::rle::{decode_rle, Bitmap};
use super::{read_json, write_json, PcioError, Result};

const ROTATION_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

/// A grounded 2D instance mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask2D {
    pub label: String,
    pub score: f64,
    pub bitmap: Bitmap,
}

/// A posed image: pinhole intrinsics, world-to-camera extrinsics and the
/// masks grounded on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub intrinsics: Intrinsics,
    pub world_to_camera: Matrix4<f64>,
    pub masks: Vec<Mask2D>,
    pub depth: Option<DepthMap>,
}

impl Frame {
    pub fn rotation(&self) -> Matrix3<f64> {
        self.world_to_camera.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.world_to_camera.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Checks intrinsics, image size and rigidity of the extrinsics.
    pub fn validate(&self) -> Result<()> {
        let id = || self.image_id.clone();
        let k = &self.intrinsics;
        if !(k.fx > 0.0 && k.fy > 0.0) || !k.cx.is_finite() || !k.cy.is_finite() {
            return Err(PcioError::InvalidFrame {
                image_id: id(),
                reason: format!("focal lengths must be positive (fx={}, fy={})", k.fx, k.fy),
            });
        }
        if self.width == 0 || self.height == 0 {
            return Err(PcioError::InvalidFrame {
                image_id: id(),
                reason: "zero image size".into(),
            });
        }
        check_rigid(&self.world_to_camera).map_err(|reason| PcioError::BadExtrinsics {
            image_id: id(),
            reason,
        })
    }
}

fn check_rigid(m: &Matrix4<f64>) -> std::result::Result<(), String> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err("non-finite entry".into());
    }
    let bottom = [m[(3, 0)], m[(3, 1)], m[(3, 2)], m[(3, 3)]];
    if bottom != [0.0, 0.0, 0.0, 1.0] {
        return Err(format!("bottom row is {bottom:?}, expected (0,0,0,1)"));
    }
    let r = m.fixed_view::<3, 3>(0, 0);
    let err = (r.transpose() * r - Matrix3::identity()).amax();
    if err > ROTATION_TOLERANCE {
        return Err(format!("rotation block is not orthonormal (max error {err:.3e})"));
    }
    if r.determinant() <= 0.0 {
        return Err("rotation block is a reflection".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub frames: Vec<ManifestFrame>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub intrinsics: Intrinsics,
    /// Row-major 4x4 world-to-camera transform.
    pub extrinsics_w2c: Vec<f64>,
    pub masks_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasksFile {
    pub masks: Vec<MaskEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskEntry {
    pub label: String,
    pub score: f64,
    pub rle: Vec<u32>,
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    base.join(rel)
}

/// Parses the manifest and decodes every referenced masks file (and depth
/// map, when listed). Frames keep manifest order.
pub fn load_frames(manifest_path: &Path) -> Result<Vec<Frame>> {
    let manifest: ManifestFile = read_json(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    manifest
        .frames
        .iter()
        .map(|mf| load_frame(base, mf))
        .collect()
}

pub(crate) fn load_frame(base: &Path, mf: &ManifestFrame) -> Result<Frame> {
    if mf.extrinsics_w2c.len() != 16 {
        return Err(PcioError::BadExtrinsics {
            image_id: mf.image_id.clone(),
            reason: format!("expected 16 values, got {}", mf.extrinsics_w2c.len()),
        });
    }
    let world_to_camera = Matrix4::from_row_slice(&mf.extrinsics_w2c);

    let masks_path = resolve(base, &mf.masks_file);
    if !masks_path.is_file() {
        return Err(PcioError::MissingMaskFile(masks_path));
    }
    let masks_file: MasksFile = read_json(&masks_path)?;
    let masks = masks_file
        .masks
        .iter()
        .map(|m| {
            if m.label.trim().is_empty() {
                return Err(PcioError::InvalidMask(format!(
                    "empty label in {}",
                    masks_path.display()
                )));
            }
            if !(0.0..=1.0).contains(&m.score) {
                return Err(PcioError::InvalidMask(format!(
                    "score {} outside [0,1] for {:?}",
                    m.score, m.label
                )));
            }
            Ok(Mask2D {
                label: m.label.clone(),
                score: m.score,
                bitmap: decode_rle(&m.rle, mf.width, mf.height)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let depth = match &mf.depth_file {
        Some(rel) => {
            let path = resolve(base, rel);
            let d = read_depth_png(&path)?;
            if d.width != mf.width || d.height != mf.height {
                return Err(PcioError::BadDepth {
                    path,
                    reason: format!(
                        "size {}x{} differs from frame {}x{}",
                        d.width, d.height, mf.width, mf.height
                    ),
                });
            }
            Some(d)
        }
        None => None,
    };

    let frame = Frame {
        image_id: mf.image_id.clone(),
        width: mf.width,
        height: mf.height,
        intrinsics: mf.intrinsics,
        world_to_camera,
        masks,
        depth,
    };
    frame.validate()?;
    Ok(frame)
}

/// Writes a manifest plus one masks file per frame under `masks_dir`
/// (relative to the manifest directory).
pub fn write_frames(manifest_path: &Path, frames: &[ManifestFrame], masks: &[MasksFile]) -> Result<()> {
    assert_eq!(frames.len(), masks.len());
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    for (mf, m) in frames.iter().zip(masks) {
        let p = resolve(base, &mf.masks_file);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(super::io_err(dir))?;
        }
        write_json(&p, m)?;
    }
    write_json(
        manifest_path,
        &ManifestFile {
            frames: frames.to_vec(),
        },
    )
}

//! Synthetic scenes with exact ground truth: surface-sampled primitives,
//! pinhole cameras, masks rendered from point footprints, and an embedding
//! table with controllable synonym cosines.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use nalgebra::{Matrix3, Matrix4, Point3, Rotation3, Vector3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evalkit::GroundTruthInstance;
use crate::output::write_ground_truth;
use crate::pcio::{
    self, encode_rle, layout, write_depth_png, write_embedding_table, write_frames,
    write_point_cloud, Bitmap, Dataset, DepthMap, EmbeddingTable, Frame, Intrinsics, ManifestFrame, Mask2D,
    MaskEntry, MasksFile, PcioError, PlyEncoding, PointCloud,
};
use crate::project::project_points;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),

    #[error("infeasible cosines: {0}")]
    InfeasibleCosines(String),

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] PcioError),
}

impl SynthError {
    pub fn code(&self) -> &'static str {
        match self {
            SynthError::InvalidSpec(_) => "InvalidSpec",
            SynthError::InfeasibleCosines(_) => "InfeasibleCosines",
            SynthError::UnknownPreset(_) => "UnknownPreset",
            SynthError::Io(e) => e.code(),
        }
    }
}

pub type Result<T> = std::result::Result<T, SynthError>;

/// Primitive shapes, centered on the object origin before the pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// Closed box with edge lengths along local x, y, z.
    Box { size: [f64; 3] },
    /// Rectangle in the local xy plane.
    Plane { size: [f64; 2] },
    /// Closed cylinder along local z.
    Cylinder { radius: f64, height: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    #[serde(flatten)]
    pub shape: Shape,
    pub position: [f64; 3],
    /// Euler angles in degrees (roll about x, pitch about y, yaw about z).
    #[serde(default)]
    pub rotation_deg: [f64; 3],
    pub label: String,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynonymSpec {
    pub a: String,
    pub b: String,
    pub cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub objects: Vec<ObjectSpec>,
    pub cameras: Vec<CameraSpec>,
    pub points_per_object: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Fraction of masks whose label is swapped for another scene label.
    #[serde(default)]
    pub label_noise: f64,
    #[serde(default)]
    pub synonyms: Vec<SynonymSpec>,
    #[serde(default)]
    pub depth_maps: bool,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.objects.is_empty() {
            return bad("at least one object is required".into());
        }
        if self.cameras.is_empty() {
            return bad("at least one camera is required".into());
        }
        if self.points_per_object == 0 {
            return bad("points_per_object must be positive".into());
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return bad(format!("label_noise must be in [0, 1], got {}", self.label_noise));
        }
        for (k, o) in self.objects.iter().enumerate() {
            if o.label.trim().is_empty() {
                return bad(format!("object {k} has an empty label"));
            }
            let dims: Vec<f64> = match &o.shape {
                Shape::Box { size } => size.to_vec(),
                Shape::Plane { size } => size.to_vec(),
                Shape::Cylinder { radius, height } => vec![*radius, *height],
            };
            if dims.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
                return bad(format!("object {k} has a non-positive dimension"));
            }
        }
        for (k, c) in self.cameras.iter().enumerate() {
            if c.width == 0 || c.height == 0 || !(c.fx > 0.0) || !(c.fy > 0.0) {
                return bad(format!("camera {k} has invalid intrinsics"));
            }
            let f = Vector3::from(c.look_at) - Vector3::from(c.position);
            if !(f.norm() > 0.0) {
                return bad(format!("camera {k} looks at its own position"));
            }
        }
        Ok(())
    }

    /// Distinct object labels, sorted.
    pub fn labels(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.objects.iter().map(|o| o.label.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }
}

/// World-to-camera transform for a camera at `eye` looking at
/// `target` with world +z up (x right, y down, z forward in the image).
pub fn look_at(eye: Point3<f64>, target: Point3<f64>) -> Matrix4<f64> {
    let f = (target - eye).normalize();
    let mut x = f.cross(&Vector3::z());
    if x.norm() < 1e-9 {
        x = f.cross(&Vector3::y());
    }
    let x = x.normalize();
    let y = f.cross(&x);
    let r = Matrix3::from_rows(&[x.transpose(), y.transpose(), f.transpose()]);
    let t = -(r * eye.coords);
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&t);
    m
}

/// `n` cameras evenly spaced on a horizontal circle, all aimed at `target`.
pub fn ring_cameras(
    n: usize,
    radius: f64,
    height: f64,
    target: [f64; 3],
    start_deg: f64,
    image: (u32, u32),
    focal: f64,
) -> Vec<CameraSpec> {
    (0..n)
        .map(|k| {
            let a = (start_deg + 360.0 * k as f64 / n as f64).to_radians();
            CameraSpec {
                position: [
                    target[0] + radius * a.cos(),
                    target[1] + radius * a.sin(),
                    height,
                ],
                look_at: target,
                width: image.0,
                height: image.1,
                fx: focal,
                fy: focal,
                cx: image.0 as f64 / 2.0,
                cy: image.1 as f64 / 2.0,
            }
        })
        .collect()
}

fn sample_surface(shape: &Shape, rng: &mut ChaCha8Rng) -> (Vector3<f64>, Vector3<f64>) {
    let mut u = || rng.gen::<f64>();
    match *shape {
        Shape::Box { size: [sx, sy, sz] } => {
            let areas = [sy * sz, sx * sz, sx * sy];
            let total = 2.0 * areas.iter().sum::<f64>();
            let mut pick = u() * total;
            let mut face = 0;
            while face < 5 && pick >= areas[face / 2] {
                pick -= areas[face / 2];
                face += 1;
            }
            let axis = face / 2;
            let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
            let half = [sx / 2.0, sy / 2.0, sz / 2.0];
            let mut p = Vector3::zeros();
            for a in 0..3 {
                p[a] = if a == axis {
                    sign * half[a]
                } else {
                    (u() - 0.5) * 2.0 * half[a]
                };
            }
            let mut n = Vector3::zeros();
            n[axis] = sign;
            (p, n)
        }
        Shape::Plane { size: [sx, sy] } => {
            let p = Vector3::new((u() - 0.5) * sx, (u() - 0.5) * sy, 0.0);
            (p, Vector3::z())
        }
        Shape::Cylinder { radius, height } => {
            let side = 2.0 * PI * radius * height;
            let cap = PI * radius * radius;
            let pick = u() * (side + 2.0 * cap);
            if pick < side {
                let theta = u() * 2.0 * PI;
                let n = Vector3::new(theta.cos(), theta.sin(), 0.0);
                let p = Vector3::new(radius * n.x, radius * n.y, (u() - 0.5) * height);
                (p, n)
            } else {
                let top = pick < side + cap;
                let r = radius * u().sqrt();
                let theta = u() * 2.0 * PI;
                let z = if top { height / 2.0 } else { -height / 2.0 };
                let p = Vector3::new(r * theta.cos(), r * theta.sin(), z);
                (p, if top { Vector3::z() } else { -Vector3::z() })
            }
        }
    }
}

fn to_f32_precision(v: Vector3<f64>) -> Vector3<f64> {
    v.map(|c| c as f32 as f64)
}

/// Non-fatal generation problems.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "code")]
pub enum SynthWarning {
    /// The object projects into no camera, so it has no masks.
    EmptyFootprint { object: usize, label: String },
}

impl fmt::Display for SynthWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthWarning::EmptyFootprint { object, label } => {
                write!(f, "EmptyFootprint: object {object} ({label}) is invisible in every camera")
            }
        }
    }
}

/// A generated scene held in memory.
#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub cloud: PointCloud,
    pub frames: Vec<Frame>,
    pub table: EmbeddingTable,
    pub ground_truth: Vec<GroundTruthInstance>,
    pub warnings: Vec<SynthWarning>,
}

impl GeneratedScene {
    /// The scene as the pipeline would load it from disk.
    pub fn dataset(&self) -> Dataset {
        Dataset {
            root: Default::default(),
            cloud: self.cloud.clone(),
            frames: self.frames.clone(),
            table: Some(self.table.clone()),
            features: None,
        }
    }
}

/// Marks the 3x3 neighbourhood of every projected pixel.
fn footprint(pixels: impl Iterator<Item = (u32, u32)>, width: u32, height: u32) -> Bitmap {
    let mut bm = Bitmap::new(width, height);
    for (u, v) in pixels {
        for nu in u.saturating_sub(1)..=(u + 1).min(width - 1) {
            for nv in v.saturating_sub(1)..=(v + 1).min(height - 1) {
                bm.set(nu, nv, true);
            }
        }
    }
    bm
}

fn depth_buffer(points: &[Point3<f64>], frame: &Frame) -> DepthMap {
    let (w, h) = (frame.width, frame.height);
    let mut mm = vec![0u16; w as usize * h as usize];
    let r = frame.rotation();
    let t = frame.translation();
    for (p, px) in points.iter().zip(project_points(points, frame, 0.0)) {
        let Some((u, v)) = px else { continue };
        let z = (r * p.coords + t).z;
        let d = (z * 1000.0).round().clamp(1.0, u16::MAX as f64) as u16;
        let slot = &mut mm[v as usize * w as usize + u as usize];
        if *slot == 0 || d < *slot {
            *slot = d;
        }
    }
    DepthMap {
        width: w,
        height: h,
        millimeters: mm,
    }
}

/// Samples every object, renders its masks in every camera and builds the
/// embedding table. Deterministic in `spec.seed`: object `k` draws from RNG
/// stream `k`, label noise from the stream after the last object.
pub fn generate_scene(spec: &SceneSpec) -> Result<GeneratedScene> {
    spec.validate()?;
    let n_obj = spec.objects.len();
    let noise = (spec.noise_sigma > 0.0).then(|| Normal::new(0.0, spec.noise_sigma).unwrap());

    let mut positions = Vec::with_capacity(n_obj * spec.points_per_object);
    let mut normals = Vec::with_capacity(positions.capacity());
    let mut colors = Vec::with_capacity(positions.capacity());
    let mut ground_truth = Vec::with_capacity(n_obj);
    for (k, obj) in spec.objects.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(k as u64);
        let [rx, ry, rz] = obj.rotation_deg.map(f64::to_radians);
        let rot = Rotation3::from_euler_angles(rx, ry, rz);
        let origin = Vector3::from(obj.position);
        let start = positions.len() as u32;
        for _ in 0..spec.points_per_object {
            let (p, n) = sample_surface(&obj.shape, &mut rng);
            let mut w = rot * p + origin;
            if let Some(d) = &noise {
                for c in w.iter_mut() {
                    *c += d.sample(&mut rng);
                }
            }
            positions.push(Point3::from(to_f32_precision(w)));
            let n = rot * n;
            normals.push(to_f32_precision(n));
            colors.push(obj.color);
        }
        ground_truth.push(GroundTruthInstance {
            id: k,
            label: obj.label.clone(),
            points: (start..positions.len() as u32).collect(),
        });
    }
    let cloud = PointCloud::new(positions, Some(colors), Some(normals))?;

    let mut frames = Vec::with_capacity(spec.cameras.len());
    let mut seen_in = vec![0usize; n_obj];
    for (c, cam) in spec.cameras.iter().enumerate() {
        let mut frame = Frame {
            image_id: format!("frame_{c:04}"),
            width: cam.width,
            height: cam.height,
            intrinsics: Intrinsics {
                fx: cam.fx,
                fy: cam.fy,
                cx: cam.cx,
                cy: cam.cy,
            },
            world_to_camera: look_at(Point3::from(cam.position), Point3::from(cam.look_at)),
            masks: Vec::new(),
            depth: None,
        };
        let pos = cloud.positions();
        for (k, gt) in ground_truth.iter().enumerate() {
            let lo = gt.points[0] as usize;
            let pts = &pos[lo..lo + gt.points.len()];
            let px = project_points(pts, &frame, 0.0);
            let bitmap = footprint(px.into_iter().flatten(), cam.width, cam.height);
            if bitmap.area() > 0 {
                seen_in[k] += 1;
                frame.masks.push(Mask2D {
                    label: gt.label.clone(),
                    score: 1.0,
                    bitmap,
                });
            }
        }
        if spec.depth_maps {
            frame.depth = Some(depth_buffer(pos, &frame));
        }
        frames.push(frame);
    }

    let labels = spec.labels();
    let total: usize = frames.iter().map(|f| f.masks.len()).sum();
    let n_noisy = (spec.label_noise * total as f64).round() as usize;
    if n_noisy > 0 && labels.len() > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(n_obj as u64);
        let mut picked = index::sample(&mut rng, total, n_noisy).into_vec();
        picked.sort_unstable();
        let slots: Vec<(usize, usize)> = frames
            .iter()
            .enumerate()
            .flat_map(|(f, fr)| (0..fr.masks.len()).map(move |m| (f, m)))
            .collect();
        for i in picked {
            let (f, m) = slots[i];
            let mask = &mut frames[f].masks[m];
            let others: Vec<&String> = labels.iter().filter(|l| **l != mask.label).collect();
            mask.label = others[rng.gen_range(0..others.len())].clone();
        }
    }

    let pairs: Vec<(String, String, f64)> = spec
        .synonyms
        .iter()
        .map(|s| (s.a.clone(), s.b.clone(), s.cosine))
        .collect();
    let table = synonym_table(&labels, &pairs)?;

    let warnings = seen_in
        .iter()
        .enumerate()
        .filter(|(_, &n)| n == 0)
        .map(|(k, _)| SynthWarning::EmptyFootprint {
            object: k,
            label: spec.objects[k].label.clone(),
        })
        .collect();

    Ok(GeneratedScene {
        cloud,
        frames,
        table,
        ground_truth,
        warnings,
    })
}

/// One-hot vectors for every label, except that each pair `(a, b, c)` shares
/// a 2D subspace: `a = e_k`, `b = c·e_k + sqrt(1 − c²)·e_{k+1}`. Pairs must
/// be disjoint; pair members need not appear in `labels`.
pub fn synonym_table(labels: &[String], pairs: &[(String, String, f64)]) -> Result<EmbeddingTable> {
    let mut partner: BTreeMap<&str, (usize, bool)> = BTreeMap::new();
    for (p, (a, b, c)) in pairs.iter().enumerate() {
        if !(-1.0..=1.0).contains(c) {
            return Err(SynthError::InfeasibleCosines(format!(
                "cosine {c} for ({a}, {b}) is outside [-1, 1]"
            )));
        }
        if a == b {
            return Err(SynthError::InfeasibleCosines(format!("pair ({a}, {b}) repeats a label")));
        }
        for (l, first) in [(a.as_str(), true), (b.as_str(), false)] {
            if partner.insert(l, (p, first)).is_some() {
                return Err(SynthError::InfeasibleCosines(format!(
                    "label {l:?} appears in more than one pair"
                )));
            }
        }
    }

    let all: BTreeSet<&str> = labels
        .iter()
        .map(String::as_str)
        .chain(pairs.iter().flat_map(|(a, b, _)| [a.as_str(), b.as_str()]))
        .collect();
    let mut axis_of_pair: BTreeMap<usize, usize> = BTreeMap::new();
    let mut placed: Vec<(&str, Vec<(usize, f64)>)> = Vec::new();
    let mut dim = 0;
    for &l in &all {
        let coords = match partner.get(l) {
            None => {
                dim += 1;
                vec![(dim - 1, 1.0)]
            }
            Some(&(p, first)) => {
                let k = *axis_of_pair.entry(p).or_insert_with(|| {
                    dim += 2;
                    dim - 2
                });
                let c = pairs[p].2;
                if first {
                    vec![(k, 1.0)]
                } else {
                    vec![(k, c), (k + 1, (1.0 - c * c).max(0.0).sqrt())]
                }
            }
        };
        placed.push((l, coords));
    }
    let entries = placed.into_iter().map(|(l, coords)| {
        let mut v = vec![0.0; dim];
        for (i, x) in coords {
            v[i] = x;
        }
        (l.to_string(), v)
    });
    Ok(EmbeddingTable::new(dim.max(1), entries)?)
}

fn row_major(m: &Matrix4<f64>) -> Vec<f64> {
    m.transpose().iter().copied().collect()
}

/// Writes the scene as a dataset directory plus `gt_instances.json`.
pub fn write_scene(scene: &GeneratedScene, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(pcio::io_err(dir))?;
    write_point_cloud(&dir.join(layout::CLOUD), &scene.cloud, PlyEncoding::BinaryLittleEndian)?;

    let mut manifest = Vec::with_capacity(scene.frames.len());
    let mut masks = Vec::with_capacity(scene.frames.len());
    for f in &scene.frames {
        let depth_file = match &f.depth {
            Some(d) => {
                let rel = format!("{}/{}.png", layout::DEPTH_DIR, f.image_id);
                let p = dir.join(&rel);
                std::fs::create_dir_all(p.parent().unwrap()).map_err(pcio::io_err(&p))?;
                write_depth_png(&p, d)?;
                Some(rel)
            }
            None => None,
        };
        manifest.push(ManifestFrame {
            image_id: f.image_id.clone(),
            width: f.width,
            height: f.height,
            intrinsics: f.intrinsics,
            extrinsics_w2c: row_major(&f.world_to_camera),
            masks_file: format!("{}/{}.json", layout::MASKS_DIR, f.image_id),
            depth_file,
        });
        masks.push(MasksFile {
            masks: f
                .masks
                .iter()
                .map(|m| MaskEntry {
                    label: m.label.clone(),
                    score: m.score,
                    rle: encode_rle(&m.bitmap),
                })
                .collect(),
        });
    }
    write_frames(&dir.join(layout::MANIFEST), &manifest, &masks)?;
    write_embedding_table(&dir.join(layout::EMBEDDINGS), &scene.table)?;
    write_ground_truth(&dir.join(layout::GROUND_TRUTH), &scene.ground_truth)?;
    Ok(())
}

pub const PRESETS: [&str; 4] = ["boxes3", "planes2", "cluttered8", "perf"];

fn unit_box(position: [f64; 3], label: &str, color: [u8; 3]) -> ObjectSpec {
    ObjectSpec {
        shape: Shape::Box {
            size: [1.0, 1.0, 1.0],
        },
        position,
        rotation_deg: [0.0; 3],
        label: label.into(),
        color,
    }
}

/// Built-in scenes, all noiseless with perfect masks unless noted:
///
/// * `boxes3`: three unit boxes on a circle, four cameras, seed 42.
/// * `planes2`: two horizontal rectangles side by side, three cameras.
/// * `cluttered8`: eight mixed primitives with 5% of mask labels swapped.
/// * `perf`: fifty boxes (100k points) seen by twenty cameras.
pub fn preset(name: &str) -> Result<SceneSpec> {
    let image = (320, 240);
    let spec = match name {
        "boxes3" => SceneSpec {
            objects: vec![
                unit_box([2.0, 0.0, 0.5], "chair", [200, 40, 40]),
                unit_box([-1.0, 1.732, 0.5], "table", [40, 200, 40]),
                unit_box([-1.0, -1.732, 0.5], "cabinet", [40, 40, 200]),
            ],
            cameras: ring_cameras(4, 6.0, 5.0, [0.0, 0.0, 0.5], 45.0, image, 300.0),
            points_per_object: 2000,
            noise_sigma: 0.0,
            seed: 42,
            label_noise: 0.0,
            synonyms: Vec::new(),
            depth_maps: false,
        },
        "planes2" => SceneSpec {
            objects: vec![
                ObjectSpec {
                    shape: Shape::Plane { size: [2.0, 2.0] },
                    position: [-1.5, 0.0, 0.0],
                    rotation_deg: [0.0; 3],
                    label: "rug".into(),
                    color: [180, 120, 60],
                },
                ObjectSpec {
                    shape: Shape::Plane { size: [2.0, 2.0] },
                    position: [1.5, 0.0, 0.0],
                    rotation_deg: [0.0; 3],
                    label: "mat".into(),
                    color: [60, 120, 180],
                },
            ],
            cameras: ring_cameras(3, 5.0, 5.0, [0.0, 0.0, 0.0], 90.0, image, 250.0),
            points_per_object: 2000,
            noise_sigma: 0.0,
            seed: 7,
            label_noise: 0.0,
            synonyms: Vec::new(),
            depth_maps: false,
        },
        "cluttered8" => {
            let shapes = [
                (Shape::Box { size: [1.0, 1.0, 1.0] }, "cabinet"),
                (Shape::Cylinder { radius: 0.4, height: 1.2 }, "lamp"),
                (Shape::Box { size: [1.2, 0.6, 0.8] }, "sofa"),
                (Shape::Plane { size: [1.2, 0.8] }, "rug"),
                (Shape::Cylinder { radius: 0.5, height: 0.6 }, "table"),
                (Shape::Box { size: [0.5, 0.5, 1.0] }, "chair"),
                (Shape::Box { size: [0.8, 0.4, 1.2] }, "shelf"),
                (Shape::Cylinder { radius: 0.3, height: 0.9 }, "bin"),
            ];
            let objects = shapes
                .into_iter()
                .enumerate()
                .map(|(k, (shape, label))| {
                    let a = (k as f64 * 45.0).to_radians();
                    let z = match &shape {
                        Shape::Box { size } => size[2] / 2.0,
                        Shape::Cylinder { height, .. } => height / 2.0,
                        Shape::Plane { .. } => 0.0,
                    };
                    ObjectSpec {
                        shape,
                        position: [3.5 * a.cos(), 3.5 * a.sin(), z],
                        rotation_deg: [0.0, 0.0, 20.0 * k as f64],
                        label: label.into(),
                        color: [(30 * k) as u8, (255 - 25 * k) as u8, (90 + 15 * k) as u8],
                    }
                })
                .collect();
            SceneSpec {
                objects,
                cameras: ring_cameras(6, 8.0, 8.0, [0.0, 0.0, 0.0], 0.0, image, 220.0),
                points_per_object: 1500,
                noise_sigma: 0.0,
                seed: 8,
                label_noise: 0.05,
                synonyms: vec![SynonymSpec {
                    a: "sofa".into(),
                    b: "couch".into(),
                    cosine: 0.9,
                }],
                depth_maps: false,
            }
        }
        "perf" => {
            let mut objects = Vec::new();
            for gx in 0..10 {
                for gy in 0..5 {
                    let k = gx * 5 + gy;
                    objects.push(ObjectSpec {
                        shape: Shape::Box {
                            size: [0.8, 0.8, 0.8],
                        },
                        position: [2.0 * gx as f64 - 9.0, 2.0 * gy as f64 - 4.0, 0.4],
                        rotation_deg: [0.0; 3],
                        label: format!("object{}", k % 10),
                        color: [(5 * k) as u8, (250 - 5 * k) as u8, 128],
                    });
                }
            }
            SceneSpec {
                objects,
                cameras: ring_cameras(20, 16.0, 12.0, [0.0, 0.0, 0.0], 0.0, image, 200.0),
                points_per_object: 2000,
                noise_sigma: 0.0,
                seed: 1,
                label_noise: 0.0,
                synonyms: Vec::new(),
                depth_maps: false,
            }
        }
        other => return Err(SynthError::UnknownPreset(other.to_string())),
    };
    Ok(spec)
}

/// Reads a [`SceneSpec`] from JSON.
pub fn read_scene_spec(path: &Path) -> Result<SceneSpec> {
    Ok(pcio::read_json(path)?)
}

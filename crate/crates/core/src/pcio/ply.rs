use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use nalgebra::{Point3, Vector3};
use ply_rs::parser::Parser;
use ply_rs::ply::{
    Addable, DefaultElement, ElementDef, Encoding, Ply, Property, PropertyDef, PropertyType,
    ScalarType,
};
use ply_rs::writer::Writer;

use super::{io_err, PcioError, Result};

const NORMAL_TOLERANCE: f64 = 1e-4;

/// A scene point cloud with optional per-point colors and normals.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<Point3<f64>>,
    colors: Option<Vec<[u8; 3]>>,
    normals: Option<Vec<Vector3<f64>>>,
}

impl PointCloud {
    pub fn new(
        positions: Vec<Point3<f64>>,
        colors: Option<Vec<[u8; 3]>>,
        normals: Option<Vec<Vector3<f64>>>,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(PcioError::LengthMismatch("point cloud is empty".into()));
        }
        if let Some(i) = positions
            .iter()
            .position(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(PcioError::NonFiniteCoordinate(i));
        }
        if let Some(c) = &colors {
            if c.len() != positions.len() {
                return Err(PcioError::LengthMismatch(format!(
                    "{} colors for {} points",
                    c.len(),
                    positions.len()
                )));
            }
        }
        if let Some(n) = &normals {
            if n.len() != positions.len() {
                return Err(PcioError::LengthMismatch(format!(
                    "{} normals for {} points",
                    n.len(),
                    positions.len()
                )));
            }
            for (index, v) in n.iter().enumerate() {
                let norm = v.norm();
                if !((norm - 1.0).abs() <= NORMAL_TOLERANCE) {
                    return Err(PcioError::BadNormal { index, norm });
                }
            }
        }
        Ok(Self {
            positions,
            colors,
            normals,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3<f64>] {
        &self.positions
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn normals(&self) -> Option<&[Vector3<f64>]> {
        self.normals.as_deref()
    }
}

fn scalar_as_f64(p: &Property) -> Option<f64> {
    Some(match *p {
        Property::Char(v) => v as f64,
        Property::UChar(v) => v as f64,
        Property::Short(v) => v as f64,
        Property::UShort(v) => v as f64,
        Property::Int(v) => v as f64,
        Property::UInt(v) => v as f64,
        Property::Float(v) => v as f64,
        Property::Double(v) => v,
        _ => return None,
    })
}

fn get_f64(e: &DefaultElement, key: &str, index: usize) -> Result<f64> {
    let p = e
        .get(key)
        .ok_or_else(|| PcioError::MissingField(key.to_string()))?;
    scalar_as_f64(p)
        .ok_or_else(|| PcioError::MalformedPly(format!("vertex {index}: {key} is a list property")))
}

/// Reads the `vertex` element of an ASCII or binary PLY file.
pub fn load_point_cloud(path: &Path) -> Result<PointCloud> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let parser = Parser::<DefaultElement>::new();
    let ply = parser
        .read_ply(&mut reader)
        .map_err(|e| PcioError::MalformedPly(e.to_string()))?;
    let def = ply
        .header
        .elements
        .get("vertex")
        .ok_or_else(|| PcioError::MissingField("vertex".into()))?;
    for key in ["x", "y", "z"] {
        if !def.properties.contains_key(key) {
            return Err(PcioError::MissingField(key.into()));
        }
    }
    let has = |k: &str| def.properties.contains_key(k);
    let has_colors = has("red") && has("green") && has("blue");
    let has_normals = has("nx") && has("ny") && has("nz");

    let vertices = ply
        .payload
        .get("vertex")
        .ok_or_else(|| PcioError::MalformedPly("vertex payload missing".into()))?;
    let mut positions = Vec::with_capacity(vertices.len());
    let mut colors = Vec::new();
    let mut normals = Vec::new();
    for (i, v) in vertices.iter().enumerate() {
        positions.push(Point3::new(
            get_f64(v, "x", i)?,
            get_f64(v, "y", i)?,
            get_f64(v, "z", i)?,
        ));
        if has_colors {
            let mut rgb = [0u8; 3];
            for (slot, key) in rgb.iter_mut().zip(["red", "green", "blue"]) {
                *slot = get_f64(v, key, i)?.clamp(0.0, 255.0) as u8;
            }
            colors.push(rgb);
        }
        if has_normals {
            normals.push(Vector3::new(
                get_f64(v, "nx", i)?,
                get_f64(v, "ny", i)?,
                get_f64(v, "nz", i)?,
            ));
        }
    }
    PointCloud::new(
        positions,
        has_colors.then_some(colors),
        has_normals.then_some(normals),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

/// Writes a PLY with float x,y,z and the optional uchar colors / float
/// normals the cloud carries.
pub fn write_point_cloud(path: &Path, cloud: &PointCloud, encoding: PlyEncoding) -> Result<()> {
    let mut ply = Ply::<DefaultElement>::new();
    ply.header.encoding = match encoding {
        PlyEncoding::Ascii => Encoding::Ascii,
        PlyEncoding::BinaryLittleEndian => Encoding::BinaryLittleEndian,
    };
    let mut def = ElementDef::new("vertex".to_string());
    let mut props = vec!["x", "y", "z"]
        .into_iter()
        .map(|k| (k, ScalarType::Float))
        .collect::<Vec<_>>();
    if cloud.colors.is_some() {
        props.extend(["red", "green", "blue"].map(|k| (k, ScalarType::UChar)));
    }
    if cloud.normals.is_some() {
        props.extend(["nx", "ny", "nz"].map(|k| (k, ScalarType::Float)));
    }
    for (k, t) in &props {
        def.properties
            .add(PropertyDef::new(k.to_string(), PropertyType::Scalar(t.clone())));
    }
    def.count = cloud.len();
    ply.header.elements.add(def);

    let mut vertices = Vec::with_capacity(cloud.len());
    for i in 0..cloud.len() {
        let mut e = DefaultElement::new();
        let p = cloud.positions[i];
        e.insert("x".into(), Property::Float(p.x as f32));
        e.insert("y".into(), Property::Float(p.y as f32));
        e.insert("z".into(), Property::Float(p.z as f32));
        if let Some(c) = &cloud.colors {
            e.insert("red".into(), Property::UChar(c[i][0]));
            e.insert("green".into(), Property::UChar(c[i][1]));
            e.insert("blue".into(), Property::UChar(c[i][2]));
        }
        if let Some(n) = &cloud.normals {
            e.insert("nx".into(), Property::Float(n[i].x as f32));
            e.insert("ny".into(), Property::Float(n[i].y as f32));
            e.insert("nz".into(), Property::Float(n[i].z as f32));
        }
        vertices.push(e);
    }
    ply.payload.insert("vertex".into(), vertices);

    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    Writer::new()
        .write_ply(&mut out, &mut ply)
        .map_err(io_err(path))?;
    Ok(())
}

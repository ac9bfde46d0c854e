use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::{io_err, PcioError, Result};

/// Per-pixel depth in millimeters (0 = no measurement), row-major as stored
/// in a 16-bit grayscale PNG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    pub millimeters: Vec<u16>,
}

impl DepthMap {
    /// Depth in meters at column `u`, row `v`; `None` where unmeasured.
    pub fn meters(&self, u: u32, v: u32) -> Option<f64> {
        let mm = self.millimeters[v as usize * self.width as usize + u as usize];
        (mm > 0).then(|| mm as f64 / 1000.0)
    }
}

pub fn read_depth_png(path: &Path) -> Result<DepthMap> {
    let bad = |reason: String| PcioError::BadDepth {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(io_err(path))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| bad(e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| bad("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf).map_err(|e| bad(e.to_string()))?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen {
        return Err(bad(format!(
            "expected 16-bit grayscale, got {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width, info.height);
    let line = info.line_size;
    let mut millimeters = Vec::with_capacity(width as usize * height as usize);
    for row in 0..height as usize {
        let bytes = &buf[row * line..row * line + width as usize * 2];
        millimeters.extend(bytes.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])));
    }
    Ok(DepthMap {
        width,
        height,
        millimeters,
    })
}

pub fn write_depth_png(path: &Path, depth: &DepthMap) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), depth.width, depth.height);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let bad = |e: png::EncodingError| PcioError::BadDepth {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut writer = encoder.write_header().map_err(bad)?;
    let data: Vec<u8> = depth
        .millimeters
        .iter()
        .flat_map(|v| v.to_be_bytes())
        .collect();
    writer.write_image_data(&data).map_err(bad)?;
    writer.finish().map_err(bad)
}

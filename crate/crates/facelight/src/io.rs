//! PNG images and masks, the binary normal map and face asset directories.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use facelight_core::facegen::{FaceAsset, ToneSpec};
use facelight_core::{ImageBuffer, Mask, Rgb8};
use image::{GrayImage, ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{read_json, write_json};

pub fn decode_png(bytes: &[u8]) -> Result<ImageBuffer, image::ImageError> {
    let rgb = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_rgb8();
    Ok(from_rgb_image(&rgb))
}

pub fn encode_png(img: &ImageBuffer) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    to_rgb_image(img)
        .write_to(&mut out, ImageFormat::Png)
        .expect("encoding to memory cannot fail");
    out.into_inner()
}

pub fn to_rgb_image(img: &ImageBuffer) -> RgbImage {
    let raw = img.pixels().iter().flat_map(|c| c.channels()).collect();
    RgbImage::from_raw(img.width(), img.height(), raw).expect("buffer matches dimensions")
}

pub fn from_rgb_image(rgb: &RgbImage) -> ImageBuffer {
    let pixels = rgb.pixels().map(|p| Rgb8::from_channels(p.0)).collect();
    ImageBuffer::from_pixels(rgb.width(), rgb.height(), pixels).expect("buffer matches dimensions")
}

/// Single-channel PNG; values ≥ 128 are selected.
pub fn decode_mask(bytes: &[u8]) -> Result<Mask, image::ImageError> {
    let gray = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_luma8();
    let bits = gray.pixels().map(|p| p.0[0] >= 128).collect();
    Ok(Mask::from_bits(gray.width(), gray.height(), bits).expect("buffer matches dimensions"))
}

/// Selected pixels are written as 255, the rest as 0.
pub fn encode_mask(mask: &Mask) -> Vec<u8> {
    let raw = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let gray = GrayImage::from_raw(mask.width(), mask.height(), raw).expect("buffer matches dimensions");
    let mut out = Cursor::new(Vec::new());
    gray.write_to(&mut out, ImageFormat::Png)
        .expect("encoding to memory cannot fail");
    out.into_inner()
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_image(path: &Path) -> Result<ImageBuffer> {
    decode_png(&read_bytes(path)?).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_image(path: &Path, img: &ImageBuffer) -> Result<()> {
    write_bytes(path, &encode_png(img))
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    decode_mask(&read_bytes(path)?).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    write_bytes(path, &encode_mask(mask))
}

/// Little-endian `u32` width and height, then `f32` xyz triples row-major.
pub fn encode_normals(width: u32, height: u32, normals: &[[f32; 3]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + normals.len() * 12);
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    for n in normals {
        for v in n {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_normals(bytes: &[u8]) -> Option<(u32, u32, Vec<[f32; 3]>)> {
    let word = |i: usize| bytes.get(i..i + 4).map(|b| [b[0], b[1], b[2], b[3]]);
    let width = u32::from_le_bytes(word(0)?);
    let height = u32::from_le_bytes(word(4)?);
    let n = width as usize * height as usize;
    if bytes.len() != 8 + n * 12 {
        return None;
    }
    let normals = bytes[8..]
        .chunks_exact(12)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes([c[i], c[i + 1], c[i + 2], c[i + 3]]);
            [f(0), f(4), f(8)]
        })
        .collect();
    Some((width, height, normals))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceMeta {
    pub seed: u64,
    pub size: u32,
    pub tone: ToneSpec,
    pub center_x: f64,
}

pub const ALBEDO_FILE: &str = "albedo.png";
pub const NORMALS_FILE: &str = "normals.bin";
pub const SKIN_MASK_FILE: &str = "skin_mask.png";
pub const NECK_MASK_FILE: &str = "neck_mask.png";
pub const META_FILE: &str = "meta.json";

pub fn save_face(dir: &Path, face: &FaceAsset) -> Result<()> {
    write_image(&dir.join(ALBEDO_FILE), &face.albedo)?;
    write_bytes(&dir.join(NORMALS_FILE), &encode_normals(face.size(), face.size(), &face.normals))?;
    write_mask(&dir.join(SKIN_MASK_FILE), &face.skin_mask)?;
    write_mask(&dir.join(NECK_MASK_FILE), &face.neck_mask)?;
    let meta = FaceMeta {
        seed: face.seed,
        size: face.size(),
        tone: face.tone.clone(),
        center_x: face.center_x(),
    };
    write_json(&dir.join(META_FILE), &meta)
}

pub fn load_face(dir: &Path) -> Result<FaceAsset> {
    let meta: FaceMeta = read_json(&dir.join(META_FILE))?;
    let albedo = read_image(&dir.join(ALBEDO_FILE))?;
    let normals_path = dir.join(NORMALS_FILE);
    let (w, h, normals) =
        decode_normals(&read_bytes(&normals_path)?).ok_or_else(|| Error::format(&normals_path, "truncated normal map"))?;
    let skin_mask = read_mask(&dir.join(SKIN_MASK_FILE))?;
    let neck_mask = read_mask(&dir.join(NECK_MASK_FILE))?;
    let dims = (meta.size, meta.size);
    if albedo.dims() != dims || (w, h) != dims || skin_mask.dims() != dims || neck_mask.dims() != dims {
        return Err(Error::format(dir, "face asset files disagree on size"));
    }
    Ok(FaceAsset {
        albedo,
        normals,
        skin_mask,
        neck_mask,
        tone: meta.tone,
        seed: meta.seed,
    })
}

//! Procedural synthetic faces: a flat-lit albedo, a camera-space normal map
//! and face/neck masks.
//!
//! Geometry is an ellipsoid head over a cylindrical neck, seen frontally.
//! Camera space has +z toward the camera, +y up and +x toward the image's
//! left edge (the subject's right), so a light at +x brightens the left half
//! of the picture.

use alloc::string::String;
use alloc::vec::Vec;

use crate::color::Rgb8;
use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Mask};
use crate::math;
use crate::rng::SeededRng;

/// Darkest base skin color (t = 0).
pub const DARK_BASE: Rgb8 = Rgb8::new(54, 31, 22);
/// Lightest base skin color (t = 1).
pub const LIGHT_BASE: Rgb8 = Rgb8::new(241, 194, 167);

pub const MIN_FACE_SIZE: u32 = 64;
pub const BACKGROUND: Rgb8 = Rgb8::gray(128);
/// Albedo noise amplitude in 8-bit levels.
pub const NOISE_LEVELS: i32 = 4;

// Composition as fractions of the canvas size.
const FACE_CX: f64 = 0.5;
const FACE_CY: f64 = 0.42;
const FACE_RX: f64 = 0.30;
const FACE_RY: f64 = 0.39;
const FACE_RZ: f64 = 0.35;
const NECK_HALF_WIDTH: f64 = 0.13;
// Cylinder radius slightly exceeds the band so edge normals keep z > 0.
const NECK_RADIUS: f64 = 0.15;

/// A skin tone on the dark→light blend axis.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ToneSpec {
    pub t: f64,
    pub label: String,
}

impl ToneSpec {
    pub fn new(t: f64, label: impl Into<String>) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange { name: "t", value: t });
        }
        Ok(ToneSpec {
            t,
            label: label.into(),
        })
    }

    /// Label derived from the blend value, e.g. `t030` for 0.3.
    pub fn from_t(t: f64) -> Result<Self> {
        let pct = math::round_half_up(t * 100.0) as u32;
        ToneSpec::new(t, alloc::format!("t{pct:03}"))
    }

    pub fn color(&self) -> Rgb8 {
        // Validated at construction.
        blend_tone(self.t).unwrap_or(DARK_BASE)
    }
}

/// The four training tones: two dark, two light.
pub fn standard_tones() -> Vec<ToneSpec> {
    [0.1, 0.3, 0.7, 0.9]
        .iter()
        .map(|&t| ToneSpec::from_t(t).expect("constant in range"))
        .collect()
}

/// Six tones spanning the Monk scale, for the skin-tone variance study.
pub fn monk_tones() -> Vec<ToneSpec> {
    [0.05, 0.2, 0.4, 0.6, 0.8, 0.95]
        .iter()
        .map(|&t| ToneSpec::from_t(t).expect("constant in range"))
        .collect()
}

/// Interpolates between the dark and light bases in linear RGB.
pub fn blend_tone(t: f64) -> Result<Rgb8> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange { name: "t", value: t });
    }
    let d = DARK_BASE.to_linear();
    let l = LIGHT_BASE.to_linear();
    Ok(Rgb8::from_linear([
        d[0] + t * (l[0] - d[0]),
        d[1] + t * (l[1] - d[1]),
        d[2] + t * (l[2] - d[2]),
    ]))
}

/// Generated face: albedo, unit normals and region masks.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceAsset {
    pub albedo: ImageBuffer,
    /// Row-major camera-space unit normals.
    pub normals: Vec<[f32; 3]>,
    pub skin_mask: Mask,
    pub neck_mask: Mask,
    pub tone: ToneSpec,
    pub seed: u64,
}

impl FaceAsset {
    pub fn size(&self) -> u32 {
        self.albedo.width()
    }

    pub fn normal(&self, x: u32, y: u32) -> [f32; 3] {
        self.normals[y as usize * self.albedo.width() as usize + x as usize]
    }

    /// Column of the face's vertical symmetry axis, in pixel-center units.
    pub fn center_x(&self) -> f64 {
        face_geometry(self.size()).cx
    }

    /// Skin ∪ neck.
    pub fn region_mask(&self) -> Mask {
        self.skin_mask
            .union(&self.neck_mask)
            .expect("masks share the canvas size")
    }

    /// Same geometry with the albedo replaced.
    pub fn with_albedo(&self, albedo: ImageBuffer, tone: ToneSpec) -> Result<FaceAsset> {
        if albedo.dims() != self.albedo.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.albedo.dims(),
                actual: albedo.dims(),
            });
        }
        Ok(FaceAsset {
            albedo,
            tone,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    rz: f64,
    neck_half: f64,
    neck_radius: f64,
}

fn face_geometry(size: u32) -> Geometry {
    let s = size as f64;
    // Centers sit on pixel centers so the central pixel is exactly frontal.
    Geometry {
        cx: math::floor(FACE_CX * s) + 0.5,
        cy: math::floor(FACE_CY * s) + 0.5,
        rx: FACE_RX * s,
        ry: FACE_RY * s,
        rz: FACE_RZ * s,
        neck_half: NECK_HALF_WIDTH * s,
        neck_radius: NECK_RADIUS * s,
    }
}

enum Region {
    Face([f64; 3]),
    Neck([f64; 3]),
    Background,
}

fn classify(g: &Geometry, x: u32, y: u32) -> Region {
    let dx = x as f64 + 0.5 - g.cx;
    let dy = y as f64 + 0.5 - g.cy;
    let u2 = (dx / g.rx) * (dx / g.rx) + (dy / g.ry) * (dy / g.ry);
    if u2 < 1.0 {
        let z = g.rz * math::sqrt(1.0 - u2);
        // Gradient of the ellipsoid; image x grows rightward but camera +x
        // points left, image y grows downward but camera +y points up.
        let n = [-dx / (g.rx * g.rx), -dy / (g.ry * g.ry), z / (g.rz * g.rz)];
        return Region::Face(normalize(n));
    }
    if dy > 0.0 && dx.abs() <= g.neck_half {
        let s = -dx / g.neck_radius;
        return Region::Neck([s, 0.0, math::sqrt(1.0 - s * s)]);
    }
    Region::Background
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = math::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    [v[0] / n, v[1] / n, v[2] / n]
}

pub fn generate_face(seed: u64, tone: &ToneSpec, size: u32) -> Result<FaceAsset> {
    if size < MIN_FACE_SIZE {
        return Err(Error::SizeTooSmall(size));
    }
    let base = blend_tone(tone.t)?;
    let g = face_geometry(size);
    let n = size as usize * size as usize;
    let mut rng = SeededRng::new(seed);

    let mut albedo = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut skin = Vec::with_capacity(n);
    let mut neck = Vec::with_capacity(n);
    for y in 0..size {
        for x in 0..size {
            let (normal, is_skin, is_neck) = match classify(&g, x, y) {
                Region::Face(nv) => (nv, true, false),
                Region::Neck(nv) => (nv, false, true),
                Region::Background => ([0.0, 0.0, 1.0], false, false),
            };
            normals.push([normal[0] as f32, normal[1] as f32, normal[2] as f32]);
            skin.push(is_skin);
            neck.push(is_neck);
            if is_skin || is_neck {
                let noise = rng.range_i32(-NOISE_LEVELS, NOISE_LEVELS);
                let jitter = |c: u8| (c as i32 + noise).clamp(0, 255) as u8;
                albedo.push(Rgb8::new(jitter(base.r), jitter(base.g), jitter(base.b)));
            } else {
                albedo.push(BACKGROUND);
            }
        }
    }
    Ok(FaceAsset {
        albedo: ImageBuffer::from_pixels(size, size, albedo)?,
        normals,
        skin_mask: Mask::from_bits(size, size, skin)?,
        neck_mask: Mask::from_bits(size, size, neck)?,
        tone: tone.clone(),
        seed,
    })
}

/// Noisy swatch of a tone, used as the histogram-matching reference.
pub fn tone_swatch(tone: &ToneSpec, size: u32, seed: u64) -> ImageBuffer {
    let base = tone.color();
    let mut rng = SeededRng::new(seed);
    let pixels = (0..size as usize * size as usize)
        .map(|_| {
            let noise = rng.range_i32(-NOISE_LEVELS, NOISE_LEVELS);
            let jitter = |c: u8| (c as i32 + noise).clamp(0, 255) as u8;
            Rgb8::new(jitter(base.r), jitter(base.g), jitter(base.b))
        })
        .collect();
    ImageBuffer::from_pixels(size, size, pixels).expect("size matches")
}

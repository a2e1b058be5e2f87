//! Second-order spherical-harmonic Lambertian relighting.
//!
//! Lighting is grayscale: nine real SH coefficients (bands 0–2). Spot lights
//! are projected through the clamped-cosine kernel, so evaluating the
//! expansion at a surface normal yields the irradiance-derived shading
//! factor that multiplies the albedo in linear light.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::color::Rgb8;
use crate::error::{Error, Result};
use crate::facegen::{generate_face, FaceAsset, ToneSpec};
use crate::image::ImageBuffer;
use crate::math;
use crate::rng::SeededRng;

use core::f64::consts::PI;

/// Illumination quality label. `Good` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Label {
    Good,
    Bad,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Good => "good",
            Label::Bad => "bad",
        }
    }

    pub fn is_good(self) -> bool {
        self == Label::Good
    }
}

impl core::fmt::Display for Label {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "good" | "Good" => Ok(Label::Good),
            "bad" | "Bad" => Ok(Label::Bad),
            _ => Err(Error::InvalidConfig("label must be good or bad")),
        }
    }
}

const Y00: f64 = 0.282_094_791_773_878_14;
const Y1: f64 = 0.488_602_511_902_919_9;
const Y2_PRODUCT: f64 = 1.092_548_430_592_079_2;
const Y20: f64 = 0.315_391_565_252_520_05;
const Y22: f64 = 0.546_274_215_296_039_6;

/// Clamped-cosine band gains.
const A0: f64 = PI;
const A1: f64 = 2.0 * PI / 3.0;
const A2: f64 = PI / 4.0;

/// Real SH basis at a unit direction, ordered (0,0), (1,-1), (1,0), (1,1),
/// (2,-2), (2,-1), (2,0), (2,1), (2,2).
pub fn sh_basis(n: [f64; 3]) -> [f64; 9] {
    let [x, y, z] = n;
    [
        Y00,
        Y1 * y,
        Y1 * z,
        Y1 * x,
        Y2_PRODUCT * x * y,
        Y2_PRODUCT * y * z,
        Y20 * (3.0 * z * z - 1.0),
        Y2_PRODUCT * x * z,
        Y22 * (x * x - y * y),
    ]
}

const BAND_GAIN: [f64; 9] = [A0, A1, A1, A1, A2, A2, A2, A2, A2];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ShCoefficients(pub [f64; 9]);

impl ShCoefficients {
    /// Lighting whose shading factor is `level` at every normal.
    pub fn uniform(level: f64) -> Self {
        let mut c = [0.0; 9];
        c[0] = level / Y00;
        ShCoefficients(c)
    }

    /// Shading factor before clamping.
    pub fn eval(&self, n: [f64; 3]) -> f64 {
        let basis = sh_basis(n);
        self.0.iter().zip(basis.iter()).map(|(c, y)| c * y).sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        ShCoefficients(self.0.map(|c| c * k))
    }

    /// Mirrors the lighting across the x = 0 plane.
    pub fn mirrored_x(&self) -> Self {
        let mut c = self.0;
        // Terms odd in x flip sign: Y11, Y2-2, Y21.
        for i in [3, 4, 7] {
            c[i] = -c[i];
        }
        ShCoefficients(c)
    }
}

impl core::ops::Add for ShCoefficients {
    type Output = ShCoefficients;

    fn add(self, rhs: Self) -> Self {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(rhs.0) {
            *a += b;
        }
        ShCoefficients(c)
    }
}

/// SH bases on a latitude-longitude grid of the sphere.
struct SphereSamples(Vec<[f64; 9]>);

impl SphereSamples {
    fn new(step_deg: u32) -> Self {
        let mut bases = Vec::new();
        for i in 0..=180 / step_deg {
            let theta = math::to_radians((i * step_deg) as f64);
            for j in 0..360 / step_deg {
                let phi = math::to_radians((j * step_deg) as f64);
                let n = [
                    math::sin(theta) * math::cos(phi),
                    math::sin(theta) * math::sin(phi),
                    math::cos(theta),
                ];
                bases.push(sh_basis(n));
            }
        }
        SphereSamples(bases)
    }

    fn minimum(&self, sh: &ShCoefficients) -> f64 {
        self.0
            .iter()
            .map(|b| sh.0.iter().zip(b).map(|(c, y)| c * y).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Grid patterns must keep at least this pre-clamp shading everywhere on the
/// sphere; the margin covers the sampling error of [`ShCoefficients::sphere_minimum`].
pub const MIN_SPHERE_SHADING: f64 = 1e-3;

/// Coarse sphere minima above this cannot hide a negative value between samples.
const COARSE_SAFE_MINIMUM: f64 = 0.02;

impl ShCoefficients {
    /// Smallest pre-clamp shading over a 1° latitude-longitude grid.
    pub fn sphere_minimum(&self) -> f64 {
        SphereSamples::new(1).minimum(self)
    }
}

/// A directional light: `dir` points from the face toward the light.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpotLight {
    pub dir: [f64; 3],
    pub intensity: f64,
}

impl SpotLight {
    /// Direction from azimuth (0° = frontal, +90° = +x) and elevation (+ up).
    pub fn from_angles(azimuth_deg: f64, elevation_deg: f64, intensity: f64) -> Self {
        let az = math::to_radians(azimuth_deg);
        let el = math::to_radians(elevation_deg);
        SpotLight {
            dir: [
                math::cos(el) * math::sin(az),
                math::sin(el),
                math::cos(el) * math::cos(az),
            ],
            intensity,
        }
    }

    pub fn mirrored_x(&self) -> Self {
        SpotLight {
            dir: [-self.dir[0], self.dir[1], self.dir[2]],
            intensity: self.intensity,
        }
    }
}

pub fn sh_from_lights(lights: &[SpotLight], ambient: f64) -> Result<ShCoefficients> {
    let mut c = [0.0; 9];
    c[0] = ambient * A0 * Y00;
    for light in lights {
        let [x, y, z] = light.dir;
        let norm = math::sqrt(x * x + y * y + z * z);
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::NonUnitDirection(norm));
        }
        let basis = sh_basis(light.dir);
        for i in 0..9 {
            c[i] += light.intensity * BAND_GAIN[i] * basis[i];
        }
    }
    Ok(ShCoefficients(c))
}

fn normal_f64(n: [f32; 3]) -> [f64; 3] {
    [n[0] as f64, n[1] as f64, n[2] as f64]
}

/// Pre-clamp shading factor for every pixel of the canvas.
pub fn shading_field(face: &FaceAsset, sh: &ShCoefficients) -> Vec<f64> {
    face.normals.iter().map(|&n| sh.eval(normal_f64(n))).collect()
}

/// Renders the face under `sh`: albedo × clamp(shading, 0, 1) in linear
/// light. Background pixels carry frontal normals and are shaded too.
pub fn shade(face: &FaceAsset, sh: &ShCoefficients) -> ImageBuffer {
    let pixels = face
        .albedo
        .pixels()
        .iter()
        .zip(&face.normals)
        .map(|(&albedo, &n)| {
            let s = sh.eval(normal_f64(n)).clamp(0.0, 1.0);
            let lin = albedo.to_linear();
            Rgb8::from_linear([lin[0] * s, lin[1] * s, lin[2] * s])
        })
        .collect();
    ImageBuffer::from_pixels(face.albedo.width(), face.albedo.height(), pixels)
        .expect("albedo dimensions are consistent")
}

/// Thresholds of the automatic labeling rule.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelThresholds {
    pub mean_min: f64,
    pub mean_max: f64,
    /// Pixels below this shading count as shadow.
    pub shadow_level: f64,
    pub max_shadow_fraction: f64,
    /// Pixels at or above this (pre-clamp) count as overexposed.
    pub over_level: f64,
    pub max_over_fraction: f64,
    pub max_asymmetry: f64,
}

impl Default for LabelThresholds {
    fn default() -> Self {
        LabelThresholds {
            mean_min: 0.45,
            mean_max: 0.95,
            shadow_level: 0.25,
            max_shadow_fraction: 0.05,
            over_level: 1.0,
            max_over_fraction: 0.05,
            max_asymmetry: 0.25,
        }
    }
}

/// Shading statistics over the skin mask that drive the labeling rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadingStats {
    pub mean: f64,
    pub shadow_fraction: f64,
    pub over_fraction: f64,
    /// |mean(left) − mean(right)| / mean; infinite when the mean is ≤ 0.
    pub asymmetry: f64,
}

impl ShadingStats {
    pub fn label(&self, th: &LabelThresholds) -> Label {
        let good = self.mean >= th.mean_min
            && self.mean <= th.mean_max
            && self.shadow_fraction < th.max_shadow_fraction
            && self.over_fraction < th.max_over_fraction
            && self.asymmetry < th.max_asymmetry;
        if good {
            Label::Good
        } else {
            Label::Bad
        }
    }
}

pub fn shading_stats(face: &FaceAsset, sh: &ShCoefficients, th: &LabelThresholds) -> Result<ShadingStats> {
    let width = face.size() as usize;
    let cx = face.center_x();
    let (mut n, mut sum, mut shadow, mut over) = (0usize, 0.0, 0usize, 0usize);
    let (mut left, mut n_left, mut right, mut n_right) = (0.0, 0usize, 0.0, 0usize);
    for (i, (&normal, &sel)) in face.normals.iter().zip(face.skin_mask.bits()).enumerate() {
        if !sel {
            continue;
        }
        let s = sh.eval(normal_f64(normal));
        n += 1;
        sum += s;
        if s < th.shadow_level {
            shadow += 1;
        }
        if s >= th.over_level {
            over += 1;
        }
        let px = (i % width) as f64 + 0.5;
        if px < cx {
            left += s;
            n_left += 1;
        } else if px > cx {
            right += s;
            n_right += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let mean = sum / n as f64;
    let side_mean = |s: f64, k: usize| if k == 0 { 0.0 } else { s / k as f64 };
    let asymmetry = if mean > 0.0 {
        (side_mean(left, n_left) - side_mean(right, n_right)).abs() / mean
    } else {
        f64::INFINITY
    };
    Ok(ShadingStats {
        mean,
        shadow_fraction: shadow as f64 / n as f64,
        over_fraction: over as f64 / n as f64,
        asymmetry,
    })
}

/// Labels a lighting by its shading on `face`; independent of albedo.
pub fn auto_label(face: &FaceAsset, sh: &ShCoefficients) -> Result<Label> {
    auto_label_with(face, sh, &LabelThresholds::default())
}

pub fn auto_label_with(face: &FaceAsset, sh: &ShCoefficients, th: &LabelThresholds) -> Result<Label> {
    Ok(shading_stats(face, sh, th)?.label(th))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LightPattern {
    pub id: String,
    pub lights: Vec<SpotLight>,
    pub ambient: f64,
    pub sh: ShCoefficients,
    pub label: Label,
}

pub const GRID_AZIMUTHS: [f64; 5] = [-90.0, -45.0, 0.0, 45.0, 90.0];
pub const GRID_ELEVATIONS: [f64; 4] = [-45.0, 0.0, 45.0, 60.0];
pub const GRID_INTENSITIES: [f64; 3] = [0.3, 0.7, 1.1];
pub const GRID_AMBIENTS: [f64; 2] = [0.05, 0.25];
pub const DEFAULT_PATTERN_COUNT: usize = 200;

pub const CALIBRATION_SEED: u64 = 0;
pub const CALIBRATION_SIZE: u32 = 128;

/// The fixed face every pattern is labeled on.
pub fn calibration_face() -> FaceAsset {
    let tone = ToneSpec::from_t(0.5).expect("constant in range");
    generate_face(CALIBRATION_SEED, &tone, CALIBRATION_SIZE).expect("calibration size is valid")
}

/// Every two-light configuration of the grid, in enumeration order.
pub fn enumerate_configurations() -> Vec<(Vec<SpotLight>, f64)> {
    let mut dirs = Vec::new();
    for &az in &GRID_AZIMUTHS {
        for &el in &GRID_ELEVATIONS {
            dirs.push((az, el));
        }
    }
    let mut out = Vec::new();
    for i in 0..dirs.len() {
        for j in (i + 1)..dirs.len() {
            for &ii in &GRID_INTENSITIES {
                for &ij in &GRID_INTENSITIES {
                    for &amb in &GRID_AMBIENTS {
                        let lights = alloc::vec![
                            SpotLight::from_angles(dirs[i].0, dirs[i].1, ii),
                            SpotLight::from_angles(dirs[j].0, dirs[j].1, ij),
                        ];
                        out.push((lights, amb));
                    }
                }
            }
        }
    }
    out
}

/// Share of Good patterns in a subsample (at least one is always kept).
pub const GOOD_PATTERN_SHARE: f64 = 0.25;

/// `count` labeled patterns subsampled from the grid with `seed`.
///
/// Configurations whose SH shading dips below zero somewhere on the sphere
/// are skipped. Good configurations are rare on the grid, so the subsample is
/// drawn per label: `round(count × GOOD_PATTERN_SHARE)` Good (at least one) and the
/// rest Bad, each capped by what the grid offers.
pub fn pattern_grid(count: usize, seed: u64) -> Vec<LightPattern> {
    pattern_grid_with(count, seed, &calibration_face(), &LabelThresholds::default())
}

pub fn pattern_grid_with(count: usize, seed: u64, face: &FaceAsset, th: &LabelThresholds) -> Vec<LightPattern> {
    let coarse = SphereSamples::new(4);
    let fine = SphereSamples::new(1);
    let labeled: Vec<(Vec<SpotLight>, f64, ShCoefficients, Label)> = enumerate_configurations()
        .into_iter()
        .filter_map(|(lights, ambient)| {
            let sh = sh_from_lights(&lights, ambient).expect("grid directions are unit length");
            let non_negative = coarse.minimum(&sh) > COARSE_SAFE_MINIMUM || fine.minimum(&sh) >= MIN_SPHERE_SHADING;
            if !non_negative {
                return None;
            }
            let label = auto_label_with(face, &sh, th).expect("calibration face has skin");
            Some((lights, ambient, sh, label))
        })
        .collect();
    let (mut good, mut bad): (Vec<usize>, Vec<usize>) = (0..labeled.len()).partition(|&i| labeled[i].3.is_good());

    let n_good = if count == 0 {
        0
    } else {
        (math::round_half_up(count as f64 * GOOD_PATTERN_SHARE) as usize).clamp(1, count).min(good.len())
    };
    let n_bad = (count - n_good).min(bad.len());
    let mut rng = SeededRng::new(seed);
    rng.shuffle(&mut good);
    rng.shuffle(&mut bad);
    let mut order: Vec<usize> = good[..n_good].iter().chain(&bad[..n_bad]).copied().collect();
    order.sort_unstable();
    order
        .into_iter()
        .enumerate()
        .map(|(k, idx)| {
            let (lights, ambient, sh, label) = labeled[idx].clone();
            LightPattern {
                id: format!("p{k:03}"),
                lights,
                ambient,
                sh,
                label,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facegen::{generate_face, standard_tones};

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ambient_only_touches_dc_term() {
        let sh = sh_from_lights(&[], 0.3).unwrap();
        assert!(sh.0[0] > 0.0);
        assert!(sh.0[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn projection_is_additive() {
        let p = SpotLight::from_angles(45.0, 0.0, 0.7);
        let q = SpotLight::from_angles(-90.0, 60.0, 1.1);
        let both = sh_from_lights(&[p, q], 0.0).unwrap();
        let sum = sh_from_lights(&[p], 0.0).unwrap() + sh_from_lights(&[q], 0.0).unwrap();
        for (a, b) in both.0.iter().zip(sum.0) {
            assert!(approx(*a, b, 1e-15));
        }
    }

    #[test]
    fn rejects_non_unit_direction() {
        let bad = SpotLight {
            dir: [0.0, 0.0, 1.1],
            intensity: 1.0,
        };
        assert!(matches!(sh_from_lights(&[bad], 0.0), Err(Error::NonUnitDirection(_))));
    }

    #[test]
    fn frontal_light_peaks_along_its_direction() {
        let sh = sh_from_lights(&[SpotLight::from_angles(0.0, 0.0, 1.0)], 0.0).unwrap();
        let front = sh.eval([0.0, 0.0, 1.0]);
        let back = sh.eval([0.0, 0.0, -1.0]);
        // Band-limited clamped cosine: (π + 2π + 5π/4) / 4π at the pole.
        assert!(approx(front, 1.0625, 1e-9), "{front}");
        assert!(approx(back, 0.0625, 1e-9), "{back}");
    }

    #[test]
    fn uniform_lighting_reproduces_albedo() {
        let face = generate_face(2, &ToneSpec::from_t(0.4).unwrap(), 64).unwrap();
        assert_eq!(shade(&face, &ShCoefficients::uniform(1.0)), face.albedo);
    }

    #[test]
    fn zero_lighting_is_black() {
        let face = generate_face(2, &ToneSpec::from_t(0.9).unwrap(), 64).unwrap();
        let out = shade(&face, &ShCoefficients::default());
        assert!(out.pixels().iter().all(|&p| p == Rgb8::BLACK));
    }

    fn half_means(face: &FaceAsset, img: &ImageBuffer) -> (f64, f64) {
        let cx = face.center_x();
        let (mut l, mut nl, mut r, mut nr) = (0.0, 0, 0.0, 0);
        for y in 0..face.size() {
            for x in 0..face.size() {
                if !face.skin_mask.get(x, y) {
                    continue;
                }
                let v = crate::color::relative_luminance(img.get(x, y));
                if (x as f64 + 0.5) < cx {
                    l += v;
                    nl += 1;
                } else if (x as f64 + 0.5) > cx {
                    r += v;
                    nr += 1;
                }
            }
        }
        (l / nl as f64, r / nr as f64)
    }

    #[test]
    fn positive_x_light_brightens_left_half() {
        let face = calibration_face();
        let sh = sh_from_lights(&[SpotLight::from_angles(90.0, 0.0, 1.0)], 0.05).unwrap();
        let (left, right) = half_means(&face, &shade(&face, &sh));
        assert!(left > right, "{left} vs {right}");
    }

    #[test]
    fn mirrored_lights_mirror_the_shading_field() {
        let face = calibration_face();
        let lights = [SpotLight::from_angles(45.0, 45.0, 0.7), SpotLight::from_angles(-90.0, 0.0, 1.1)];
        let mirrored: Vec<SpotLight> = lights.iter().map(SpotLight::mirrored_x).collect();
        let a = shading_field(&face, &sh_from_lights(&lights, 0.05).unwrap());
        let b = shading_field(&face, &sh_from_lights(&mirrored, 0.05).unwrap());
        let size = face.size() as usize;
        let cx = face.center_x();
        for (i, &sel) in face.skin_mask.bits().iter().enumerate() {
            if !sel {
                continue;
            }
            let (x, y) = (i % size, i / size);
            let mx = (2.0 * cx - 1.0 - x as f64) as usize;
            let level = |s: f64| s.clamp(0.0, 1.0) * 255.0;
            assert!((level(a[i]) - level(b[y * size + mx])).abs() <= 1.0);
        }
        let sh = sh_from_lights(&lights, 0.05).unwrap();
        assert_eq!(sh.mirrored_x(), sh_from_lights(&mirrored, 0.05).unwrap());
    }

    #[test]
    fn scaling_preserves_the_brightest_pixel() {
        let face = calibration_face();
        let sh = sh_from_lights(&[SpotLight::from_angles(45.0, 45.0, 0.7)], 0.05).unwrap();
        let argmax = |f: &[f64]| {
            let mut best = 0;
            for (i, v) in f.iter().enumerate() {
                if *v > f[best] {
                    best = i;
                }
            }
            best
        };
        let base = shading_field(&face, &sh);
        for k in [0.1, 2.0, 7.5] {
            let scaled = shading_field(&face, &sh.scaled(k));
            assert_eq!(argmax(&base), argmax(&scaled));
            for (a, b) in base.iter().zip(&scaled) {
                assert!(approx(a * k, *b, 1e-9));
            }
        }
    }

    #[test]
    fn label_examples() {
        let face = calibration_face();
        assert_eq!(auto_label(&face, &ShCoefficients::uniform(0.7)).unwrap(), Label::Good);
        assert_eq!(auto_label(&face, &ShCoefficients::uniform(0.1)).unwrap(), Label::Bad);
        let side = sh_from_lights(&[SpotLight::from_angles(90.0, 0.0, 1.1)], 0.05).unwrap();
        let stats = shading_stats(&face, &side, &LabelThresholds::default()).unwrap();
        assert!(stats.asymmetry >= 0.25, "{stats:?}");
        assert_eq!(stats.label(&LabelThresholds::default()), Label::Bad);
    }

    #[test]
    fn label_ignores_albedo_tone() {
        let patterns = pattern_grid(60, 3);
        for tone in standard_tones() {
            let face = generate_face(CALIBRATION_SEED, &tone, CALIBRATION_SIZE).unwrap();
            for p in &patterns {
                assert_eq!(auto_label(&face, &p.sh).unwrap(), p.label);
            }
        }
    }

    #[test]
    fn grid_has_two_hundred_patterns_with_good_minority() {
        let patterns = pattern_grid(DEFAULT_PATTERN_COUNT, 7);
        assert_eq!(patterns.len(), 200);
        // 50 Good are requested but only 43 non-negative Good configurations exist.
        let good = patterns.iter().filter(|p| p.label.is_good()).count();
        assert_eq!(good, 43);
        assert!(patterns.iter().all(|p| p.sh.sphere_minimum() >= 0.0));
        assert_eq!(patterns, pattern_grid(DEFAULT_PATTERN_COUNT, 7));
    }

    #[test]
    fn small_grids_keep_both_labels() {
        for seed in 0..5 {
            let patterns = pattern_grid(40, seed);
            assert_eq!(patterns.len(), 40);
            assert_eq!(patterns.iter().filter(|p| p.label.is_good()).count(), 10);
        }
        let one = pattern_grid(1, 0);
        assert_eq!(one.len(), 1);
        assert!(one[0].label.is_good());
        assert!(pattern_grid(0, 0).is_empty());
    }

    #[test]
    fn grid_patterns_are_distinct() {
        let patterns = pattern_grid(DEFAULT_PATTERN_COUNT, 1);
        for i in 0..patterns.len() {
            for j in (i + 1)..patterns.len() {
                assert_ne!(patterns[i].sh, patterns[j].sh);
            }
        }
    }
}

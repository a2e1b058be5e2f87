//! Corpus planning: face seeds, tone transfer, sample naming, manifests and
//! identity-disjoint train/validation splits.
//!
//! Rendering and manifest assembly are pure; writing PNGs is left to the
//! caller.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::facegen::{generate_face, tone_swatch, FaceAsset, ToneSpec};
use crate::image::{cumulative_histograms, histogram_match, ImageBuffer, Mask};
use crate::math;
use crate::relight::{shade, Label, LightPattern};
use crate::rng::SeededRng;

pub const MANIFEST_VERSION: u32 = 1;
pub const DEFAULT_FACE_SIZE: u32 = 128;
pub const DEFAULT_VAL_FRACTION: f64 = 0.2;
pub const MIN_SPLIT_GROUPS: usize = 5;
/// Tone of the base asset before transfer.
pub const BASE_TONE_T: f64 = 0.5;
const SWATCH_SIZE: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    /// Relative to the manifest's directory.
    pub image_path: String,
    pub face_seed: u64,
    pub tone_id: String,
    pub pattern_id: String,
    pub label: Label,
}

/// Generator settings recorded in the manifest.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthConfig {
    pub n_faces: usize,
    pub seed: u64,
    pub size: u32,
    pub tones: Vec<ToneSpec>,
    pub pattern_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelCounts {
    pub good: usize,
    pub bad: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatasetManifest {
    pub version: u32,
    pub config: SynthConfig,
    /// Per tone id.
    pub counts: BTreeMap<String, LabelCounts>,
    pub samples: Vec<Sample>,
}

impl DatasetManifest {
    pub fn new(config: SynthConfig, samples: Vec<Sample>) -> Self {
        let counts = tally(&samples);
        DatasetManifest {
            version: MANIFEST_VERSION,
            config,
            counts,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn counts_consistent(&self) -> bool {
        self.counts == tally(&self.samples)
    }

    pub fn face_seeds(&self) -> BTreeSet<u64> {
        self.samples.iter().map(|s| s.face_seed).collect()
    }

    /// Keeps the samples for which `keep` holds, with recomputed counts.
    pub fn filtered(&self, mut keep: impl FnMut(&Sample) -> bool) -> DatasetManifest {
        let samples = self.samples.iter().filter(|s| keep(s)).cloned().collect();
        DatasetManifest::new(self.config.clone(), samples)
    }
}

fn tally(samples: &[Sample]) -> BTreeMap<String, LabelCounts> {
    let mut counts: BTreeMap<String, LabelCounts> = BTreeMap::new();
    for s in samples {
        let c = counts.entry(s.tone_id.clone()).or_default();
        match s.label {
            Label::Good => c.good += 1,
            Label::Bad => c.bad += 1,
        }
    }
    counts
}

/// Face identities for a corpus seed.
pub fn face_seeds(n_faces: usize, seed: u64) -> Vec<u64> {
    let base = seed.wrapping_mul(1_000_000);
    (0..n_faces as u64).map(|i| base.wrapping_add(i)).collect()
}

pub fn sample_image_path(face_seed: u64, tone_id: &str, pattern_id: &str) -> String {
    format!("images/f{face_seed}_{tone_id}_{pattern_id}.png")
}

/// Directory holding a face's albedo, normals and masks.
pub fn face_dir(face_seed: u64) -> String {
    format!("faces/f{face_seed}")
}

pub fn base_tone() -> ToneSpec {
    ToneSpec::from_t(BASE_TONE_T).expect("constant in range")
}

/// Transfers `tone` onto the face region by histogram matching against a
/// noisy swatch of the tone's color. Geometry is unchanged.
pub fn retone(base: &FaceAsset, tone: &ToneSpec) -> Result<FaceAsset> {
    let swatch = tone_swatch(tone, SWATCH_SIZE, base.seed);
    let reference = cumulative_histograms(&swatch, &Mask::full(SWATCH_SIZE, SWATCH_SIZE))?;
    let albedo = histogram_match(&base.albedo, &base.region_mask(), &reference)?;
    base.with_albedo(albedo, tone.clone())
}

/// Base face for `face_seed` re-toned to each of `tones`, in order.
pub fn toned_faces(face_seed: u64, tones: &[ToneSpec], size: u32) -> Result<Vec<FaceAsset>> {
    let base = generate_face(face_seed, &base_tone(), size)?;
    tones.iter().map(|t| retone(&base, t)).collect()
}

pub fn render_sample(face: &FaceAsset, pattern: &LightPattern) -> ImageBuffer {
    shade(face, &pattern.sh)
}

/// Manifest for `n_faces × tones × patterns`, face-major then tone then
/// pattern. No pixels are rendered.
pub fn plan(n_faces: usize, tones: &[ToneSpec], patterns: &[LightPattern], seed: u64, size: u32) -> Result<DatasetManifest> {
    if patterns.is_empty() {
        return Err(Error::EmptyPatternList);
    }
    if tones.is_empty() {
        return Err(Error::EmptyInput);
    }
    if n_faces == 0 {
        return Err(Error::InvalidConfig("at least one face is required"));
    }
    let ids: BTreeSet<&str> = tones.iter().map(|t| t.label.as_str()).collect();
    if ids.len() != tones.len() {
        return Err(Error::InvalidConfig("tone labels must be unique"));
    }
    let mut samples = Vec::with_capacity(n_faces * tones.len() * patterns.len());
    for face_seed in face_seeds(n_faces, seed) {
        for tone in tones {
            for p in patterns {
                samples.push(Sample {
                    image_path: sample_image_path(face_seed, &tone.label, &p.id),
                    face_seed,
                    tone_id: tone.label.clone(),
                    pattern_id: p.id.clone(),
                    label: p.label,
                });
            }
        }
    }
    let config = SynthConfig {
        n_faces,
        seed,
        size,
        tones: tones.to_vec(),
        pattern_ids: patterns.iter().map(|p| p.id.clone()).collect(),
    };
    Ok(DatasetManifest::new(config, samples))
}

/// Identity-disjoint split: whole face groups go to validation. With every
/// face carrying the same tone × pattern grid, each (tone, label) stratum is
/// split in the same proportion.
pub fn split(manifest: &DatasetManifest, val_fraction: f64, seed: u64) -> Result<(DatasetManifest, DatasetManifest)> {
    if manifest.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::OutOfRange {
            name: "val_fraction",
            value: val_fraction,
        });
    }
    let mut groups: Vec<u64> = manifest.face_seeds().into_iter().collect();
    if groups.len() < MIN_SPLIT_GROUPS {
        return Err(Error::TooFewGroups {
            needed: MIN_SPLIT_GROUPS,
            found: groups.len(),
        });
    }
    let n_val = (math::round_half_up(groups.len() as f64 * val_fraction) as usize).clamp(1, groups.len() - 1);
    SeededRng::new(seed).shuffle(&mut groups);
    let val: BTreeSet<u64> = groups[..n_val].iter().copied().collect();
    Ok((
        manifest.filtered(|s| !val.contains(&s.face_seed)),
        manifest.filtered(|s| val.contains(&s.face_seed)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facegen::standard_tones;
    use crate::image::mean_color;
    use crate::relight::{sh_from_lights, ShCoefficients, SpotLight};
    use alloc::vec;

    fn patterns(n: usize) -> Vec<LightPattern> {
        (0..n)
            .map(|i| LightPattern {
                id: format!("p{i:03}"),
                lights: vec![SpotLight::from_angles(0.0, 0.0, 1.0)],
                ambient: 0.25,
                sh: sh_from_lights(&[SpotLight::from_angles(0.0, 0.0, 1.0)], 0.25).unwrap(),
                label: if i % 3 == 0 { Label::Good } else { Label::Bad },
            })
            .collect()
    }

    #[test]
    fn plan_is_the_full_product() {
        let pats = patterns(10);
        let m = plan(2, &standard_tones(), &pats, 1, 96).unwrap();
        assert_eq!(m.len(), 80);
        assert!(m.counts_consistent());
        for s in &m.samples {
            let p = pats.iter().find(|p| p.id == s.pattern_id).unwrap();
            assert_eq!(s.label, p.label);
        }
        // Label balance is tone-independent.
        let n_good = pats.iter().filter(|p| p.label.is_good()).count();
        for c in m.counts.values() {
            assert_eq!(c.good, 2 * n_good);
            assert_eq!(c.bad, 2 * (10 - n_good));
        }
        assert_eq!(m.samples[0].image_path, "images/f1000000_t010_p000.png");
    }

    #[test]
    fn plan_errors() {
        let tones = standard_tones();
        assert_eq!(plan(2, &tones, &[], 0, 96), Err(Error::EmptyPatternList));
        assert_eq!(plan(2, &[], &patterns(2), 0, 96), Err(Error::EmptyInput));
        assert!(plan(0, &tones, &patterns(2), 0, 96).is_err());
    }

    #[test]
    fn split_is_identity_disjoint_and_deterministic() {
        let m = plan(10, &standard_tones(), &patterns(6), 3, 96).unwrap();
        let (train, val) = split(&m, 0.2, 11).unwrap();
        assert_eq!(val.face_seeds().len(), 2);
        assert_eq!(train.face_seeds().len(), 8);
        assert!(train.face_seeds().is_disjoint(&val.face_seeds()));
        assert_eq!(train.len() + val.len(), m.len());
        assert!(train.counts_consistent() && val.counts_consistent());
        assert_eq!((train.clone(), val.clone()), split(&m, 0.2, 11).unwrap());
        let (_, val2) = split(&m, 0.2, 12).unwrap();
        assert_eq!(val2.len(), val.len());
    }

    #[test]
    fn split_needs_five_faces() {
        let m = plan(4, &standard_tones(), &patterns(2), 3, 96).unwrap();
        assert_eq!(split(&m, 0.2, 0), Err(Error::TooFewGroups { needed: 5, found: 4 }));
    }

    #[test]
    fn retone_hits_the_target_color() {
        for tone in standard_tones() {
            let faces = toned_faces(17, core::slice::from_ref(&tone), 96).unwrap();
            let face = &faces[0];
            let mean = mean_color(&face.albedo, &face.region_mask()).unwrap();
            let target = tone.color();
            for (m, t) in mean.channels().iter().zip(target.channels()) {
                assert!((*m as i32 - t as i32).abs() <= 2, "{tone:?}: {mean:?} vs {target:?}");
            }
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let pats = patterns(1);
        let a = toned_faces(3, &standard_tones(), 80).unwrap();
        let b = toned_faces(3, &standard_tones(), 80).unwrap();
        assert_eq!(render_sample(&a[2], &pats[0]), render_sample(&b[2], &pats[0]));
        let flat = render_sample(&a[0], &LightPattern {
            sh: ShCoefficients::uniform(1.0),
            ..pats[0].clone()
        });
        assert_eq!(flat, a[0].albedo);
    }
}

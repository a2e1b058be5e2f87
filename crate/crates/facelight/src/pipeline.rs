//! Corpus synthesis on disk and manifest-driven training and evaluation.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use facelight_core::dataset::{face_dir, plan, split, toned_faces, render_sample, DatasetManifest, Sample};
use facelight_core::facegen::ToneSpec;
use facelight_core::illum::{
    extract_features, predict, train, ClassifierModel, FeatureVector, MetricsReport, TrainConfig, TrainOutcome,
};
use facelight_core::relight::{Label, LightPattern};
use facelight_core::Mask;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{read_json, write_json};
use crate::io::{read_image, read_mask, save_face, write_image, SKIN_MASK_FILE};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAIN_FILE: &str = "train.json";
pub const VAL_FILE: &str = "val.json";
/// Tones at or below this blend value count as dark.
pub const DARK_MAX_T: f64 = 0.3;
/// Tones at or above this blend value count as light.
pub const LIGHT_MIN_T: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub n_faces: usize,
    pub tones: Vec<ToneSpec>,
    pub seed: u64,
    pub size: u32,
    pub val_fraction: f64,
}

/// Renders every (face, tone, pattern) sample under `out_dir`, writes the
/// per-face geometry assets and the full, train and validation manifests.
pub fn synthesize(out_dir: &Path, patterns: &[LightPattern], opts: &SynthOptions) -> Result<DatasetManifest> {
    let manifest = plan(opts.n_faces, &opts.tones, patterns, opts.seed, opts.size)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let by_id: BTreeMap<&str, &LightPattern> = patterns.iter().map(|p| (p.id.as_str(), p)).collect();
    let seeds: Vec<u64> = manifest.face_seeds().into_iter().collect();

    seeds.par_iter().try_for_each(|&face_seed| -> Result<()> {
        let faces = toned_faces(face_seed, &opts.tones, opts.size)?;
        // Geometry is shared by all tones; the stored albedo is the first tone's.
        save_face(&out_dir.join(face_dir(face_seed)), &faces[0])?;
        let jobs: Vec<(&Sample, usize)> = manifest
            .samples
            .iter()
            .filter(|s| s.face_seed == face_seed)
            .map(|s| {
                let tone_idx = opts.tones.iter().position(|t| t.label == s.tone_id).expect("planned tone");
                (s, tone_idx)
            })
            .collect();
        jobs.par_iter().try_for_each(|(s, tone_idx)| {
            let img = render_sample(&faces[*tone_idx], by_id[s.pattern_id.as_str()]);
            write_image(&out_dir.join(&s.image_path), &img)
        })
    })?;

    write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
    if seeds.len() >= facelight_core::dataset::MIN_SPLIT_GROUPS {
        let (train_m, val_m) = split(&manifest, opts.val_fraction, opts.seed)?;
        write_json(&out_dir.join(TRAIN_FILE), &train_m)?;
        write_json(&out_dir.join(VAL_FILE), &val_m)?;
    }
    Ok(manifest)
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let m: DatasetManifest = read_json(path)?;
    if m.version != facelight_core::dataset::MANIFEST_VERSION {
        return Err(Error::format(path, format!("unsupported manifest version {}", m.version)));
    }
    if !m.counts_consistent() {
        return Err(Error::format(path, "counts disagree with samples"));
    }
    Ok(m)
}

fn manifest_dir(path: &Path) -> &Path {
    path.parent().unwrap_or_else(|| Path::new("."))
}

/// A sample with its extracted features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSample {
    pub sample: Sample,
    pub features: FeatureVector,
}

/// Loads every image of a manifest and extracts features over its face's
/// skin mask.
pub fn manifest_features(manifest_path: &Path) -> Result<(DatasetManifest, Vec<FeatureSample>)> {
    let manifest = read_manifest(manifest_path)?;
    let root = manifest_dir(manifest_path);
    let masks: BTreeMap<u64, Mask> = manifest
        .face_seeds()
        .into_par_iter()
        .map(|seed| Ok((seed, read_mask(&root.join(face_dir(seed)).join(SKIN_MASK_FILE))?)))
        .collect::<Result<_>>()?;
    let samples = manifest
        .samples
        .par_iter()
        .map(|s| {
            let img = read_image(&root.join(&s.image_path))?;
            let features = extract_features(&img, &masks[&s.face_seed])?;
            Ok(FeatureSample {
                sample: s.clone(),
                features,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, samples))
}

pub fn train_manifest(manifest_path: &Path, config: &TrainConfig) -> Result<TrainOutcome> {
    let (_, samples) = manifest_features(manifest_path)?;
    let data: Vec<(FeatureVector, Label)> = samples.iter().map(|s| (s.features, s.sample.label)).collect();
    Ok(train(&data, config)?)
}

/// Overall metrics plus per-tone and dark/light breakdowns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub overall: MetricsReport,
    pub per_tone: BTreeMap<String, MetricsReport>,
    pub dark_tones: Option<MetricsReport>,
    pub light_tones: Option<MetricsReport>,
    /// |sensitivity(dark) − sensitivity(light)| when both groups exist.
    pub sensitivity_gap: Option<f64>,
}

pub fn evaluate_samples(model: &ClassifierModel, samples: &[FeatureSample], tones: &[ToneSpec]) -> EvalReport {
    let tone_t: BTreeMap<&str, f64> = tones.iter().map(|t| (t.label.as_str(), t.t)).collect();
    let pairs: Vec<(&Sample, Label, Label)> = samples
        .iter()
        .map(|s| (&s.sample, s.sample.label, predict(model, &s.features).0))
        .collect();
    let metrics = |keep: &dyn Fn(&Sample) -> bool| {
        let chosen: Vec<(Label, Label)> = pairs.iter().filter(|(s, ..)| keep(s)).map(|(_, t, p)| (*t, *p)).collect();
        (!chosen.is_empty()).then(|| MetricsReport::from_pairs(chosen))
    };
    let overall = metrics(&|_| true).unwrap_or_default();
    let per_tone = samples
        .iter()
        .map(|s| s.sample.tone_id.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .filter_map(|id| metrics(&|s| s.tone_id == id).map(|m| (id, m)))
        .collect();
    let t_of = |s: &Sample| tone_t.get(s.tone_id.as_str()).copied();
    let dark_tones = metrics(&|s| t_of(s).is_some_and(|t| t <= DARK_MAX_T));
    let light_tones = metrics(&|s| t_of(s).is_some_and(|t| t >= LIGHT_MIN_T));
    let sensitivity_gap = match (&dark_tones, &light_tones) {
        (Some(d), Some(l)) => Some((d.sensitivity - l.sensitivity).abs()),
        _ => None,
    };
    EvalReport {
        overall,
        per_tone,
        dark_tones,
        light_tones,
        sensitivity_gap,
    }
}

pub fn evaluate_manifest(model: &ClassifierModel, manifest_path: &Path) -> Result<EvalReport> {
    let (manifest, samples) = manifest_features(manifest_path)?;
    if samples.is_empty() {
        return Err(facelight_core::Error::EmptyInput.into());
    }
    Ok(evaluate_samples(model, &samples, &manifest.config.tones))
}

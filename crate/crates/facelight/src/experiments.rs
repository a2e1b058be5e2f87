//! Skin-tone variance across lighting and shade counts within distance
//! thresholds, with plain-text tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use facelight_core::dataset::{face_dir, toned_faces};
use facelight_core::facegen::ToneSpec;
use facelight_core::illum::{extract_features, predict, ClassifierModel};
use facelight_core::relight::{shade, LightPattern, ShCoefficients};
use facelight_core::shade::{
    estimate_skin_tone, threshold_report, variance_report, Catalog, EstimateGroups, SkinEstimate, ThresholdReport,
    VarianceReport,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{read_image, read_mask, NECK_MASK_FILE, SKIN_MASK_FILE};
use crate::pipeline::read_manifest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityVariance {
    pub identity: String,
    pub face_seed: u64,
    pub best: SkinEstimate,
    pub report: VarianceReport,
    /// Bad mean over Good mean.
    pub ratio: f64,
}

/// One identity per tone, rendered under every pattern. The best photo is
/// the identity-lighting render; the rest are grouped by pattern label.
pub fn synthetic_variance(tones: &[ToneSpec], patterns: &[LightPattern], seed: u64, size: u32) -> Result<Vec<IdentityVariance>> {
    tones
        .par_iter()
        .enumerate()
        .map(|(i, tone)| {
            let face_seed = seed.wrapping_add(i as u64);
            let face = toned_faces(face_seed, std::slice::from_ref(tone), size)?.remove(0);
            let estimate = |img| estimate_skin_tone(&img, &face.skin_mask, &face.neck_mask);
            let best = estimate(shade(&face, &ShCoefficients::uniform(1.0)))?.with_source("identity");
            let rest = patterns
                .iter()
                .map(|p| Ok(estimate(shade(&face, &p.sh))?.with_source(p.id.clone()).with_label(p.label)))
                .collect::<Result<Vec<_>>>()?;
            let report = variance_report(&rest, &best)?;
            Ok(IdentityVariance {
                identity: tone.label.clone(),
                face_seed,
                best,
                ratio: report.ratio(),
                report,
            })
        })
        .collect()
}

/// Index of the highest probability; the first wins ties.
pub fn best_by_probability(probabilities: &[f64]) -> Option<usize> {
    probabilities
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &p)| match best {
            Some((_, bp)) if bp >= p => best,
            _ => Some((i, p)),
        })
        .map(|(i, _)| i)
}

/// Skin estimates for every image of a manifest, labeled by the model's
/// verdict when one is given and by the manifest label otherwise. Each
/// estimate carries its Good probability when a model is used.
pub fn manifest_estimates(manifest_path: &Path, model: Option<&ClassifierModel>) -> Result<Vec<(SkinEstimate, Option<f64>, u64, String)>> {
    let manifest = read_manifest(manifest_path)?;
    let root = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let masks: BTreeMap<u64, _> = manifest
        .face_seeds()
        .into_par_iter()
        .map(|seed| {
            let dir = root.join(face_dir(seed));
            Ok((seed, (read_mask(&dir.join(SKIN_MASK_FILE))?, read_mask(&dir.join(NECK_MASK_FILE))?)))
        })
        .collect::<Result<_>>()?;
    manifest
        .samples
        .par_iter()
        .map(|s| {
            let img = read_image(&root.join(&s.image_path))?;
            let (skin, neck) = &masks[&s.face_seed];
            let est = estimate_skin_tone(&img, skin, neck)?.with_source(s.image_path.clone());
            let (label, prob) = match model {
                Some(m) => {
                    let (label, p) = predict(m, &extract_features(&img, skin)?);
                    (label, Some(p))
                }
                None => (s.label, None),
            };
            Ok((est.with_label(label), prob, s.face_seed, s.tone_id.clone()))
        })
        .collect()
}

/// Variance per (face, tone) identity of a manifest; the best photo is the
/// render the model scores most likely Good.
pub fn manifest_variance(manifest_path: &Path, model: &ClassifierModel) -> Result<Vec<IdentityVariance>> {
    let mut groups: BTreeMap<(u64, String), Vec<(SkinEstimate, f64)>> = BTreeMap::new();
    for (est, prob, seed, tone) in manifest_estimates(manifest_path, Some(model))? {
        groups.entry((seed, tone)).or_default().push((est, prob.unwrap_or(0.0)));
    }
    groups
        .into_iter()
        .map(|((face_seed, tone), mut items)| {
            let probs: Vec<f64> = items.iter().map(|(_, p)| *p).collect();
            let best_idx = best_by_probability(&probs).expect("groups are non-empty");
            let (best, _) = items.remove(best_idx);
            let rest: Vec<SkinEstimate> = items.into_iter().map(|(e, _)| e).collect();
            let report = variance_report(&rest, &best)?;
            Ok(IdentityVariance {
                identity: format!("f{face_seed}_{tone}"),
                face_seed,
                best,
                ratio: report.ratio(),
                report,
            })
        })
        .collect()
}

pub fn manifest_threshold_report(
    catalog: &Catalog,
    manifest_path: &Path,
    model: Option<&ClassifierModel>,
    thresholds: &[f64],
) -> Result<ThresholdReport> {
    let estimates = manifest_estimates(manifest_path, model)?;
    let groups = EstimateGroups::from_estimates(estimates.iter().map(|(e, ..)| e));
    Ok(threshold_report(catalog, &groups, thresholds))
}

fn cell(mean: f64, std: f64) -> String {
    format!("{mean:.2}±{std:.1}")
}

pub fn variance_table(rows: &[IdentityVariance]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:>14} {:>14} {:>14} {:>7}", "identity", "good", "bad", "all", "ratio");
    for r in rows {
        let rep = &r.report;
        let _ = writeln!(
            out,
            "{:<16} {:>14} {:>14} {:>14} {:>7.2}",
            r.identity,
            cell(rep.good.mean, rep.good.std),
            cell(rep.bad.mean, rep.bad.std),
            cell(rep.all.mean, rep.all.std),
            r.ratio
        );
    }
    out
}

pub fn threshold_table(report: &ThresholdReport) -> String {
    let mut out = String::new();
    let mut header = format!("{:<12} {:>7}", "product", "shades");
    for group in ["good", "bad", "all", "overlap"] {
        for t in &report.thresholds {
            header.push_str(&format!(" {:>12}", format!("{group}<{t}")));
        }
    }
    let _ = writeln!(out, "{header}");
    for p in &report.products {
        let mut line = format!("{:<12} {:>7}", p.product_id, p.n_shades);
        for counts in [&p.good, &p.bad, &p.all, &p.overlap] {
            for c in counts {
                line.push_str(&format!(" {c:>12}"));
            }
        }
        let _ = writeln!(out, "{line}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_probability_prefers_first_of_ties() {
        assert_eq!(best_by_probability(&[]), None);
        assert_eq!(best_by_probability(&[0.2, 0.9, 0.9, 0.1]), Some(1));
        assert_eq!(best_by_probability(&[0.7]), Some(0));
    }
}

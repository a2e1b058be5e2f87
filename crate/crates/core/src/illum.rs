//! Illumination-quality classifier: handcrafted shading features and a
//! logistic model trained with class-weighted cross-entropy.

use alloc::vec;
use alloc::vec::Vec;

use crate::color::{lightness_from_luminance, relative_luminance};
use crate::error::{Error, Result};
use crate::image::{ImageBuffer, Mask};
use crate::math;
use crate::relight::Label;
use crate::rng::SeededRng;

pub const GRID: usize = 5;
pub const FEATURE_COUNT: usize = GRID * GRID + 2;
pub const MIN_MASK_PIXELS: usize = GRID * GRID;
/// Face crop margin on each side, as a fraction of the mask's bounding box.
pub const CROP_MARGIN: f64 = 0.05;
pub const DECISION_THRESHOLD: f64 = 0.5;
/// Floor applied to log arguments in the loss.
pub const LOG_FLOOR: f64 = 1e-12;

/// 25 grid lightness means, global lightness std, signed left−right
/// asymmetry; all in L*/100 units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn grid(&self) -> &[f64] {
        &self.0[..GRID * GRID]
    }

    pub fn std(&self) -> f64 {
        self.0[GRID * GRID]
    }

    pub fn asymmetry(&self) -> f64 {
        self.0[GRID * GRID + 1]
    }
}

/// Crop box `(x0, y0, x1, y1)` around the mask, grown by [`CROP_MARGIN`].
pub fn face_crop(mask: &Mask) -> Option<(u32, u32, u32, u32)> {
    let (x0, y0, x1, y1) = mask.bounding_box()?;
    let mx = math::round_half_up((x1 - x0) as f64 * CROP_MARGIN) as u32;
    let my = math::round_half_up((y1 - y0) as f64 * CROP_MARGIN) as u32;
    Some((
        x0.saturating_sub(mx),
        y0.saturating_sub(my),
        (x1 + mx).min(mask.width()),
        (y1 + my).min(mask.height()),
    ))
}

pub fn extract_features(img: &ImageBuffer, mask: &Mask) -> Result<FeatureVector> {
    if img.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: mask.dims(),
        });
    }
    if mask.count() < MIN_MASK_PIXELS {
        return Err(Error::EmptyMask);
    }
    let (x0, y0, x1, y1) = face_crop(mask).ok_or(Error::EmptyMask)?;
    let (cw, ch) = ((x1 - x0) as usize, (y1 - y0) as usize);
    let mid_x2 = (x0 + x1) as usize; // twice the crop's center column

    let mut cell_sum = [0.0; GRID * GRID];
    let mut cell_n = [0usize; GRID * GRID];
    let (mut mean, mut m2, mut n) = (0.0, 0.0, 0usize);
    let (mut left, mut n_left, mut right, mut n_right) = (0.0, 0usize, 0.0, 0usize);
    for y in y0..y1 {
        for x in x0..x1 {
            if !mask.get(x, y) {
                continue;
            }
            let l = lightness_from_luminance(relative_luminance(img.get(x, y)));
            let gx = (x - x0) as usize * GRID / cw;
            let gy = (y - y0) as usize * GRID / ch;
            cell_sum[gy * GRID + gx] += l;
            cell_n[gy * GRID + gx] += 1;
            n += 1;
            let d = l - mean;
            mean += d / n as f64;
            m2 += d * (l - mean);
            // Compare pixel centers against the crop center in half-pixels.
            let px2 = 2 * x as usize + 1;
            if px2 < mid_x2 {
                left += l;
                n_left += 1;
            } else if px2 > mid_x2 {
                right += l;
                n_right += 1;
            }
        }
    }
    let var = m2 / n as f64;

    let mut f = [0.0; FEATURE_COUNT];
    for i in 0..GRID * GRID {
        let cell_mean = if cell_n[i] > 0 { cell_sum[i] / cell_n[i] as f64 } else { mean };
        f[i] = cell_mean / 100.0;
    }
    f[GRID * GRID] = math::sqrt(var) / 100.0;
    f[GRID * GRID + 1] = if n_left > 0 && n_right > 0 {
        (left / n_left as f64 - right / n_right as f64) / 100.0
    } else {
        0.0
    };
    Ok(FeatureVector(f))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// `None` resolves to #Bad / #Good of the training set.
    pub good_class_weight: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 64,
            learning_rate: 1.0,
            good_class_weight: None,
            seed: 0,
        }
    }
}

/// Per-feature standardization fitted on the training set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Normalization {
    pub mean: [f64; FEATURE_COUNT],
    pub scale: [f64; FEATURE_COUNT],
}

impl Normalization {
    pub fn identity() -> Self {
        Normalization {
            mean: [0.0; FEATURE_COUNT],
            scale: [1.0; FEATURE_COUNT],
        }
    }

    pub fn fit(features: &[FeatureVector]) -> Self {
        let n = features.len().max(1) as f64;
        let mut mean = [0.0; FEATURE_COUNT];
        for f in features {
            for (m, v) in mean.iter_mut().zip(f.0) {
                *m += v / n;
            }
        }
        let mut scale = [0.0; FEATURE_COUNT];
        for f in features {
            for i in 0..FEATURE_COUNT {
                scale[i] += (f.0[i] - mean[i]) * (f.0[i] - mean[i]) / n;
            }
        }
        for s in scale.iter_mut() {
            *s = math::sqrt(*s);
            if *s < 1e-9 {
                *s = 1.0;
            }
        }
        Normalization { mean, scale }
    }

    pub fn apply(&self, f: &FeatureVector) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        for i in 0..FEATURE_COUNT {
            out[i] = (f.0[i] - self.mean[i]) / self.scale[i];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassifierModel {
    pub weights: [f64; FEATURE_COUNT],
    pub bias: f64,
    pub normalization: Normalization,
    /// Snapshot with `good_class_weight` resolved.
    pub train_config: TrainConfig,
}

impl ClassifierModel {
    pub fn zeros() -> Self {
        ClassifierModel {
            weights: [0.0; FEATURE_COUNT],
            bias: 0.0,
            normalization: Normalization::identity(),
            train_config: TrainConfig {
                good_class_weight: Some(1.0),
                ..TrainConfig::default()
            },
        }
    }

    pub fn good_class_weight(&self) -> f64 {
        self.train_config.good_class_weight.unwrap_or(1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    pub fn logit(&self, f: &FeatureVector) -> f64 {
        let x = self.normalization.apply(f);
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn probability(&self, f: &FeatureVector) -> f64 {
        sigmoid(self.logit(f))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + math::exp(-z))
    } else {
        let e = math::exp(z);
        e / (1.0 + e)
    }
}

fn target(label: Label) -> f64 {
    if label.is_good() {
        1.0
    } else {
        0.0
    }
}

fn class_weight(label: Label, good_weight: f64) -> f64 {
    if label.is_good() {
        good_weight
    } else {
        1.0
    }
}

/// Mean class-weighted binary cross-entropy over `batch`.
pub fn weighted_ce_loss(model: &ClassifierModel, batch: &[(FeatureVector, Label)]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let gw = model.good_class_weight();
    let total: f64 = batch
        .iter()
        .map(|(f, label)| {
            let p = model.probability(f);
            let y = target(*label);
            let ll = y * math::ln(p.max(LOG_FLOOR)) + (1.0 - y) * math::ln((1.0 - p).max(LOG_FLOOR));
            -class_weight(*label, gw) * ll
        })
        .sum();
    total / batch.len() as f64
}

/// Analytic gradient of [`weighted_ce_loss`] with respect to the weights
/// (in normalized feature space) and the bias.
pub fn loss_gradient(model: &ClassifierModel, batch: &[(FeatureVector, Label)]) -> ([f64; FEATURE_COUNT], f64) {
    let mut gw = [0.0; FEATURE_COUNT];
    let mut gb = 0.0;
    if batch.is_empty() {
        return (gw, gb);
    }
    let good_weight = model.good_class_weight();
    for (f, label) in batch {
        let x = model.normalization.apply(f);
        let p = sigmoid(model.bias + model.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        // d(-log p)/dz = p - 1 and d(-log(1-p))/dz = p; zero where the floor binds.
        let dz = if label.is_good() {
            if p > LOG_FLOOR {
                p - 1.0
            } else {
                0.0
            }
        } else if 1.0 - p > LOG_FLOOR {
            p
        } else {
            0.0
        };
        let scale = class_weight(*label, good_weight) * dz;
        for i in 0..FEATURE_COUNT {
            gw[i] += scale * x[i];
        }
        gb += scale;
    }
    let n = batch.len() as f64;
    (gw.map(|g| g / n), gb / n)
}

/// Trained model plus the full-training-set loss after each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: ClassifierModel,
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch gradient descent on the weighted loss. Deterministic for a
/// fixed `config.seed`.
pub fn train(samples: &[(FeatureVector, Label)], config: &TrainConfig) -> Result<TrainOutcome> {
    if config.epochs == 0 {
        return Err(Error::InvalidConfig("epochs must be at least 1"));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be at least 1"));
    }
    let n_good = samples.iter().filter(|(_, l)| l.is_good()).count();
    let n_bad = samples.len() - n_good;
    if n_good == 0 || n_bad == 0 {
        return Err(Error::SingleClassData);
    }
    let good_weight = config.good_class_weight.unwrap_or(n_bad as f64 / n_good as f64);
    if !(good_weight.is_finite() && good_weight > 0.0) {
        return Err(Error::InvalidConfig("good class weight must be positive"));
    }

    let features: Vec<FeatureVector> = samples.iter().map(|(f, _)| *f).collect();
    let mut model = ClassifierModel {
        weights: [0.0; FEATURE_COUNT],
        bias: 0.0,
        normalization: Normalization::fit(&features),
        train_config: TrainConfig {
            good_class_weight: Some(good_weight),
            ..config.clone()
        },
    };

    let mut rng = SeededRng::new(config.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut batch = Vec::with_capacity(config.batch_size);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| samples[i]));
            let (gw, gb) = loss_gradient(&model, &batch);
            for (w, g) in model.weights.iter_mut().zip(gw) {
                *w -= config.learning_rate * g;
            }
            model.bias -= config.learning_rate * gb;
        }
        epoch_losses.push(weighted_ce_loss(&model, samples));
    }
    Ok(TrainOutcome { model, epoch_losses })
}

pub fn predict(model: &ClassifierModel, features: &FeatureVector) -> (Label, f64) {
    predict_with_threshold(model, features, DECISION_THRESHOLD)
}

/// Thresholding only relabels; the probability does not depend on it.
pub fn predict_with_threshold(model: &ClassifierModel, features: &FeatureVector, threshold: f64) -> (Label, f64) {
    let p = model.probability(features);
    let label = if p >= threshold { Label::Good } else { Label::Bad };
    (label, p)
}

/// Confusion counts and rates with `Good` as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: usize,
}

impl MetricsReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        MetricsReport {
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
            tp,
            fp,
            tn,
            fn_,
        }
    }

    /// Tallies `(truth, predicted)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (truth, pred) in pairs {
            match (truth, pred) {
                (Label::Good, Label::Good) => tp += 1,
                (Label::Bad, Label::Good) => fp += 1,
                (Label::Bad, Label::Bad) => tn += 1,
                (Label::Good, Label::Bad) => fn_ += 1,
            }
        }
        MetricsReport::from_counts(tp, fp, tn, fn_)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Evaluates `model` on labeled feature vectors.
pub fn evaluate(model: &ClassifierModel, samples: &[(FeatureVector, Label)]) -> MetricsReport {
    MetricsReport::from_pairs(samples.iter().map(|(f, truth)| (*truth, predict(model, f).0)))
}

/// Two well-separated Gaussian blobs in feature space, for training checks.
pub fn separable_blobs(n_per_class: usize, seed: u64) -> Vec<(FeatureVector, Label)> {
    let mut rng = SeededRng::new(seed);
    let mut gauss = move || {
        // Box–Muller; u1 in (0, 1].
        let u1 = 1.0 - rng.unit();
        let u2 = rng.unit();
        math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
    };
    let sigma = 0.02;
    let mut out = vec![];
    for i in 0..2 * n_per_class {
        let label = if i % 2 == 0 { Label::Good } else { Label::Bad };
        // Class centers differ by 0.3 (15σ) along every feature.
        let center = if label.is_good() { 0.65 } else { 0.35 };
        let mut f = [0.0; FEATURE_COUNT];
        for v in f.iter_mut() {
            *v = center + sigma * gauss();
        }
        out.push((FeatureVector(f), label));
    }
    out
}

//! Foundation shades: product color extraction, skin-tone estimates,
//! closest-match ranking and the grouped distance reports.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::color::{ciede2000, srgb_to_lab, DeltaE, Lab, Rgb8};
use crate::error::{Error, Result};
use crate::facegen::blend_tone;
use crate::image::{kmeans_palette, mean_color, remove_background, ImageBuffer, Mask, DEFAULT_NEAR_WHITE};
use crate::math;
use crate::relight::Label;
use crate::rng::SeededRng;

/// "Very close" and "similar" distance bands.
pub const REPORT_THRESHOLDS: [f64; 2] = [2.0, 5.0];
pub const DEFAULT_RECOMMEND_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProductShade {
    pub product_id: String,
    pub shade_id: String,
    pub name: String,
    pub color: Rgb8,
    pub lab: Lab,
}

impl ProductShade {
    pub fn new(product_id: impl Into<String>, shade_id: impl Into<String>, name: impl Into<String>, color: Rgb8) -> Self {
        ProductShade {
            product_id: product_id.into(),
            shade_id: shade_id.into(),
            name: name.into(),
            color,
            lab: srgb_to_lab(color),
        }
    }

    fn key(&self) -> (&str, &str) {
        (&self.product_id, &self.shade_id)
    }
}

/// Shades with unique `(product_id, shade_id)`, kept in load order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Catalog {
    shades: Vec<ProductShade>,
}

impl Catalog {
    pub fn new(shades: Vec<ProductShade>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for s in &shades {
            if !seen.insert(s.key()) {
                return Err(Error::DuplicateShade {
                    product_id: s.product_id.clone(),
                    shade_id: s.shade_id.clone(),
                });
            }
        }
        Ok(Catalog { shades })
    }

    pub fn shades(&self) -> &[ProductShade] {
        &self.shades
    }

    pub fn len(&self) -> usize {
        self.shades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shades.is_empty()
    }

    /// Product ids in sorted order.
    pub fn product_ids(&self) -> Vec<&str> {
        let ids: BTreeSet<&str> = self.shades.iter().map(|s| s.product_id.as_str()).collect();
        ids.into_iter().collect()
    }

    pub fn product(&self, product_id: &str) -> Option<Catalog> {
        let shades: Vec<ProductShade> = self.shades.iter().filter(|s| s.product_id == product_id).cloned().collect();
        (!shades.is_empty()).then_some(Catalog { shades })
    }
}

/// HSV bounds of the foundation color range; hue in degrees.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColorRange {
    pub hue_min: f64,
    pub hue_max: f64,
    pub saturation_min: f64,
    pub value_min: f64,
    pub value_max: f64,
}

impl Default for ColorRange {
    fn default() -> Self {
        ColorRange {
            hue_min: 10.0,
            hue_max: 50.0,
            saturation_min: 0.15,
            value_min: 0.1,
            value_max: 0.95,
        }
    }
}

impl ColorRange {
    pub fn contains(&self, c: Rgb8) -> bool {
        let (h, s, v) = rgb_to_hsv(c);
        (self.hue_min..=self.hue_max).contains(&h) && s >= self.saturation_min && (self.value_min..=self.value_max).contains(&v)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExtractConfig {
    pub range: ColorRange,
    pub near_white: u8,
    pub k: usize,
    pub seed: u64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            range: ColorRange::default(),
            near_white: DEFAULT_NEAR_WHITE,
            k: 5,
            seed: 0,
        }
    }
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv(c: Rgb8) -> (f64, f64, f64) {
    let [r, g, b] = c.channels().map(|v| v as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / d)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    let h = if h < 0.0 { h + 360.0 } else { h };
    let s = if max == 0.0 { 0.0 } else { d / max };
    (h, s, max)
}

pub fn extract_product_color(img: &ImageBuffer) -> Result<Rgb8> {
    extract_product_color_with(img, &ExtractConfig::default())
}

/// Background removal, color-range filter, then the largest K-means cluster.
pub fn extract_product_color_with(img: &ImageBuffer, cfg: &ExtractConfig) -> Result<Rgb8> {
    let fg = remove_background(img, cfg.near_white);
    if fg.is_empty() {
        return Err(Error::NoForeground);
    }
    let pixels: Vec<Rgb8> = img
        .pixels()
        .iter()
        .zip(fg.bits())
        .filter(|(c, &keep)| keep && cfg.range.contains(**c))
        .map(|(c, _)| *c)
        .collect();
    if pixels.is_empty() {
        return Err(Error::NoInRangePixels);
    }
    let palette = kmeans_palette(&pixels, cfg.k, cfg.seed)?;
    Ok(palette[0].centroid)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SkinEstimate {
    pub color: Rgb8,
    pub lab: Lab,
    pub source: Option<String>,
    pub label: Option<Label>,
}

impl SkinEstimate {
    pub fn from_color(color: Rgb8) -> Self {
        SkinEstimate {
            color,
            lab: srgb_to_lab(color),
            source: None,
            label: None,
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }
}

/// Mean color over face ∪ neck.
pub fn estimate_skin_tone(img: &ImageBuffer, skin_mask: &Mask, neck_mask: &Mask) -> Result<SkinEstimate> {
    let region = skin_mask.union(neck_mask)?;
    Ok(SkinEstimate::from_color(mean_color(img, &region)?))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ShadeMatch {
    pub shade: ProductShade,
    pub distance: DeltaE,
    pub within_threshold: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Recommendation {
    pub threshold: DeltaE,
    pub matches: Vec<ShadeMatch>,
}

impl Recommendation {
    pub fn within(&self) -> impl Iterator<Item = &ShadeMatch> {
        self.matches.iter().filter(|m| m.within_threshold)
    }
}

fn rank_order(a: &ShadeMatch, b: &ShadeMatch) -> Ordering {
    a.distance
        .0
        .total_cmp(&b.distance.0)
        .then_with(|| a.shade.key().cmp(&b.shade.key()))
}

/// Every shade ranked by ΔE00 to the estimate; ties by `(product_id, shade_id)`.
pub fn recommend(catalog: &Catalog, estimate: &SkinEstimate, threshold: DeltaE) -> Result<Recommendation> {
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog);
    }
    let mut matches: Vec<ShadeMatch> = catalog
        .shades()
        .iter()
        .map(|s| {
            let distance = ciede2000(estimate.lab, s.lab);
            ShadeMatch {
                shade: s.clone(),
                distance,
                within_threshold: distance.0 < threshold.0,
            }
        })
        .collect();
    matches.sort_by(rank_order);
    Ok(Recommendation { threshold, matches })
}

/// Estimates split by illumination verdict; "all" is their union.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimateGroups {
    pub good: Vec<Lab>,
    pub bad: Vec<Lab>,
}

impl EstimateGroups {
    pub fn from_estimates<'a>(estimates: impl IntoIterator<Item = &'a SkinEstimate>) -> Self {
        let mut g = EstimateGroups::default();
        for e in estimates {
            match e.label {
                Some(Label::Good) => g.good.push(e.lab),
                Some(Label::Bad) => g.bad.push(e.lab),
                None => {}
            }
        }
        g
    }
}

/// Shade counts per threshold, aligned with [`ThresholdReport::thresholds`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProductThresholdCounts {
    pub product_id: String,
    pub n_shades: usize,
    pub good: Vec<usize>,
    pub bad: Vec<usize>,
    pub all: Vec<usize>,
    /// Shades matched by both the Good and the Bad group.
    pub overlap: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdReport {
    pub thresholds: Vec<f64>,
    pub products: Vec<ProductThresholdCounts>,
}

/// Per product, the shades within `t` (strictly) of at least one estimate in
/// each group.
pub fn threshold_report(catalog: &Catalog, groups: &EstimateGroups, thresholds: &[f64]) -> ThresholdReport {
    // Closest estimate per shade and group; a shade is within t iff that
    // minimum is below t.
    let nearest = |shade: &ProductShade, labs: &[Lab]| {
        labs.iter()
            .map(|l| ciede2000(*l, shade.lab).0)
            .fold(f64::INFINITY, f64::min)
    };
    let mut by_product: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for s in catalog.shades() {
        by_product
            .entry(&s.product_id)
            .or_default()
            .push((nearest(s, &groups.good), nearest(s, &groups.bad)));
    }
    let products = by_product
        .into_iter()
        .map(|(pid, dists)| {
            let count = |pred: &dyn Fn(f64, f64, f64) -> bool| -> Vec<usize> {
                thresholds
                    .iter()
                    .map(|&t| dists.iter().filter(|(g, b)| pred(*g, *b, t)).count())
                    .collect()
            };
            ProductThresholdCounts {
                product_id: String::from(pid),
                n_shades: dists.len(),
                good: count(&|g, _, t| g < t),
                bad: count(&|_, b, t| b < t),
                all: count(&|g, b, t| g < t || b < t),
                overlap: count(&|g, b, t| g < t && b < t),
            }
        })
        .collect();
    ThresholdReport {
        thresholds: thresholds.to_vec(),
        products,
    }
}

/// Population mean and standard deviation of ΔE00 to the best estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl GroupStats {
    pub fn of(values: &[f64], group: &'static str) -> Result<GroupStats> {
        if values.is_empty() {
            return Err(Error::EmptyGroup(group));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(GroupStats {
            n: values.len(),
            mean,
            std: math::sqrt(var),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceReport {
    pub good: GroupStats,
    pub bad: GroupStats,
    pub all: GroupStats,
}

impl VarianceReport {
    /// Bad mean over Good mean.
    pub fn ratio(&self) -> f64 {
        self.bad.mean / self.good.mean
    }
}

/// ΔE00 of every estimate in `rest` to `best`, summarized per illumination
/// group. `rest` must not contain the best photo; unlabeled estimates only
/// count toward "all".
pub fn variance_report(rest: &[SkinEstimate], best: &SkinEstimate) -> Result<VarianceReport> {
    let mut good = Vec::new();
    let mut bad = Vec::new();
    let mut all = Vec::new();
    for e in rest {
        let d = ciede2000(e.lab, best.lab).0;
        match e.label {
            Some(Label::Good) => good.push(d),
            Some(Label::Bad) => bad.push(d),
            None => {}
        }
        all.push(d);
    }
    Ok(VarianceReport {
        good: GroupStats::of(&good, "good")?,
        bad: GroupStats::of(&bad, "bad")?,
        all: GroupStats::of(&all, "all")?,
    })
}

/// Seeded catalog of skin-like shades, `count` per product.
pub fn synthetic_catalog(products: &[(&str, usize)], seed: u64) -> Catalog {
    let mut rng = SeededRng::new(seed);
    let mut shades = Vec::new();
    for (pid, count) in products {
        for i in 0..*count {
            let base = blend_tone(rng.unit()).expect("unit interval");
            let mut jitter = |c: u8| (c as i32 + rng.range_i32(-6, 6)).clamp(0, 255) as u8;
            let color = Rgb8::new(jitter(base.r), jitter(base.g), jitter(base.b));
            shades.push(ProductShade::new(*pid, format!("s{i:02}"), format!("{pid} {i:02}"), color));
        }
    }
    Catalog::new(shades).expect("generated ids are unique")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facegen::{generate_face, ToneSpec};
    use crate::relight::{shade, ShCoefficients};
    use alloc::vec;
    use proptest::prelude::*;

    const BROWN: Rgb8 = Rgb8::new(150, 100, 70);

    fn swatch_on_white(w: u32, h: u32, fill: impl Fn(u32, u32) -> Option<Rgb8>) -> ImageBuffer {
        let mut img = ImageBuffer::new(w, h, Rgb8::WHITE);
        for y in 0..h {
            for x in 0..w {
                if let Some(c) = fill(x, y) {
                    img.set(x, y, c);
                }
            }
        }
        img
    }

    fn in_box(x: u32, y: u32) -> bool {
        (10..50).contains(&x) && (8..40).contains(&y)
    }

    #[test]
    fn hsv_of_brown() {
        let (h, s, v) = rgb_to_hsv(BROWN);
        assert!((h - 22.5).abs() < 1e-9);
        assert!((s - 80.0 / 150.0).abs() < 1e-12);
        assert!((v - 150.0 / 255.0).abs() < 1e-12);
        assert_eq!(rgb_to_hsv(Rgb8::gray(77)), (0.0, 0.0, 77.0 / 255.0));
    }

    #[test]
    fn uniform_brown_swatch() {
        let img = swatch_on_white(60, 48, |x, y| in_box(x, y).then_some(BROWN));
        let c = extract_product_color(&img).unwrap();
        for (a, b) in c.channels().iter().zip(BROWN.channels()) {
            assert!((*a as i32 - b as i32).abs() <= 1);
        }
    }

    #[test]
    fn majority_color_wins_over_smear() {
        let smear = Rgb8::new(90, 55, 35);
        // 80% brown, 20% darker smear on the right edge of the box.
        let img = swatch_on_white(60, 48, |x, y| in_box(x, y).then_some(if x >= 42 { smear } else { BROWN }));
        assert_eq!(extract_product_color(&img).unwrap(), BROWN);
    }

    #[test]
    fn extraction_errors() {
        assert_eq!(extract_product_color(&ImageBuffer::new(20, 20, Rgb8::WHITE)), Err(Error::NoForeground));
        let blue = swatch_on_white(20, 20, |x, y| (x > 5 && y > 5 && x < 15 && y < 15).then_some(Rgb8::new(30, 60, 200)));
        assert_eq!(extract_product_color(&blue), Err(Error::NoInRangePixels));
    }

    #[test]
    fn white_padding_changes_nothing() {
        let texture = |x: u32, y: u32| Rgb8::new(140 + (x % 7) as u8 * 3, 95 + (y % 5) as u8 * 2, 60 + ((x + y) % 4) as u8);
        let small = swatch_on_white(30, 30, |x, y| (x >= 5 && y >= 5 && x < 25 && y < 25).then(|| texture(x - 5, y - 5)));
        let big = swatch_on_white(90, 70, |x, y| (x >= 35 && y >= 20 && x < 55 && y < 40).then(|| texture(x - 35, y - 20)));
        assert_eq!(extract_product_color(&small).unwrap(), extract_product_color(&big).unwrap());
    }

    fn face(t: f64) -> crate::facegen::FaceAsset {
        generate_face(4, &ToneSpec::from_t(t).unwrap(), 96).unwrap()
    }

    #[test]
    fn estimate_under_identity_lighting() {
        let f = face(0.4);
        let lit = shade(&f, &ShCoefficients::uniform(1.0));
        let est = estimate_skin_tone(&lit, &f.skin_mask, &f.neck_mask).unwrap();
        for (a, b) in est.color.channels().iter().zip(f.tone.color().channels()) {
            assert!((*a as i32 - b as i32).abs() <= 5);
        }
        assert_eq!(est.lab, srgb_to_lab(est.color));
    }

    #[test]
    fn half_shadow_darkens_the_estimate() {
        let f = face(0.6);
        let mut img = f.albedo.clone();
        let cx = f.center_x();
        for y in 0..img.height() {
            for x in 0..img.width() {
                let s = if (x as f64 + 0.5) < cx { 1.0 } else { 0.4 };
                let lin = img.get(x, y).to_linear().map(|v| v * s);
                img.set(x, y, Rgb8::from_linear(lin));
            }
        }
        let lit = estimate_skin_tone(&f.albedo, &f.skin_mask, &f.neck_mask).unwrap();
        let shaded = estimate_skin_tone(&img, &f.skin_mask, &f.neck_mask).unwrap();
        assert!(shaded.lab.l < lit.lab.l - 5.0);
    }

    #[test]
    fn estimate_needs_pixels() {
        let img = ImageBuffer::new(8, 8, BROWN);
        assert_eq!(estimate_skin_tone(&img, &Mask::empty(8, 8), &Mask::empty(8, 8)), Err(Error::EmptyMask));
    }

    fn catalog() -> Catalog {
        let mut shades = Vec::new();
        for (p, n) in [("a", 6u8), ("b", 4), ("c", 5)] {
            for i in 0..n {
                let c = Rgb8::new(120 + 20 * i, 80 + 15 * i, 50 + 13 * i);
                shades.push(ProductShade::new(p, format!("s{i}"), format!("{p} {i}"), c));
            }
        }
        Catalog::new(shades).unwrap()
    }

    #[test]
    fn synthetic_catalog_shape() {
        let cat = synthetic_catalog(&[("x", 39), ("y", 12), ("z", 17)], 4);
        assert_eq!(cat.len(), 68);
        assert_eq!(cat.product("y").unwrap().len(), 12);
        assert_eq!(cat, synthetic_catalog(&[("x", 39), ("y", 12), ("z", 17)], 4));
    }

    #[test]
    fn duplicate_shades_are_rejected() {
        let s = ProductShade::new("p", "1", "x", BROWN);
        assert!(matches!(Catalog::new(vec![s.clone(), s]), Err(Error::DuplicateShade { .. })));
    }

    #[test]
    fn exact_match_ranks_first() {
        let cat = catalog();
        let target = cat.shades()[8].clone();
        let rec = recommend(&cat, &SkinEstimate::from_color(target.color), DeltaE(2.0)).unwrap();
        assert_eq!(rec.matches[0].distance.0, 0.0);
        // Identical colors exist in several products; the tie rule picks "a".
        assert_eq!(rec.matches[0].shade.product_id, "a");
        assert!(rec.matches[0].within_threshold);
        assert_eq!(rec.matches.len(), cat.len());
    }

    #[test]
    fn ranking_matches_brute_force() {
        let cat = catalog();
        let est = SkinEstimate::from_color(Rgb8::new(171, 121, 92));
        let rec = recommend(&cat, &est, DeltaE(5.0)).unwrap();
        let mut brute: Vec<(f64, &str, &str)> = cat
            .shades()
            .iter()
            .map(|s| (ciede2000(est.lab, s.lab).0, s.product_id.as_str(), s.shade_id.as_str()))
            .collect();
        brute.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got: Vec<(f64, &str, &str)> = rec
            .matches
            .iter()
            .map(|m| (m.distance.0, m.shade.product_id.as_str(), m.shade.shade_id.as_str()))
            .collect();
        assert_eq!(got, brute);
        for m in &rec.matches {
            assert_eq!(m.within_threshold, m.distance.0 < 5.0);
        }
    }

    #[test]
    fn empty_catalog() {
        let cat = Catalog::new(vec![]).unwrap();
        assert_eq!(recommend(&cat, &SkinEstimate::from_color(BROWN), DeltaE(5.0)), Err(Error::EmptyCatalog));
    }

    #[test]
    fn threshold_report_single_good_estimate() {
        let cat = catalog();
        let groups = EstimateGroups {
            good: vec![cat.shades()[2].lab],
            bad: vec![],
        };
        let rep = threshold_report(&cat, &groups, &REPORT_THRESHOLDS);
        let a = rep.products.iter().find(|p| p.product_id == "a").unwrap();
        assert!(a.good[0] >= 1);
        assert_eq!(a.bad, vec![0, 0]);
        assert_eq!(a.all, a.good);
        assert_eq!(a.overlap, vec![0, 0]);
        assert_eq!(a.n_shades, 6);
    }

    #[test]
    fn variance_of_identical_estimates_is_zero() {
        let best = SkinEstimate::from_color(BROWN);
        let rest = vec![best.clone().with_label(Label::Good), best.clone().with_label(Label::Bad)];
        let rep = variance_report(&rest, &best).unwrap();
        for g in [rep.good, rep.bad, rep.all] {
            assert_eq!((g.mean, g.std), (0.0, 0.0));
        }
    }

    #[test]
    fn variance_matches_recompute() {
        let best = SkinEstimate::from_color(BROWN);
        let colors = [(160, 110, 80), (100, 70, 50), (152, 101, 71), (60, 40, 30), (200, 150, 120)];
        let rest: Vec<SkinEstimate> = colors
            .iter()
            .enumerate()
            .map(|(i, &(r, g, b))| {
                let label = if i % 2 == 0 { Label::Good } else { Label::Bad };
                SkinEstimate::from_color(Rgb8::new(r, g, b)).with_label(label)
            })
            .collect();
        let rep = variance_report(&rest, &best).unwrap();
        let d: Vec<f64> = rest.iter().map(|e| ciede2000(e.lab, best.lab).0).collect();
        let good = [d[0], d[2], d[4]];
        let mean = good.iter().sum::<f64>() / 3.0;
        let std = math::sqrt(good.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0);
        assert!((rep.good.mean - mean).abs() < 1e-12);
        assert!((rep.good.std - std).abs() < 1e-12);
        assert_eq!(rep.all.n, 5);
        assert!(matches!(variance_report(&rest[..1], &best), Err(Error::EmptyGroup("bad"))));
    }

    fn rgb() -> impl Strategy<Value = Rgb8> {
        (any::<u8>(), any::<u8>(), any::<u8>()).prop_map(|(r, g, b)| Rgb8::new(r, g, b))
    }

    proptest! {
        #[test]
        fn recommend_ignores_catalog_order(colors in proptest::collection::vec(rgb(), 1..30), probe in rgb(), rot in 0usize..30) {
            let shades: Vec<ProductShade> = colors
                .iter()
                .enumerate()
                .map(|(i, c)| ProductShade::new(format!("p{}", i % 3), format!("s{i}"), "", *c))
                .collect();
            let mut rotated = shades.clone();
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            rotated.reverse();
            let est = SkinEstimate::from_color(probe);
            let a = recommend(&Catalog::new(shades).unwrap(), &est, DeltaE(5.0)).unwrap();
            let b = recommend(&Catalog::new(rotated).unwrap(), &est, DeltaE(5.0)).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn threshold_counts_are_monotone(
            colors in proptest::collection::vec(rgb(), 1..25),
            good in proptest::collection::vec(rgb(), 0..4),
            bad in proptest::collection::vec(rgb(), 0..4),
            t1 in 0.0f64..20.0,
            t2 in 0.0f64..20.0,
        ) {
            let shades = colors.iter().enumerate().map(|(i, c)| ProductShade::new(format!("p{}", i % 2), format!("s{i}"), "", *c)).collect();
            let cat = Catalog::new(shades).unwrap();
            let groups = EstimateGroups {
                good: good.iter().map(|c| srgb_to_lab(*c)).collect(),
                bad: bad.iter().map(|c| srgb_to_lab(*c)).collect(),
            };
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let rep = threshold_report(&cat, &groups, &[lo, hi]);
            for p in &rep.products {
                for v in [&p.good, &p.bad, &p.all, &p.overlap] {
                    prop_assert!(v[0] <= v[1]);
                }
                prop_assert!(p.all[1] <= p.n_shades);
                prop_assert_eq!(p.all[0] + p.overlap[0], p.good[0] + p.bad[0]);
            }
        }
    }
}

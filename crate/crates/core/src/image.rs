//! Raster primitives over 8-bit sRGB images and boolean masks.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::color::{srgb_encode, Rgb8};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Row-major 8-bit sRGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    pixels: Vec<Rgb8>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, fill: Rgb8) -> Self {
        ImageBuffer {
            width,
            height,
            pixels: vec![fill; (width as usize) * (height as usize)],
        }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<Rgb8>) -> Result<Self> {
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (pixels.len() as u32, 1),
            });
        }
        Ok(ImageBuffer {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Rgb8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<Rgb8> {
        self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb8 {
        self.pixels[self.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, c: Rgb8) {
        let i = self.index(x, y);
        self.pixels[i] = c;
    }

    fn index(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y as usize * self.width as usize + x as usize
    }

    /// Copy with every pixel outside `mask` replaced by `fill`.
    pub fn composite(&self, mask: &Mask, fill: Rgb8) -> Result<ImageBuffer> {
        check_dims(self, mask)?;
        let pixels = self
            .pixels
            .iter()
            .zip(mask.bits())
            .map(|(&p, &sel)| if sel { p } else { fill })
            .collect();
        Ok(ImageBuffer {
            width: self.width,
            height: self.height,
            pixels,
        })
    }
}

/// Per-pixel selection paired with an [`ImageBuffer`] of the same size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, value: bool) -> Self {
        Mask {
            width,
            height,
            bits: vec![value; (width as usize) * (height as usize)],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        Mask::new(width, height, true)
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Mask::new(width, height, false)
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != (width as usize) * (height as usize) {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (bits.len() as u32, 1),
            });
        }
        Ok(Mask {
            width,
            height,
            bits,
        })
    }

    /// Selects pixels whose centers satisfy `pred(x, y)`.
    pub fn from_fn(width: u32, height: u32, mut pred: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(pred(x, y));
            }
        }
        Mask {
            width,
            height,
            bits,
        }
    }

    /// Centered circle whose diameter is `fraction` of the smaller dimension.
    pub fn central_ellipse(width: u32, height: u32, fraction: f64) -> Self {
        let cx = width as f64 / 2.0;
        let cy = height as f64 / 2.0;
        let r = fraction * width.min(height) as f64 / 2.0;
        Mask::from_fn(width, height, |x, y| {
            let dx = (x as f64 + 0.5 - cx) / r;
            let dy = (y as f64 + 0.5 - cy) / r;
            dx * dx + dy * dy <= 1.0
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &Mask) -> Result<Mask> {
        self.zip_with(other, |a, b| a && b)
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Result<Mask> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Mask {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    /// Tight bounding box `(x0, y0, x1, y1)` (exclusive upper bounds).
    pub fn bounding_box(&self) -> Option<(u32, u32, u32, u32)> {
        let mut bb: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bb = Some(match bb {
                        None => (x, y, x + 1, y + 1),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
                    });
                }
            }
        }
        bb
    }
}

fn check_dims(img: &ImageBuffer, mask: &Mask) -> Result<()> {
    if img.dims() != mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: mask.dims(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Channel {
    Red,
    Green,
    Blue,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Red, Channel::Green, Channel::Blue];

    pub fn of(self, c: Rgb8) -> u8 {
        match self {
            Channel::Red => c.r,
            Channel::Green => c.g,
            Channel::Blue => c.b,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Normalized cumulative histogram of one channel with 256 unit-width bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCdf {
    pub channel: Channel,
    /// `bins[k]` = fraction of selected pixels with value ≤ k.
    pub bins: [f64; 256],
    /// Lowest occupied level.
    pub min_value: u8,
}

impl ChannelCdf {
    fn from_counts(channel: Channel, counts: &[u64; 256]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyMask);
        }
        let mut bins = [0.0; 256];
        let mut acc = 0u64;
        for (bin, &c) in bins.iter_mut().zip(counts) {
            acc += c;
            *bin = acc as f64 / total as f64;
        }
        let min_value = counts.iter().position(|&c| c > 0).unwrap_or(0) as u8;
        Ok(ChannelCdf {
            channel,
            bins,
            min_value,
        })
    }

    /// Left-continuous inverse: the smallest level whose cumulative value
    /// reaches `q`.
    pub fn inverse(&self, q: f64) -> u8 {
        // Tolerance absorbs the last-ulp differences between two CDFs built
        // from different pixel counts.
        let q = q - 1e-12;
        let idx = self.bins.partition_point(|&c| c < q);
        idx.min(255) as u8
    }

    /// Kolmogorov–Smirnov distance between two CDFs on the 256 levels.
    pub fn ks_distance(&self, other: &ChannelCdf) -> f64 {
        self.bins
            .iter()
            .zip(&other.bins)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn channel_counts(img: &ImageBuffer, mask: &Mask, channel: Channel) -> [u64; 256] {
    let mut counts = [0u64; 256];
    for (p, &sel) in img.pixels().iter().zip(mask.bits()) {
        if sel {
            counts[channel.of(*p) as usize] += 1;
        }
    }
    counts
}

pub fn cumulative_histogram(img: &ImageBuffer, mask: &Mask, channel: Channel) -> Result<ChannelCdf> {
    check_dims(img, mask)?;
    ChannelCdf::from_counts(channel, &channel_counts(img, mask, channel))
}

/// Cumulative histograms of all three channels, in R, G, B order.
pub fn cumulative_histograms(img: &ImageBuffer, mask: &Mask) -> Result<[ChannelCdf; 3]> {
    Ok([
        cumulative_histogram(img, mask, Channel::Red)?,
        cumulative_histogram(img, mask, Channel::Green)?,
        cumulative_histogram(img, mask, Channel::Blue)?,
    ])
}

/// Remaps masked pixels so each channel's distribution follows `reference`.
///
/// A source level `v` maps to the reference's reverse lookup of the source
/// CDF at `v`. Channels are matched independently; pixels outside the mask
/// are copied unchanged.
pub fn histogram_match(src: &ImageBuffer, src_mask: &Mask, reference: &[ChannelCdf; 3]) -> Result<ImageBuffer> {
    check_dims(src, src_mask)?;
    let mut luts = [[0u8; 256]; 3];
    for cdf in reference {
        let source_cdf = cumulative_histogram(src, src_mask, cdf.channel)?;
        let lut = &mut luts[cdf.channel.index()];
        for (level, out) in lut.iter_mut().enumerate() {
            *out = cdf.inverse(source_cdf.bins[level]);
        }
    }
    let mut out = src.clone();
    for (p, &sel) in out.pixels_mut().iter_mut().zip(src_mask.bits()) {
        if sel {
            *p = Rgb8::new(luts[0][p.r as usize], luts[1][p.g as usize], luts[2][p.b as usize]);
        }
    }
    Ok(out)
}

/// One K-means cluster: its centroid and how many input pixels it holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PaletteEntry {
    pub centroid: Rgb8,
    pub count: usize,
}

/// Palette plus the per-iteration inertia trace, for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub palette: Vec<PaletteEntry>,
    /// Sum of squared linear-RGB distances after each assignment step.
    pub inertia: Vec<f64>,
    pub iterations: usize,
}

const KMEANS_MAX_ITER: usize = 100;
/// Convergence threshold, in 8-bit levels of linear intensity.
const KMEANS_TOL_LEVELS: f64 = 0.5;

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    d0 * d0 + d1 * d1 + d2 * d2
}

fn nearest(point: &[f64; 3], centers: &[[f64; 3]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = dist2(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Lloyd's K-means in linear RGB, returning clusters by descending size.
pub fn kmeans_palette(pixels: &[Rgb8], k: usize, seed: u64) -> Result<Vec<PaletteEntry>> {
    kmeans_fit(pixels, k, seed).map(|fit| fit.palette)
}

pub fn kmeans_fit(pixels: &[Rgb8], k: usize, seed: u64) -> Result<KMeansFit> {
    if pixels.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1"));
    }

    // Work on distinct colors with multiplicities; identical to per-pixel
    // Lloyd iterations but independent of image size.
    let mut hist: BTreeMap<Rgb8, usize> = BTreeMap::new();
    for &p in pixels {
        *hist.entry(p).or_insert(0) += 1;
    }
    let colors: Vec<(Rgb8, [f64; 3], f64)> = hist
        .into_iter()
        .map(|(c, n)| (c, c.to_linear(), n as f64))
        .collect();
    let k = k.min(colors.len());

    // Farthest-point seeding from a seeded first pick (drawn per pixel so
    // frequent colors are proportionally likely).
    let mut rng = SeededRng::new(seed);
    let first_pixel = pixels[rng.below(pixels.len())];
    let first = colors.iter().position(|c| c.0 == first_pixel).unwrap_or(0);
    let mut centers: Vec<[f64; 3]> = vec![colors[first].1];
    let mut min_d: Vec<f64> = colors.iter().map(|c| dist2(&c.1, &centers[0])).collect();
    while centers.len() < k {
        let mut far = 0;
        for (i, d) in min_d.iter().enumerate() {
            if *d > min_d[far] {
                far = i;
            }
        }
        let c = colors[far].1;
        centers.push(c);
        for (d, col) in min_d.iter_mut().zip(&colors) {
            *d = d.min(dist2(&col.1, &c));
        }
    }

    let tol = KMEANS_TOL_LEVELS / 255.0;
    let mut assignment = vec![0usize; colors.len()];
    let mut inertia = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut total = 0.0;
        for (a, col) in assignment.iter_mut().zip(&colors) {
            let (idx, d) = nearest(&col.1, &centers);
            *a = idx;
            total += d * col.2;
        }
        inertia.push(total);

        let mut sums = vec![[0.0f64; 3]; k];
        let mut weights = vec![0.0f64; k];
        for (&a, col) in assignment.iter().zip(&colors) {
            for ch in 0..3 {
                sums[a][ch] += col.1[ch] * col.2;
            }
            weights[a] += col.2;
        }
        let mut moved = 0.0f64;
        for i in 0..k {
            if weights[i] > 0.0 {
                let next = [sums[i][0] / weights[i], sums[i][1] / weights[i], sums[i][2] / weights[i]];
                moved = moved.max(crate::math::sqrt(dist2(&next, &centers[i])));
                centers[i] = next;
            }
        }
        if moved < tol || iterations >= KMEANS_MAX_ITER {
            break;
        }
    }
    // Final assignment against the converged centers.
    let mut counts = vec![0usize; k];
    let mut total = 0.0;
    for col in &colors {
        let (idx, d) = nearest(&col.1, &centers);
        counts[idx] += col.2 as usize;
        total += d * col.2;
    }
    inertia.push(total);

    let mut palette: Vec<PaletteEntry> = centers
        .iter()
        .zip(&counts)
        .filter(|(_, &n)| n > 0)
        .map(|(c, &n)| PaletteEntry {
            centroid: Rgb8::new(srgb_encode(c[0]), srgb_encode(c[1]), srgb_encode(c[2])),
            count: n,
        })
        .collect();
    palette.sort_by(|a, b| b.count.cmp(&a.count).then(a.centroid.cmp(&b.centroid)));
    Ok(KMeansFit {
        palette,
        inertia,
        iterations,
    })
}

/// Selects the foreground by flood-filling near-white pixels in from the
/// border (4-connected). Near-white islands enclosed by foreground stay
/// selected.
pub fn remove_background(img: &ImageBuffer, near_white_threshold: u8) -> Mask {
    let (w, h) = img.dims();
    let near_white = |x: u32, y: u32| {
        let p = img.get(x, y);
        p.r >= near_white_threshold && p.g >= near_white_threshold && p.b >= near_white_threshold
    };
    let mut background = Mask::empty(w, h);
    let mut stack: Vec<(u32, u32)> = Vec::new();
    let seed = |x: u32, y: u32, bg: &mut Mask, st: &mut Vec<(u32, u32)>| {
        if !bg.get(x, y) && near_white(x, y) {
            bg.set(x, y, true);
            st.push((x, y));
        }
    };
    for x in 0..w {
        seed(x, 0, &mut background, &mut stack);
        seed(x, h - 1, &mut background, &mut stack);
    }
    for y in 0..h {
        seed(0, y, &mut background, &mut stack);
        seed(w - 1, y, &mut background, &mut stack);
    }
    while let Some((x, y)) = stack.pop() {
        if x > 0 {
            seed(x - 1, y, &mut background, &mut stack);
        }
        if x + 1 < w {
            seed(x + 1, y, &mut background, &mut stack);
        }
        if y > 0 {
            seed(x, y - 1, &mut background, &mut stack);
        }
        if y + 1 < h {
            seed(x, y + 1, &mut background, &mut stack);
        }
    }
    let bits = background.bits().iter().map(|&b| !b).collect();
    Mask {
        width: w,
        height: h,
        bits,
    }
}

pub const DEFAULT_NEAR_WHITE: u8 = 240;

/// Per-channel mean of the masked pixels, rounded half-up.
pub fn mean_color(img: &ImageBuffer, mask: &Mask) -> Result<Rgb8> {
    check_dims(img, mask)?;
    let mut sums = [0u64; 3];
    let mut n = 0u64;
    for (p, &sel) in img.pixels().iter().zip(mask.bits()) {
        if sel {
            sums[0] += p.r as u64;
            sums[1] += p.g as u64;
            sums[2] += p.b as u64;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let mean = |s: u64| ((2 * s + n) / (2 * n)) as u8;
    Ok(Rgb8::new(mean(sums[0]), mean(sums[1]), mean(sums[2])))
}

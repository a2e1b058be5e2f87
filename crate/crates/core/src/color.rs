//! sRGB ↔ CIELAB conversion and the CIEDE2000 color difference.
//!
//! Conversions use the D65 white point with the 2° observer. Intermediate
//! math is `f64` throughout; the CIEDE2000 hue branches are sensitive to
//! rounding near the ±180° discontinuity.

use crate::math;

/// An 8-bit sRGB-encoded color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rgb8 {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb8 {
    pub const WHITE: Rgb8 = Rgb8::new(255, 255, 255);
    pub const BLACK: Rgb8 = Rgb8::new(0, 0, 0);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb8 { r, g, b }
    }

    pub const fn gray(v: u8) -> Self {
        Rgb8 { r: v, g: v, b: v }
    }

    pub const fn channels(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    pub const fn from_channels(c: [u8; 3]) -> Self {
        Rgb8::new(c[0], c[1], c[2])
    }

    /// Channel values decoded to linear light in `[0, 1]`.
    pub fn to_linear(self) -> [f64; 3] {
        [
            srgb_decode(self.r),
            srgb_decode(self.g),
            srgb_decode(self.b),
        ]
    }

    /// Encodes linear values (clamped to `[0, 1]`) back to 8-bit sRGB.
    pub fn from_linear(lin: [f64; 3]) -> Self {
        Rgb8::new(
            srgb_encode(lin[0]),
            srgb_encode(lin[1]),
            srgb_encode(lin[2]),
        )
    }
}

/// CIELAB color, D65 / 2°.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Lab {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Lab { l, a, b }
    }
}

/// A CIEDE2000 distance. Always non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct DeltaE(pub f64);

impl DeltaE {
    pub const fn value(self) -> f64 {
        self.0
    }
}

// D65 reference white.
const XN: f64 = 0.95047;
const YN: f64 = 1.0;
const ZN: f64 = 1.08883;

// CIE constants in their exact rational form.
const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

/// Piecewise sRGB transfer function, 8-bit code value to linear light.
pub fn srgb_decode(v: u8) -> f64 {
    let c = v as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        math::powf((c + 0.055) / 1.055, 2.4)
    }
}

/// Inverse of [`srgb_decode`], rounded half-up to the nearest code value.
pub fn srgb_encode(lin: f64) -> u8 {
    let lin = if lin.is_nan() { 0.0 } else { lin.clamp(0.0, 1.0) };
    let c = if lin <= 0.0031308 {
        12.92 * lin
    } else {
        1.055 * math::powf(lin, 1.0 / 2.4) - 0.055
    };
    math::round_half_up(c * 255.0).clamp(0.0, 255.0) as u8
}

fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        math::cbrt(t)
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

/// Relative luminance Y of an sRGB color (Y of white = 1).
pub fn relative_luminance(c: Rgb8) -> f64 {
    let [r, g, b] = c.to_linear();
    0.2126729 * r + 0.7151522 * g + 0.0721750 * b
}

/// CIE lightness L* for a relative luminance.
pub fn lightness_from_luminance(y: f64) -> f64 {
    (116.0 * lab_f(y / YN) - 16.0).clamp(0.0, 100.0)
}

pub fn srgb_to_lab(c: Rgb8) -> Lab {
    let [r, g, b] = c.to_linear();
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;

    let fx = lab_f(x / XN);
    let fy = lab_f(y / YN);
    let fz = lab_f(z / ZN);

    Lab {
        // The matrix row for Y sums to 1 + 1e-7; clamp so white lands on 100.
        l: (116.0 * fy - 16.0).clamp(0.0, 100.0),
        a: 500.0 * (fx - fy),
        b: 200.0 * (fy - fz),
    }
}

/// Hue angle in degrees within `[0, 360)`; zero for the achromatic point.
fn hue_degrees(b: f64, a: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        return 0.0;
    }
    let h = math::to_degrees(math::atan2(b, a));
    if h < 0.0 {
        h + 360.0
    } else {
        h
    }
}

/// CIEDE2000 color difference with kL = kC = kH = 1.
pub fn ciede2000(x: Lab, y: Lab) -> DeltaE {
    const POW25_7: f64 = 6_103_515_625.0; // 25^7

    let c1 = math::sqrt(x.a * x.a + x.b * x.b);
    let c2 = math::sqrt(y.a * y.a + y.b * y.b);
    let c_bar = (c1 + c2) / 2.0;
    let c_bar7 = math::powf(c_bar, 7.0);
    let g = 0.5 * (1.0 - math::sqrt(c_bar7 / (c_bar7 + POW25_7)));

    let a1p = (1.0 + g) * x.a;
    let a2p = (1.0 + g) * y.a;
    let c1p = math::sqrt(a1p * a1p + x.b * x.b);
    let c2p = math::sqrt(a2p * a2p + y.b * y.b);
    let h1p = hue_degrees(x.b, a1p);
    let h2p = hue_degrees(y.b, a2p);

    let dl = y.l - x.l;
    let dc = c2p - c1p;
    let chroma_product = c1p * c2p;

    let dh = if chroma_product == 0.0 {
        0.0
    } else {
        let d = h2p - h1p;
        if d > 180.0 {
            d - 360.0
        } else if d < -180.0 {
            d + 360.0
        } else {
            d
        }
    };
    let dh_big = 2.0 * math::sqrt(chroma_product) * math::sin(math::to_radians(dh / 2.0));

    let l_bar = (x.l + y.l) / 2.0;
    let cp_bar = (c1p + c2p) / 2.0;
    let hp_bar = if chroma_product == 0.0 {
        h1p + h2p
    } else if (h1p - h2p).abs() <= 180.0 {
        (h1p + h2p) / 2.0
    } else if h1p + h2p < 360.0 {
        (h1p + h2p + 360.0) / 2.0
    } else {
        (h1p + h2p - 360.0) / 2.0
    };

    let t = 1.0 - 0.17 * math::cos(math::to_radians(hp_bar - 30.0))
        + 0.24 * math::cos(math::to_radians(2.0 * hp_bar))
        + 0.32 * math::cos(math::to_radians(3.0 * hp_bar + 6.0))
        - 0.20 * math::cos(math::to_radians(4.0 * hp_bar - 63.0));

    let d_theta = 30.0 * math::exp(-((hp_bar - 275.0) / 25.0) * ((hp_bar - 275.0) / 25.0));
    let cp_bar7 = math::powf(cp_bar, 7.0);
    let r_c = 2.0 * math::sqrt(cp_bar7 / (cp_bar7 + POW25_7));
    let l50 = (l_bar - 50.0) * (l_bar - 50.0);
    let s_l = 1.0 + 0.015 * l50 / math::sqrt(20.0 + l50);
    let s_c = 1.0 + 0.045 * cp_bar;
    let s_h = 1.0 + 0.015 * cp_bar * t;
    let r_t = -math::sin(math::to_radians(2.0 * d_theta)) * r_c;

    let tl = dl / s_l;
    let tc = dc / s_c;
    let th = dh_big / s_h;
    let sum = tl * tl + tc * tc + th * th + r_t * tc * th;
    // Rounding can push an exact zero slightly negative.
    DeltaE(math::sqrt(sum.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn white_and_black() {
        let w = srgb_to_lab(Rgb8::WHITE);
        assert!((w.l - 100.0).abs() < 1e-9);
        assert!(w.a.abs() < 0.01 && w.b.abs() < 0.01);
        let k = srgb_to_lab(Rgb8::BLACK);
        assert_eq!((k.l, k.a, k.b), (0.0, 0.0, 0.0));
    }

    #[test]
    fn brown_matches_reference_conversion() {
        // Golden from scikit-image `rgb2lab` (D65, 2°).
        let lab = srgb_to_lab(Rgb8::new(118, 86, 66));
        assert!((lab.l - 39.4136).abs() < 5e-3, "{lab:?}");
        assert!((lab.a - 10.4579).abs() < 5e-3, "{lab:?}");
        assert!((lab.b - 16.8326).abs() < 5e-3, "{lab:?}");
    }

    #[test]
    fn published_pair_one() {
        let d = ciede2000(Lab::new(50.0, 2.6772, -79.7751), Lab::new(50.0, 0.0, -82.7485));
        assert!((d.0 - 2.0425).abs() < 1e-4);
    }

    #[test]
    fn all_published_pairs() {
        let data = include_str!("../tests/data/ciede2000_pairs.csv");
        let mut n = 0;
        for line in data.lines().skip(1) {
            let v: std::vec::Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            let x = Lab::new(v[1], v[2], v[3]);
            let y = Lab::new(v[4], v[5], v[6]);
            let d = ciede2000(x, y).0;
            assert!((d - v[7]).abs() < 1e-4, "pair {}: {d} vs {}", v[0], v[7]);
            n += 1;
        }
        assert_eq!(n, 34);
    }

    #[test]
    fn achromatic_hue_is_zero() {
        assert_eq!(hue_degrees(0.0, 0.0), 0.0);
        assert!((hue_degrees(-1.0, 0.0) - 270.0).abs() < 1e-12);
    }

    #[test]
    fn encode_decode_roundtrips_every_level() {
        for v in 0..=255u8 {
            assert_eq!(srgb_encode(srgb_decode(v)), v);
        }
    }

    fn lab_strategy() -> impl Strategy<Value = Lab> {
        (0.0f64..100.0, -128.0f64..127.0, -128.0f64..127.0).prop_map(|(l, a, b)| Lab::new(l, a, b))
    }

    proptest! {
        #[test]
        fn symmetric_and_non_negative(x in lab_strategy(), y in lab_strategy()) {
            let d1 = ciede2000(x, y).0;
            let d2 = ciede2000(y, x).0;
            prop_assert!(d1 >= 0.0);
            prop_assert!((d1 - d2).abs() < 1e-12);
        }

        #[test]
        fn identity_is_zero(r: u8, g: u8, b: u8) {
            let lab = srgb_to_lab(Rgb8::new(r, g, b));
            prop_assert_eq!(ciede2000(lab, lab).0, 0.0);
        }
    }

    #[test]
    fn grayscale_axis_is_neutral_and_monotone() {
        let mut prev = -1.0;
        for g in 0..=255u8 {
            let lab = srgb_to_lab(Rgb8::gray(g));
            assert!(lab.a.abs() < 0.02 && lab.b.abs() < 0.02, "{g}: {lab:?}");
            assert!(lab.l > prev, "{g}");
            prev = lab.l;
        }
    }

    #[test]
    fn lightness_helper_agrees_with_full_conversion() {
        for v in [0u8, 3, 40, 128, 200, 255] {
            let c = Rgb8::new(v, v / 2, 255 - v);
            let l = lightness_from_luminance(relative_luminance(c));
            assert!((l - srgb_to_lab(c).l).abs() < 1e-12);
        }
    }
}

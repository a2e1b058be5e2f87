//! `f64` transcendental functions for `no_std`, backed by `libm`.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn cbrt(x: f64) -> f64 {
    libm::cbrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn round_half_up(x: f64) -> f64 {
    libm::floor(x + 0.5)
}

#[inline]
pub fn to_radians(deg: f64) -> f64 {
    deg * (core::f64::consts::PI / 180.0)
}

#[inline]
pub fn to_degrees(rad: f64) -> f64 {
    rad * (180.0 / core::f64::consts::PI)
}

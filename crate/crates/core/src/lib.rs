//! Core algorithms for synthesizing face-illumination data, classifying
//! illumination quality and matching foundation shades.
//!
//! The crate is `no_std` and only needs an allocator. Everything here is a
//! pure function of its inputs; file formats, PNG codecs, the HTTP service
//! and the CLI live in the `facelight` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod math;
mod rng;

pub mod color;
pub mod dataset;
pub mod facegen;
pub mod illum;
pub mod image;
pub mod relight;
pub mod shade;

pub use color::{ciede2000, srgb_to_lab, DeltaE, Lab, Rgb8};
pub use error::{Error, Result};
pub use image::{ImageBuffer, Mask};

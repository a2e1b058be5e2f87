//! File formats, corpus synthesis, reports, the HTTP service and the CLI
//! built on `facelight-core`.

pub mod api;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod formats;
pub mod io;
pub mod pipeline;
pub mod service;

pub use error::{Error, Result};

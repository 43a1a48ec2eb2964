pub mod baselines;
pub mod dsp;
pub mod edf_io;
pub mod error;
pub mod features;
pub mod forest;
pub mod ica;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

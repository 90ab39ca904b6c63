//! Co-motion patterns: second-order statistics of facial landmark motion used
//! to tell real face videos from synthesized ones.
//!
//! The numeric kernels are generic over [`Scalar`] (`f32`/`f64`); the aliases
//! below fix the common instantiations.

pub mod config;
pub mod detect;
pub mod error;
pub mod experiment;
pub mod flowcore;
pub mod grouping;
pub mod linalg;
pub mod motfeat;
pub mod pattern;
pub mod pipeline;
pub mod scalar;
pub mod seed;
pub mod synth;
pub mod tracks;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Frame32 = flowcore::Frame<f32>;
pub type Frame64 = flowcore::Frame<f64>;
pub type FlowField32 = flowcore::FlowField<f32>;
pub type FlowField64 = flowcore::FlowField<f64>;
pub type MotionFeatureSet64 = motfeat::MotionFeatureSet<f64>;

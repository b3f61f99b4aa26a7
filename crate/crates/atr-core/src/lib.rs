//! Action recognition from 3-D joint and object trajectories.
//!
//! An action sample is a set of scalar time series ("sub-signals"), one per
//! coordinate axis of each tracked skeleton joint or object, expressed in
//! person-centric coordinates. Training builds one template per class by
//! DTW-based averaging; every sample is then warped to every template,
//! multilevel wavelet coefficients of the warped signals are concatenated
//! into a feature vector, and a random decision forest does the voting.
//!
//! The numeric kernels (filtering, DTW, wavelets, forest) are generic over
//! the scalar type via [`Real`]; the pipeline, loaders and evaluation run
//! on `f64` through the aliases at the crate root.

pub mod bundle;
pub mod config;
pub mod dataio;
pub mod dtw;
pub mod error;
pub mod eval;
pub mod filtering;
pub mod forest;
pub mod pipeline;
pub mod skeleton;
pub mod synth;
pub mod template;
pub mod wavelet;

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type the numeric kernels are generic over: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

pub use error::{Error, Result};

/// Concrete `f64` aliases used by the pipeline, loaders and CLI.
pub type Frame = skeleton::Frame<f64>;
pub type RawSequence = skeleton::RawSequence<f64>;
pub type TrajectorySample = skeleton::TrajectorySample<f64>;
pub type MeanSample = template::MeanSample<f64>;
pub type ActionTemplate = template::ActionTemplate<f64>;
pub type TemplateSet = template::TemplateSet<f64>;
pub type ForestModel = forest::ForestModel<f64>;
pub type TrainedModel = pipeline::TrainedModel<f64>;


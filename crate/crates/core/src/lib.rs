//! Impulse-based multi-resolution energy detection.
//!
//! A transient response is normalised, projected onto a wavelet or STFT
//! grid, and summarised by its weighted energy over a region of the
//! time-frequency plane. The region is chosen to maximise a Fisher-type
//! separability score between healthy and defective training examples, and
//! the score is thresholded to classify new responses.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision for callers that do not need the
//! generality.

pub mod dataset;
pub mod detector;
pub mod energy;
pub mod error;
pub mod scalar;
pub mod separability;
pub mod signal;
pub mod synth;
pub mod transform;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SignalF64 = signal::Signal<f64>;
pub type SignalF32 = signal::Signal<f32>;
pub type ImpulseParamsF64 = signal::ImpulseParams<f64>;
pub type ImpulseParamsF32 = signal::ImpulseParams<f32>;
pub type GridSpecF64 = transform::GridSpec<f64>;
pub type GridSpecF32 = transform::GridSpec<f32>;
pub type CoefficientFieldF64 = transform::CoefficientField<f64>;
pub type CoefficientFieldF32 = transform::CoefficientField<f32>;
pub type DatasetF64 = dataset::LabeledDataset<f64>;
pub type DatasetF32 = dataset::LabeledDataset<f32>;
pub type DetectorModelF64 = detector::DetectorModel<f64>;
pub type DetectorModelF32 = detector::DetectorModel<f32>;
pub type DetectorConfigF64 = detector::DetectorConfig<f64>;
pub type DetectorConfigF32 = detector::DetectorConfig<f32>;
pub type SyntheticConfigF64 = synth::SyntheticConfig<f64>;
pub type SyntheticConfigF32 = synth::SyntheticConfig<f32>;

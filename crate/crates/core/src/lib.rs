//! Physics-based image augmentation.
//!
//! The augmentation perturbs an image along three light paths:
//!
//! * a global, non-uniform illumination change: circular convolution with a
//!   random Gaussian kernel, evaluated in the frequency domain ([`spectral`]);
//! * particle-induced local occlusion: random matrices modulating unit-norm
//!   sinusoidal planar waves ([`occlusion`]);
//! * an additive atmospheric-light term `L_inf * (1 - exp(-d))`
//!   ([`perturbation`]).
//!
//! Two ablations ([`perturbation::npm1`], [`perturbation::npm2`]), forward
//! fog and low-light synthesizers, and the mPC robustness metric
//! ([`metrics`]) complete the library. [`pipeline`] drives batch runs for the
//! `physaug` binary.

pub mod config;
pub mod error;
pub mod image;
pub mod metrics;
pub mod occlusion;
pub mod perturbation;
pub mod pipeline;
pub mod seed;
pub mod spectral;

pub use crate::config::{Mode, PipelineConfig};
pub use crate::error::{Error, Result};
pub use crate::image::{clamp_unit, quantize_roundtrip, ImageTensor, Plane};
pub use crate::perturbation::{npm1, npm2, physaug, NpmConfig, PhysAugConfig};
pub use crate::seed::{derive_item_seed, derive_sample_seed, ItemKey, SeedSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Contamination segmentation for cryo-EM micrographs.
//!
//! Each micrograph is tiled into square blocks whose pixel vectors are
//! modelled as Gaussian, with one mean and covariance for contamination and
//! one for clean ice. A level-set function separating the two regions is
//! evolved by gradient ascent on the regularized likelihood, alternating
//! with re-estimation of the region statistics.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix it to `f64`.

pub mod blocks;
pub mod error;
pub mod eval;
pub mod io;
pub mod levelset;
pub mod micrograph;
pub mod pipeline;
mod scalar;
pub mod synth;

pub use blocks::{BlockPartition, CovarianceModel, Estimator, RatioField, Region, RegionStats, Shrinkage};
pub use error::{Error, Result};
pub use eval::{batch_evaluate, compute_metrics, Metrics, MetricsReport};
pub use levelset::{LevelSet, SolverParams};
pub use micrograph::{downsample, normalize, Micrograph, SegmentationMask, WorkingFrame};
pub use pipeline::{segment_micrograph, PipelineConfig, Segmentation, SegmentationStatus};
pub use scalar::Real;
pub use synth::{generate, SyntheticSpec};

pub type Micrograph64 = Micrograph<f64>;
pub type LevelSet64 = LevelSet<f64>;
pub type RegionStats64 = RegionStats<f64>;
pub type RatioField64 = RatioField<f64>;
pub type SolverParams64 = SolverParams<f64>;
pub type Segmentation64 = Segmentation<f64>;

pub type Micrograph32 = Micrograph<f32>;
pub type LevelSet32 = LevelSet<f32>;

use serde::{Deserialize, Serialize};

use crate::blocks::Estimator;
use crate::error::{Error, Result};
use crate::levelset::SolverParams;

/// Edge length below which segmentation quality is known to degrade.
pub const MIN_RELIABLE_SIZE: usize = 600;

/// Settings of one segmentation run. Only the particle size has no default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Approximate particle diameter in pixels of the original micrograph.
    pub particle_size_px: usize,
    /// Edge of the square working grid; larger inputs are downsampled to it.
    pub working_size: usize,
    pub block_edge: usize,
    /// Components smaller than `area_factor` particle disks are dropped.
    pub area_factor: f64,
    /// Region model fitting; serialized as the flat keys `covariance` and
    /// `shrinkage`.
    #[serde(flatten)]
    pub estimator: Estimator,
    #[serde(flatten)]
    pub solver: SolverParams<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            particle_size_px: 0,
            working_size: 800,
            block_edge: 25,
            area_factor: 4.0,
            estimator: Estimator::default(),
            solver: SolverParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn new(particle_size_px: usize) -> Self {
        Self {
            particle_size_px,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.particle_size_px < 1 {
            return Err(Error::InvalidParameter("particle size must be at least 1 pixel".into()));
        }
        if self.block_edge < 2 {
            return Err(Error::InvalidParameter("block edge must be at least 2".into()));
        }
        if self.working_size < 2 * self.block_edge {
            return Err(Error::InvalidParameter(format!(
                "working size {} is below twice the block edge {}",
                self.working_size, self.block_edge
            )));
        }
        if !(self.area_factor > 0.0 && self.area_factor.is_finite()) {
            return Err(Error::InvalidParameter("area factor must be positive".into()));
        }
        if self.solver.inner_steps < 1 {
            return Err(Error::InvalidParameter("inner steps must be at least 1".into()));
        }
        self.estimator.validate()?;
        self.solver.validate()
    }
}

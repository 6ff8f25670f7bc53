//! Block tiling of the working grid, per-region Gaussian block models and
//! the log-density ratio field derived from them.

mod linalg;
mod partition;
mod ratio;
mod stats;

pub use linalg::{cholesky_lower, forward_substitute, log_det_from_factor};
pub use partition::{classify_blocks, partition_blocks, BlockPartition, Region, SENTINEL};
pub use ratio::{compute_ratio_field, RatioField};
pub use stats::{
    block_log_density, estimate_global_stats, estimate_region_stats, region_blocks, CovarianceModel, Estimator, RegionStats,
    Shrinkage,
    DEGENERATE_VARIANCE, SHRINKAGE_LADDER,
};

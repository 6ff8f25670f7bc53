//! End-to-end segmentation of one micrograph: alternate between fitting the
//! two region models and evolving the level set, then pick the smaller side
//! and drop components too small to be contamination.

mod components;
mod config;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::blocks::{
    classify_blocks, compute_ratio_field, estimate_global_stats, estimate_region_stats,
    partition_blocks, BlockPartition, Region, RegionStats,
};
use crate::error::Result;
use crate::levelset::{init_phi, run_evolution, sign_change_fraction, LevelSet};
use crate::micrograph::{downsample_with_frame, normalize, Micrograph, SegmentationMask, WorkingFrame};
use crate::scalar::Real;

pub use components::{
    filter_by_particle_size, label_components, min_component_area, select_contamination_side, side_mask,
};
pub use config::{PipelineConfig, MIN_RELIABLE_SIZE};

/// Consecutive outer iterations with a starved region before giving up.
pub const MAX_DEGENERATE_ITERS: usize = 3;

/// Grid the normalized working image is rounded to, so that inputs equal up
/// to an affine intensity change give bit-identical working images.
pub const WORKING_QUANTUM: f64 = 1.0 / (1u64 << 20) as f64;

fn quantize<T: Real>(m: &Micrograph<T>) -> Result<Micrograph<T>> {
    let q = T::lit(WORKING_QUANTUM);
    m.map(|v| (v / q).round() * q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationStatus {
    ContaminationFound,
    NoContaminationFound,
}

/// Alternating-optimization state after the last completed outer iteration.
#[derive(Debug, Clone)]
pub struct SegmentationState<T> {
    pub phi: LevelSet<T>,
    pub stats0: RegionStats<T>,
    pub stats1: RegionStats<T>,
    pub outer_iter: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Segmentation<T> {
    /// Contamination mask on the working grid.
    pub mask: SegmentationMask,
    pub frame: WorkingFrame,
    pub status: SegmentationStatus,
    pub outer_iters: usize,
    pub converged: bool,
    /// Final optimization state; absent when every iteration was degenerate.
    pub state: Option<SegmentationState<T>>,
}

impl<T> Segmentation<T> {
    pub fn contamination_fraction(&self) -> f64 {
        self.mask.contamination_fraction()
    }

    /// The mask mapped back onto the original micrograph.
    pub fn mask_in_original(&self) -> Result<SegmentationMask> {
        self.frame.place_in_original(&self.mask)
    }
}

/// Per-region statistics, substituting whole-micrograph statistics for a
/// region with fewer than two blocks. The flag is set when that happened.
fn fit_regions<T: Real>(
    m: &Micrograph<T>,
    partition: &BlockPartition,
    labels: &[Region],
    cfg: &PipelineConfig,
) -> Result<(RegionStats<T>, RegionStats<T>, bool)> {
    let count0 = labels.iter().filter(|&&l| l == Region::Positive).count();
    let count1 = labels.len() - count0;
    let starved = count0 < 2 || count1 < 2;
    let global = if starved {
        Some(estimate_global_stats(m, partition, cfg.estimator)?)
    } else {
        None
    };
    let fit = |region: Region, count: usize| -> Result<RegionStats<T>> {
        match &global {
            Some(g) if count < 2 => Ok(g.clone()),
            _ => estimate_region_stats(m, partition, labels, region, cfg.estimator),
        }
    };
    Ok((fit(Region::Positive, count0)?, fit(Region::Negative, count1)?, starved))
}

pub fn segment_micrograph<T: Real>(m: &Micrograph<T>, cfg: &PipelineConfig) -> Result<Segmentation<T>> {
    cfg.validate()?;
    let solver = cfg.solver.cast::<T>();
    let (working, frame) = downsample_with_frame(m, cfg.working_size)?;
    let (h, w) = working.dim();
    if h.min(w) < MIN_RELIABLE_SIZE {
        warn!(
            "working grid {h}x{w} is below {MIN_RELIABLE_SIZE}x{MIN_RELIABLE_SIZE}; segmentation may be unreliable"
        );
    }
    let working = quantize(&normalize(&working))?;
    let partition = partition_blocks(h, w, cfg.block_edge)?;
    let particle_px = cfg.particle_size_px as f64 / frame.scale();

    let mut phi = init_phi::<T>(h, w)?;
    let mut state = None;
    let mut degenerate_streak = 0;
    let mut converged = false;
    let mut outer_iters = 0;

    while outer_iters < solver.max_outer_iters {
        outer_iters += 1;
        let labels = classify_blocks(&partition, phi.values())?;
        let (stats0, stats1, starved) = fit_regions(&working, &partition, &labels, cfg)?;
        if starved {
            degenerate_streak += 1;
            debug!("outer iteration {outer_iters}: region starved, using global statistics");
            if degenerate_streak >= MAX_DEGENERATE_ITERS {
                warn!("one region stayed empty for {MAX_DEGENERATE_ITERS} iterations; no contamination found");
                return Ok(Segmentation {
                    mask: SegmentationMask::zeros(h, w),
                    frame,
                    status: SegmentationStatus::NoContaminationFound,
                    outer_iters,
                    converged: false,
                    state,
                });
            }
        } else {
            degenerate_streak = 0;
        }
        let ratio = compute_ratio_field(&working, &partition, &stats0, &stats1)?;
        let (next, _) = run_evolution(&phi, ratio.per_pixel(), &solver)?;
        let changed = sign_change_fraction(phi.values(), next.values());
        debug!("outer iteration {outer_iters}: {changed:.3e} of pixels changed side");
        phi = next;
        converged = changed < solver.sign_change_tol.as_f64();
        state = Some(SegmentationState {
            phi: phi.clone(),
            stats0,
            stats1,
            outer_iter: outer_iters,
            converged,
        });
        if converged {
            break;
        }
    }
    if !converged {
        warn!("no convergence after {outer_iters} outer iterations");
    }

    let side = select_contamination_side(&phi);
    let raw = side_mask(&phi, side);
    let mask = filter_by_particle_size(&raw, particle_px, cfg.area_factor);
    let status = if mask.count_ones() == 0 {
        SegmentationStatus::NoContaminationFound
    } else {
        SegmentationStatus::ContaminationFound
    };
    Ok(Segmentation {
        mask,
        frame,
        status,
        outer_iters,
        converged,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn quantize_snaps_to_grid_and_absorbs_tiny_differences() {
        let a = Micrograph::new(Array2::from_shape_fn((4, 4), |(r, c)| (r as f64 - 1.3) * 0.37 + c as f64 * 1e-3)).unwrap();
        let b = a.map(|v| v + 3e-14).unwrap();
        let qa = quantize(&a).unwrap();
        let qb = quantize(&b).unwrap();
        assert_eq!(qa.pixels(), qb.pixels());
        for (&q, &v) in qa.pixels().iter().zip(a.pixels().iter()) {
            assert!((q - v).abs() <= WORKING_QUANTUM / 2.0);
            assert_eq!((q / WORKING_QUANTUM).fract(), 0.0);
        }
    }
}

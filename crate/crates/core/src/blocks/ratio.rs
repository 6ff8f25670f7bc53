use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use super::partition::{BlockPartition, Region};
use super::stats::RegionStats;
use crate::error::{Error, Result};
use crate::micrograph::Micrograph;
use crate::scalar::Real;

/// Per-block log-densities under both region models and the driving term
/// they induce on the pixel grid.
#[derive(Debug, Clone)]
pub struct RatioField<T> {
    log_density: [Vec<T>; 2],
    per_block_log_ratio: Vec<T>,
    per_pixel: Array2<T>,
    block_area: usize,
}

impl<T: Real> RatioField<T> {
    /// `log rho0 - log rho1` for each block.
    pub fn per_block_log_ratio(&self) -> &[T] {
        &self.per_block_log_ratio
    }

    /// Per-block log-density under `region`'s model.
    pub fn block_log_density(&self, region: Region) -> &[T] {
        &self.log_density[region.index()]
    }

    /// Block log-ratio divided by the block area, painted over its pixels;
    /// margin pixels hold zero.
    pub fn per_pixel(&self) -> ArrayView2<'_, T> {
        self.per_pixel.view()
    }

    /// Per-pixel share of one region's block log-density, zero in the margin.
    pub fn pixel_log_density(&self, partition: &BlockPartition, region: Region) -> Array2<T> {
        let area = T::count(self.block_area);
        let scaled: Vec<T> = self.log_density[region.index()].iter().map(|&v| v / area).collect();
        partition.paint(&scaled, T::zero())
    }

    /// The same field with the region roles exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            log_density: [self.log_density[1].clone(), self.log_density[0].clone()],
            per_block_log_ratio: self.per_block_log_ratio.iter().map(|&v| -v).collect(),
            per_pixel: self.per_pixel.mapv(|v| -v),
            block_area: self.block_area,
        }
    }
}

pub fn compute_ratio_field<T: Real>(
    micrograph: &Micrograph<T>,
    partition: &BlockPartition,
    stats0: &RegionStats<T>,
    stats1: &RegionStats<T>,
) -> Result<RatioField<T>> {
    partition.check_grid(micrograph.dim())?;
    let p = partition.block_area();
    for s in [stats0, stats1] {
        if s.dim() != p {
            return Err(Error::ShapeMismatch {
                expected: (p, 1),
                found: (s.dim(), 1),
            });
        }
    }
    let pixels = micrograph.pixels();
    let pairs: Vec<(T, T)> = (0..partition.num_blocks())
        .into_par_iter()
        .map_init(
            || (vec![T::zero(); p], vec![T::zero(); p]),
            |(block, scratch), i| {
                partition.fill_block_vector(pixels, i, block);
                (
                    stats0.log_density_with(block, scratch),
                    stats1.log_density_with(block, scratch),
                )
            },
        )
        .collect();
    let (d0, d1): (Vec<T>, Vec<T>) = pairs.into_iter().unzip();
    if let Some(i) = d0.iter().chain(&d1).position(|v| !v.is_finite()) {
        let block = i % partition.num_blocks();
        let (row, col) = partition.block_origin(block);
        return Err(Error::NonFinite { row, col });
    }
    let ratio: Vec<T> = d0.iter().zip(&d1).map(|(&a, &b)| a - b).collect();
    let area = T::count(p);
    let scaled: Vec<T> = ratio.iter().map(|&v| v / area).collect();
    Ok(RatioField {
        per_pixel: partition.paint(&scaled, T::zero()),
        log_density: [d0, d1],
        per_block_log_ratio: ratio,
        block_area: p,
    })
}

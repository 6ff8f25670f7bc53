use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Block id carried by pixels in the margin left over after tiling.
pub const SENTINEL: u32 = u32::MAX;

/// Side of the level set a pixel or block belongs to. `Positive` is the
/// `{phi > 0}` region (region 0), `Negative` is `{phi <= 0}` (region 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Positive,
    Negative,
}

impl Region {
    pub fn index(self) -> usize {
        match self {
            Region::Positive => 0,
            Region::Negative => 1,
        }
    }

    pub fn other(self) -> Region {
        match self {
            Region::Positive => Region::Negative,
            Region::Negative => Region::Positive,
        }
    }
}

/// Tiling of the grid into `block_edge` x `block_edge` squares, anchored at
/// the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    block_edge: usize,
    grid_height: usize,
    grid_width: usize,
    blocks_down: usize,
    blocks_across: usize,
    index_map: Array2<u32>,
}

pub fn partition_blocks(height: usize, width: usize, block_edge: usize) -> Result<BlockPartition> {
    if block_edge < 2 {
        return Err(Error::InvalidParameter(format!(
            "block edge must be at least 2, got {block_edge}"
        )));
    }
    if height < block_edge || width < block_edge {
        return Err(Error::InvalidDimensions {
            height,
            width,
            reason: "grid smaller than one block",
        });
    }
    let blocks_down = height / block_edge;
    let blocks_across = width / block_edge;
    let index_map = Array2::from_shape_fn((height, width), |(r, c)| {
        let (br, bc) = (r / block_edge, c / block_edge);
        if br < blocks_down && bc < blocks_across {
            (br * blocks_across + bc) as u32
        } else {
            SENTINEL
        }
    });
    Ok(BlockPartition {
        block_edge,
        grid_height: height,
        grid_width: width,
        blocks_down,
        blocks_across,
        index_map,
    })
}

impl BlockPartition {
    pub fn block_edge(&self) -> usize {
        self.block_edge
    }

    /// Pixels per block, `n^2`; also the dimension of a block vector.
    pub fn block_area(&self) -> usize {
        self.block_edge * self.block_edge
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks_down * self.blocks_across
    }

    pub fn grid_dim(&self) -> (usize, usize) {
        (self.grid_height, self.grid_width)
    }

    pub fn index_map(&self) -> ArrayView2<'_, u32> {
        self.index_map.view()
    }

    /// Top-left pixel of block `i`.
    pub fn block_origin(&self, i: usize) -> (usize, usize) {
        (
            (i / self.blocks_across) * self.block_edge,
            (i % self.blocks_across) * self.block_edge,
        )
    }

    /// Writes the column-stacked pixels of block `i` into `out`.
    pub fn fill_block_vector<T: Real>(&self, pixels: ArrayView2<'_, T>, i: usize, out: &mut [T]) {
        let (r0, c0) = self.block_origin(i);
        let n = self.block_edge;
        for c in 0..n {
            for r in 0..n {
                out[c * n + r] = pixels[[r0 + r, c0 + c]];
            }
        }
    }

    pub fn block_vector<T: Real>(&self, pixels: ArrayView2<'_, T>, i: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.block_area()];
        self.fill_block_vector(pixels, i, &mut out);
        out
    }

    /// Stacks the vectors of `blocks` as rows of a `len x n^2` matrix.
    pub fn gather<T: Real>(&self, pixels: ArrayView2<'_, T>, blocks: &[usize]) -> Array2<T> {
        let p = self.block_area();
        let mut out = Array2::<T>::zeros((blocks.len(), p));
        for (row, &i) in out.outer_iter_mut().zip(blocks) {
            let slice = row.into_slice().expect("standard layout row");
            self.fill_block_vector(pixels, i, slice);
        }
        out
    }

    pub(crate) fn check_grid(&self, dim: (usize, usize)) -> Result<()> {
        if dim != self.grid_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.grid_dim(),
                found: dim,
            });
        }
        Ok(())
    }

    /// Spreads one value per block over its pixels; margin pixels get `fill`.
    pub fn paint<T: Copy>(&self, per_block: &[T], fill: T) -> Array2<T> {
        self.index_map.mapv(|id| {
            if id == SENTINEL {
                fill
            } else {
                per_block[id as usize]
            }
        })
    }
}

/// Assigns each block to the side of `phi` holding a strict majority of its
/// pixels; ties go to [`Region::Negative`].
pub fn classify_blocks<T: Real>(partition: &BlockPartition, phi: ArrayView2<'_, T>) -> Result<Vec<Region>> {
    partition.check_grid(phi.dim())?;
    let mut positive = vec![0usize; partition.num_blocks()];
    for (&id, &v) in partition.index_map.iter().zip(phi.iter()) {
        if id != SENTINEL && v > T::zero() {
            positive[id as usize] += 1;
        }
    }
    let area = partition.block_area();
    Ok(positive
        .into_iter()
        .map(|count| {
            if 2 * count > area {
                Region::Positive
            } else {
                Region::Negative
            }
        })
        .collect())
}

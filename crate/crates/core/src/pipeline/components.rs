use std::f64::consts::PI;

use log::warn;
use ndarray::{Array2, ArrayView2};

use crate::blocks::Region;
use crate::levelset::LevelSet;
use crate::micrograph::SegmentationMask;
use crate::scalar::Real;

/// The sign side of `phi` covering fewer pixels; an exact tie picks
/// [`Region::Positive`].
pub fn select_contamination_side<T: Real>(phi: &LevelSet<T>) -> Region {
    let total = phi.values().len();
    let positive = phi.positive_count();
    let negative = total - positive;
    if positive == negative {
        warn!("level set splits the grid evenly; taking phi > 0 as contamination");
    }
    if positive <= negative {
        Region::Positive
    } else {
        Region::Negative
    }
}

/// Mask of the pixels on `side` of `phi` (zero counts as negative).
pub fn side_mask<T: Real>(phi: &LevelSet<T>, side: Region) -> SegmentationMask {
    let positive = side == Region::Positive;
    let pixels = phi.values().mapv(|v| u8::from((v > T::zero()) == positive));
    SegmentationMask::new(pixels).expect("values are 0 or 1")
}

/// Labels 4-connected components of 1-pixels from 1 upward (0 is
/// background) and returns the pixel count of each label.
pub fn label_components(mask: ArrayView2<'_, u8>) -> (Array2<u32>, Vec<usize>) {
    let (h, w) = mask.dim();
    let mut labels = Array2::<u32>::zeros((h, w));
    let mut sizes = vec![0usize];
    let mut stack = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if mask[[r, c]] == 0 || labels[[r, c]] != 0 {
                continue;
            }
            let id = sizes.len() as u32;
            let mut size = 0usize;
            labels[[r, c]] = id;
            stack.push((r, c));
            while let Some((y, x)) = stack.pop() {
                size += 1;
                let mut visit = |ny: usize, nx: usize| {
                    if mask[[ny, nx]] != 0 && labels[[ny, nx]] == 0 {
                        labels[[ny, nx]] = id;
                        stack.push((ny, nx));
                    }
                };
                if y > 0 {
                    visit(y - 1, x);
                }
                if y + 1 < h {
                    visit(y + 1, x);
                }
                if x > 0 {
                    visit(y, x - 1);
                }
                if x + 1 < w {
                    visit(y, x + 1);
                }
            }
            sizes.push(size);
        }
    }
    (labels, sizes)
}

/// Smallest component area kept: `area_factor * pi/4 * d^2`.
pub fn min_component_area(particle_size_working_px: f64, area_factor: f64) -> f64 {
    area_factor * PI / 4.0 * particle_size_working_px * particle_size_working_px
}

/// Erases 4-connected components smaller than [`min_component_area`].
pub fn filter_by_particle_size(
    mask: &SegmentationMask,
    particle_size_working_px: f64,
    area_factor: f64,
) -> SegmentationMask {
    let threshold = min_component_area(particle_size_working_px, area_factor);
    let (labels, sizes) = label_components(mask.pixels());
    let keep: Vec<bool> = sizes.iter().map(|&s| s as f64 >= threshold).collect();
    let pixels = labels.mapv(|id| u8::from(id != 0 && keep[id as usize]));
    SegmentationMask::new(pixels).expect("values are 0 or 1")
}

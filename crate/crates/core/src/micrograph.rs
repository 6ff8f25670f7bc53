//! Micrograph and mask grids, plus the resampling steps that bring a raw
//! micrograph onto the working grid.

use log::warn;
use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A single 2D micrograph on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Micrograph<T> {
    pixels: Array2<T>,
    pixel_size_angstrom: Option<f64>,
    source_path: String,
}

impl<T: Real> Micrograph<T> {
    /// Wraps a pixel grid, rejecting grids smaller than 2x2 or holding NaN/Inf.
    pub fn new(pixels: Array2<T>) -> Result<Self> {
        let (height, width) = pixels.dim();
        if height < 2 || width < 2 {
            return Err(Error::InvalidDimensions {
                height,
                width,
                reason: "micrograph must be at least 2x2",
            });
        }
        if let Some(((row, col), _)) = pixels.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self {
            pixels,
            pixel_size_angstrom: None,
            source_path: String::new(),
        })
    }

    pub fn with_pixel_size(mut self, angstrom: Option<f64>) -> Self {
        self.pixel_size_angstrom = angstrom.filter(|a| a.is_finite() && *a > 0.0);
        self
    }

    pub fn with_source(mut self, path: impl Into<String>) -> Self {
        self.source_path = path.into();
        self
    }

    pub fn pixels(&self) -> ArrayView2<'_, T> {
        self.pixels.view()
    }

    pub fn into_pixels(self) -> Array2<T> {
        self.pixels
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.pixels.dim()
    }

    pub fn pixel_size_angstrom(&self) -> Option<f64> {
        self.pixel_size_angstrom
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    /// Same metadata, new pixels (used by the resampling steps).
    fn replace_pixels(&self, pixels: Array2<T>, pixel_size: Option<f64>) -> Self {
        Self {
            pixels,
            pixel_size_angstrom: pixel_size,
            source_path: self.source_path.clone(),
        }
    }

    /// Returns a copy with every pixel mapped through `f`.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        let mut out = Self::new(self.pixels.mapv(f))?;
        out.pixel_size_angstrom = self.pixel_size_angstrom;
        out.source_path = self.source_path.clone();
        Ok(out)
    }
}

/// Binary contamination mask: 1 marks contamination, 0 clean ice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMask {
    pixels: Array2<u8>,
}

impl SegmentationMask {
    pub fn new(pixels: Array2<u8>) -> Result<Self> {
        if let Some(((row, col), v)) = pixels.indexed_iter().find(|(_, v)| **v > 1) {
            return Err(Error::InvalidParameter(format!(
                "mask value {v} at ({row}, {col}) is not 0 or 1"
            )));
        }
        Ok(Self { pixels })
    }

    /// Builds a mask by marking every nonzero input as 1.
    pub fn binarize<T: Copy + PartialEq + num_traits::Zero>(values: ArrayView2<'_, T>) -> Self {
        Self {
            pixels: values.mapv(|v| u8::from(v != T::zero())),
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            pixels: Array2::zeros((height, width)),
        }
    }

    pub fn pixels(&self) -> ArrayView2<'_, u8> {
        self.pixels.view()
    }

    pub fn into_pixels(self) -> Array2<u8> {
        self.pixels
    }

    pub fn dim(&self) -> (usize, usize) {
        self.pixels.dim()
    }

    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn count_ones(&self) -> usize {
        self.pixels.iter().filter(|&&v| v == 1).count()
    }

    /// Fraction of pixels marked as contamination.
    pub fn contamination_fraction(&self) -> f64 {
        self.count_ones() as f64 / self.pixels.len() as f64
    }

    /// Logical complement.
    pub fn complement(&self) -> Self {
        Self {
            pixels: self.pixels.mapv(|v| 1 - v),
        }
    }

    pub fn transposed(&self) -> Self {
        Self {
            pixels: self.pixels.t().to_owned(),
        }
    }

    /// Nearest-neighbour resize to `height` x `width`.
    pub fn upsample_nearest(&self, height: usize, width: usize) -> Self {
        let (h, w) = self.dim();
        let out = Array2::from_shape_fn((height, width), |(r, c)| {
            self.pixels[[(r * h / height).min(h - 1), (c * w / width).min(w - 1)]]
        });
        Self { pixels: out }
    }
}

/// Where the working grid sits inside the original micrograph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkingFrame {
    pub original: (usize, usize),
    /// Top-left corner of the analysed region in original pixels.
    pub crop_offset: (usize, usize),
    /// Size of the analysed region in original pixels.
    pub crop_size: (usize, usize),
    /// Size of the working grid.
    pub working: (usize, usize),
}

impl WorkingFrame {
    pub fn identity(height: usize, width: usize) -> Self {
        Self {
            original: (height, width),
            crop_offset: (0, 0),
            crop_size: (height, width),
            working: (height, width),
        }
    }

    /// Original pixels per working pixel (>= 1 when downsampled).
    pub fn scale(&self) -> f64 {
        self.crop_size.0 as f64 / self.working.0 as f64
    }

    /// Maps a working-resolution mask back onto the original frame: the
    /// analysed region is upsampled by nearest neighbour, cropped margins are 0.
    pub fn place_in_original(&self, mask: &SegmentationMask) -> Result<SegmentationMask> {
        if mask.dim() != self.working {
            return Err(Error::ShapeMismatch {
                expected: self.working,
                found: mask.dim(),
            });
        }
        let inner = mask.upsample_nearest(self.crop_size.0, self.crop_size.1);
        let mut out = Array2::<u8>::zeros(self.original);
        let (r0, c0) = self.crop_offset;
        out.slice_mut(s![r0..r0 + self.crop_size.0, c0..c0 + self.crop_size.1])
            .assign(&inner.pixels);
        SegmentationMask::new(out)
    }
}

/// Area weights of a 1D resampling from `n_in` unit cells onto `n_out`
/// equal bins; entry `(k, i, w)` means input cell `i` contributes weight `w`
/// to output bin `k`, with the weights of every bin summing to 1.
fn area_weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|k| {
            let lo = k as f64 * ratio;
            let hi = (k + 1) as f64 * ratio;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n_in);
            (first..last)
                .filter_map(|i| {
                    let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                    (overlap > 0.0).then_some((i, overlap / ratio))
                })
                .collect()
        })
        .collect()
}

/// Center-crops to a square and shrinks to `target` x `target` by
/// area-weighted block averaging.
///
/// Inputs no larger than `target` in both dimensions are returned unchanged.
/// If only the shorter side is within `target`, the centered square crop is
/// returned without resampling.
pub fn downsample<T: Real>(m: &Micrograph<T>, target: usize) -> Result<Micrograph<T>> {
    Ok(downsample_with_frame(m, target)?.0)
}

/// [`downsample`] that also reports where the result sits in the input.
pub fn downsample_with_frame<T: Real>(
    m: &Micrograph<T>,
    target: usize,
) -> Result<(Micrograph<T>, WorkingFrame)> {
    if target < 2 {
        return Err(Error::InvalidParameter(format!(
            "downsample target must be at least 2, got {target}"
        )));
    }
    let (h, w) = m.dim();
    if h <= target && w <= target {
        warn!(
            "micrograph {h}x{w} already within {target}x{target}; not downsampling"
        );
        return Ok((m.clone(), WorkingFrame::identity(h, w)));
    }

    let side = h.min(w);
    let (r0, c0) = ((h - side) / 2, (w - side) / 2);
    let square = m.pixels.slice(s![r0..r0 + side, c0..c0 + side]);
    let scale = side as f64 / target.min(side) as f64;
    let pixel_size = m.pixel_size_angstrom.map(|p| p * scale);

    if side <= target {
        warn!("micrograph {h}x{w} center-cropped to {side}x{side}; shorter side within target {target}");
        let frame = WorkingFrame {
            original: (h, w),
            crop_offset: (r0, c0),
            crop_size: (side, side),
            working: (side, side),
        };
        return Ok((m.replace_pixels(square.to_owned(), pixel_size), frame));
    }

    let weights = area_weights(side, target);
    // Rows first into a side x target buffer, then columns.
    let mut horizontal = Array2::<f64>::zeros((side, target));
    for (r, row) in square.outer_iter().enumerate() {
        for (k, bin) in weights.iter().enumerate() {
            horizontal[[r, k]] = bin.iter().map(|&(i, wt)| row[i].as_f64() * wt).sum();
        }
    }
    let mut out = Array2::<T>::zeros((target, target));
    for (k, bin) in weights.iter().enumerate() {
        for c in 0..target {
            let v: f64 = bin.iter().map(|&(i, wt)| horizontal[[i, c]] * wt).sum();
            out[[k, c]] = T::lit(v);
        }
    }
    let frame = WorkingFrame {
        original: (h, w),
        crop_offset: (r0, c0),
        crop_size: (side, side),
        working: (target, target),
    };
    Ok((m.replace_pixels(out, pixel_size), frame))
}

/// Zero-mean, unit-standard-deviation copy (population statistics).
/// A constant image maps to all zeros.
pub fn normalize<T: Real>(m: &Micrograph<T>) -> Micrograph<T> {
    let first = m.pixels[[0, 0]];
    if m.pixels.iter().all(|&v| v == first) {
        return m.replace_pixels(Array2::zeros(m.dim()), m.pixel_size_angstrom);
    }
    let n = m.pixels.len() as f64;
    let mean = m.pixels.iter().map(|v| v.as_f64()).sum::<f64>() / n;
    let var = m
        .pixels
        .iter()
        .map(|v| {
            let d = v.as_f64() - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return m.replace_pixels(Array2::zeros(m.dim()), m.pixel_size_angstrom);
    }
    let out = m.pixels.mapv(|v| T::lit((v.as_f64() - mean) / sd));
    m.replace_pixels(out, m.pixel_size_angstrom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn mg(p: Array2<f64>) -> Micrograph<f64> {
        Micrograph::new(p).unwrap()
    }

    fn mean_sd(a: ArrayView2<f64>) -> (f64, f64) {
        let n = a.len() as f64;
        let mean = a.sum() / n;
        let var = a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    #[test]
    fn rejects_tiny_and_non_finite() {
        assert!(Micrograph::new(Array2::<f64>::zeros((1, 5))).is_err());
        let mut p = Array2::<f64>::zeros((3, 3));
        p[[1, 2]] = f64::NAN;
        assert!(matches!(Micrograph::new(p), Err(Error::NonFinite { row: 1, col: 2 })));
    }

    #[test]
    fn downsample_constant() {
        let m = mg(Array2::from_elem((4, 4), 7.0));
        let d = downsample(&m, 2).unwrap();
        assert_eq!(d.pixels(), Array2::from_elem((2, 2), 7.0));
    }

    #[test]
    fn downsample_exact_block_means() {
        let m = mg(array![
            [0.0, 0.0, 2.0, 2.0],
            [0.0, 0.0, 2.0, 2.0],
            [4.0, 4.0, 6.0, 6.0],
            [4.0, 4.0, 6.0, 6.0]
        ]);
        let d = downsample(&m, 2).unwrap();
        assert_eq!(d.pixels(), array![[0.0, 2.0], [4.0, 6.0]]);
    }

    #[test]
    fn downsample_fractional_bins_are_area_weighted() {
        // 3 -> 2: bin 0 = x0 + x1/2, bin 1 = x1/2 + x2 (each divided by 1.5).
        let m = mg(array![[0.0, 3.0, 6.0], [0.0, 3.0, 6.0], [0.0, 3.0, 6.0]]);
        let d = downsample(&m, 2).unwrap();
        for r in 0..2 {
            assert!((d.pixels()[[r, 0]] - 1.0).abs() < 1e-12);
            assert!((d.pixels()[[r, 1]] - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn downsample_rejects_small_target() {
        let m = mg(Array2::zeros((4, 4)));
        assert!(downsample(&m, 1).is_err());
    }

    #[test]
    fn downsample_within_target_is_identity() {
        let m = mg(Array2::from_shape_fn((5, 3), |(r, c)| (r * 3 + c) as f64));
        assert_eq!(downsample(&m, 8).unwrap(), m);
    }

    #[test]
    fn non_square_is_center_cropped() {
        // 4 rows x 8 cols; the centered 4x4 block holds columns 2..6.
        let m = mg(Array2::from_shape_fn((4, 8), |(_, c)| c as f64));
        let (d, frame) = downsample_with_frame(&m, 2).unwrap();
        assert_eq!(frame.crop_offset, (0, 2));
        assert_eq!(d.pixels(), array![[2.5, 4.5], [2.5, 4.5]]);
    }

    #[test]
    fn downsample_white_noise_quarters_variance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let p = Array2::from_shape_simple_fn((1000, 1000), || StandardNormal.sample(&mut rng));
        let m = mg(p);
        let (_, sd_in) = mean_sd(m.pixels());
        let d = downsample(&m, 500).unwrap();
        let (_, sd_out) = mean_sd(d.pixels());
        let ratio = sd_out * sd_out / (sd_in * sd_in / 4.0);
        assert!((ratio - 1.0).abs() < 0.1, "variance ratio {ratio}");
    }

    #[test]
    fn repeated_downsample_matches_single_on_aligned_blocks() {
        // Piecewise constant on 4x4 blocks of a 16x16 grid.
        let m = mg(Array2::from_shape_fn((16, 16), |(r, c)| ((r / 4) * 4 + c / 4) as f64));
        let once = downsample(&m, 4).unwrap();
        let twice = downsample(&downsample(&m, 8).unwrap(), 4).unwrap();
        assert_eq!(once.pixels(), twice.pixels());
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&mg(array![[1.0, 3.0], [1.0, 3.0]]));
        assert_eq!(n.pixels(), array![[-1.0, 1.0], [-1.0, 1.0]]);
        let z = normalize(&mg(Array2::from_elem((3, 3), 0.1)));
        assert!(z.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_is_idempotent() {
        let m = mg(Array2::from_shape_fn((7, 9), |(r, c)| ((r * 13 + c * 7) % 11) as f64 * 0.3 + 2.0));
        let once = normalize(&m);
        let twice = normalize(&once);
        for (a, b) in once.pixels().iter().zip(twice.pixels().iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn mask_rejects_non_binary() {
        assert!(SegmentationMask::new(array![[0u8, 2]]).is_err());
    }

    #[test]
    fn mask_upsample_repeats_blocks() {
        let m = SegmentationMask::new(array![[0u8, 1], [1, 0]]).unwrap();
        let up = m.upsample_nearest(4, 4);
        assert_eq!(
            up.pixels(),
            array![[0u8, 0, 1, 1], [0, 0, 1, 1], [1, 1, 0, 0], [1, 1, 0, 0]]
        );
    }

    #[test]
    fn place_in_original_pads_cropped_margins() {
        let m = mg(Array2::zeros((4, 8)));
        let (_, frame) = downsample_with_frame(&m, 2).unwrap();
        let mask = SegmentationMask::new(array![[1u8, 1], [1, 1]]).unwrap();
        let placed = frame.place_in_original(&mask).unwrap();
        assert_eq!(placed.dim(), (4, 8));
        assert_eq!(placed.count_ones(), 16);
        assert_eq!(placed.pixels()[[0, 1]], 0);
        assert_eq!(placed.pixels()[[0, 2]], 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalized_has_zero_mean_unit_sd(
                vals in proptest::collection::vec(-1e3f64..1e3, 16),
            ) {
                let m = mg(Array2::from_shape_vec((4, 4), vals).unwrap());
                let n = normalize(&m);
                let (mean, sd) = mean_sd(n.pixels());
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!(sd == 0.0 || (sd - 1.0).abs() < 1e-9);
            }

            #[test]
            fn constant_downsample_is_exact(c in -50.0f64..50.0, side in 3usize..40, target in 2usize..12) {
                prop_assume!(target < side);
                let m = mg(Array2::from_elem((side, side), c));
                let d = downsample(&m, target).unwrap();
                prop_assert!(d.pixels().iter().all(|&v| (v - c).abs() <= 1e-12 * c.abs().max(1.0)));
            }
        }
    }
}

//! Per-region Gaussian block models: sample mean, shrunk sample covariance,
//! and its Cholesky factor.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::linalg::{cholesky_lower, forward_substitute, log_det_from_factor};
use super::partition::{BlockPartition, Region};
use crate::error::{Error, Result};
use crate::micrograph::Micrograph;
use crate::scalar::Real;

/// Shrinkage intensities tried in order until the factorization succeeds.
pub const SHRINKAGE_LADDER: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 0.5];

/// Variance used when every sample is identical (trace of the sample
/// covariance is zero).
pub const DEGENERATE_VARIANCE: f64 = 1e-6;

/// How the shrinkage intensity toward `trace(S)/p * I` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shrinkage {
    /// Smallest rung of [`SHRINKAGE_LADDER`] that factorizes.
    Ladder,
    /// Ledoit-Wolf estimate of the optimal intensity, escalated along the
    /// ladder if the factorization still fails.
    LedoitWolf,
    /// A fixed intensity in `[0, 1]`, escalated along the ladder if needed.
    Fixed(f64),
}

impl Default for Shrinkage {
    fn default() -> Self {
        Shrinkage::Fixed(0.9)
    }
}

/// Structure imposed on the block covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceModel {
    /// Unconstrained sample mean and covariance of the block vectors.
    Sample,
    /// Stationary field: a constant mean, and a covariance that depends only
    /// on the offset between two pixels of a square block. Each offset is
    /// the biased average over all pixel pairs at that offset, which keeps
    /// the estimate positive semidefinite.
    #[default]
    Stationary,
}

/// How a [`RegionStats`] is fitted to block vectors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Estimator {
    pub covariance: CovarianceModel,
    pub shrinkage: Shrinkage,
}

impl Estimator {
    pub fn sample(shrinkage: Shrinkage) -> Self {
        Self {
            covariance: CovarianceModel::Sample,
            shrinkage,
        }
    }

    pub fn stationary(shrinkage: Shrinkage) -> Self {
        Self {
            covariance: CovarianceModel::Stationary,
            shrinkage,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.shrinkage {
            Shrinkage::Fixed(l) if !(0.0..=1.0).contains(&l) => Err(Error::InvalidParameter(format!(
                "fixed shrinkage must lie in [0, 1], got {l}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Gaussian model of the block vectors of one region.
#[derive(Debug, Clone)]
pub struct RegionStats<T> {
    mean: Array1<T>,
    /// Regularized covariance, the matrix actually factored.
    covariance: Array2<T>,
    chol_lower: Array2<T>,
    log_det: T,
    shrinkage_used: T,
    sample_count: usize,
}

impl<T: Real> RegionStats<T> {
    /// Fits mean and regularized covariance to the rows of `samples`.
    pub fn from_samples(samples: ArrayView2<'_, T>, estimator: Estimator) -> Result<Self> {
        estimator.validate()?;
        let (count, p) = samples.dim();
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 samples, got {count}"
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample value".into()));
        }
        let edge = match estimator.covariance {
            CovarianceModel::Sample => None,
            CovarianceModel::Stationary => Some(square_edge(p)?),
        };
        let n = T::count(count);
        let mut mean = samples.sum_axis(Axis(0)) / n;
        if edge.is_some() {
            let level = mean.sum() / T::count(p);
            mean.fill(level);
        }
        let centered = &samples - &mean.view().insert_axis(Axis(0));
        let mut sample_cov = centered.t().dot(&centered) / n;
        if let Some(edge) = edge {
            sample_cov = stationary_average(sample_cov.view(), edge);
        }
        let trace: T = sample_cov.diag().sum();

        if trace <= T::zero() {
            let var = T::lit(DEGENERATE_VARIANCE);
            let covariance = Array2::from_diag_elem(p, var);
            let chol_lower = Array2::from_diag_elem(p, var.sqrt());
            return Ok(Self {
                mean,
                covariance,
                chol_lower,
                log_det: T::count(p) * var.ln(),
                shrinkage_used: T::one(),
                sample_count: count,
            });
        }

        let target = trace / T::count(p);
        let start = match estimator.shrinkage {
            Shrinkage::Ladder => T::lit(SHRINKAGE_LADDER[0]),
            Shrinkage::LedoitWolf => ledoit_wolf_intensity(centered.view(), sample_cov.view(), target)
                .max(T::lit(SHRINKAGE_LADDER[0])),
            Shrinkage::Fixed(l) => T::lit(l),
        };
        let rungs = std::iter::once(start)
            .chain(SHRINKAGE_LADDER.iter().map(|&l| T::lit(l)).filter(|&l| l > start))
            .chain(std::iter::once(T::one()));
        for lambda in rungs {
            let covariance = shrink(sample_cov.view(), lambda, target);
            if let Some(chol_lower) = cholesky_lower(covariance.view()) {
                let log_det = log_det_from_factor(chol_lower.view());
                return Ok(Self {
                    mean,
                    covariance,
                    chol_lower,
                    log_det,
                    shrinkage_used: lambda,
                    sample_count: count,
                });
            }
        }
        unreachable!("lambda = 1 gives a positive multiple of the identity")
    }

    /// Model with a given mean and (already regularized) covariance.
    pub fn from_mean_covariance(mean: Array1<T>, covariance: Array2<T>) -> Result<Self> {
        let p = mean.len();
        if covariance.dim() != (p, p) {
            return Err(Error::ShapeMismatch {
                expected: (p, p),
                found: covariance.dim(),
            });
        }
        let chol_lower = cholesky_lower(covariance.view()).ok_or_else(|| {
            Error::InvalidParameter("covariance is not positive definite".into())
        })?;
        let log_det = log_det_from_factor(chol_lower.view());
        Ok(Self {
            mean,
            covariance,
            chol_lower,
            log_det,
            shrinkage_used: T::zero(),
            sample_count: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> ArrayView1<'_, T> {
        self.mean.view()
    }

    pub fn covariance(&self) -> ArrayView2<'_, T> {
        self.covariance.view()
    }

    pub fn chol_lower(&self) -> ArrayView2<'_, T> {
        self.chol_lower.view()
    }

    pub fn log_det(&self) -> T {
        self.log_det
    }

    pub fn shrinkage_used(&self) -> T {
        self.shrinkage_used
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// `(x - mu)^T Sigma^{-1} (x - mu)`; `scratch` must have length `dim()`.
    pub(crate) fn mahalanobis_with(&self, x: &[T], scratch: &mut [T]) -> T {
        for ((s, xi), mi) in scratch.iter_mut().zip(x).zip(self.mean.iter()) {
            *s = *xi - *mi;
        }
        forward_substitute(self.chol_lower.view(), scratch);
        scratch.iter().map(|v| *v * *v).sum()
    }

    /// Gaussian log-density with a caller-provided scratch buffer.
    pub(crate) fn log_density_with(&self, x: &[T], scratch: &mut [T]) -> T {
        let half = T::lit(0.5);
        let ln_2pi = T::lit((2.0 * std::f64::consts::PI).ln());
        -half * self.mahalanobis_with(x, scratch) - half * self.log_det - half * T::count(self.dim()) * ln_2pi
    }
}

fn square_edge(p: usize) -> Result<usize> {
    let edge = (p as f64).sqrt().round() as usize;
    if edge * edge != p {
        return Err(Error::InvalidParameter(format!(
            "stationary covariance needs square blocks, got dimension {p}"
        )));
    }
    Ok(edge)
}

/// Replaces every entry of a column-stacked `edge x edge` block covariance
/// by the sum over all entries at the same pixel offset, divided by the
/// block area.
fn stationary_average<T: Real>(cov: ArrayView2<'_, T>, edge: usize) -> Array2<T> {
    let p = edge * edge;
    let span = 2 * edge - 1;
    let offset = |k: usize, l: usize| (l % edge + edge - 1 - k % edge) * span + (l / edge + edge - 1 - k / edge);
    let mut sums = vec![T::zero(); span * span];
    for ((k, l), &v) in cov.indexed_iter() {
        sums[offset(k, l)] += v;
    }
    let area = T::count(p);
    Array2::from_shape_fn((p, p), |(k, l)| sums[offset(k, l)] / area)
}

fn shrink<T: Real>(sample_cov: ArrayView2<'_, T>, lambda: T, target: T) -> Array2<T> {
    let mut out = sample_cov.mapv(|v| v * (T::one() - lambda));
    for d in out.diag_mut() {
        *d += lambda * target;
    }
    out
}

/// Ledoit-Wolf intensity `min(1, b^2 / d^2)` for shrinking toward
/// `target * I`, computed from centered samples.
fn ledoit_wolf_intensity<T: Real>(centered: ArrayView2<'_, T>, sample_cov: ArrayView2<'_, T>, target: T) -> T {
    let n = centered.nrows();
    let s_norm2: T = sample_cov.iter().map(|v| *v * *v).sum();
    // ||S - mI||^2 = ||S||^2 - 2 m tr(S) + m^2 p = ||S||^2 - p m^2
    let d2 = s_norm2 - T::count(sample_cov.nrows()) * target * target;
    if !(d2 > T::zero()) {
        return T::one();
    }
    // sum_k ||y_k y_k^T - S||^2 = sum_k (|y_k|^4 - 2 y_k^T S y_k + ||S||^2)
    let projected = centered.dot(&sample_cov);
    let mut acc = T::zero();
    for (y, sy) in centered.outer_iter().zip(projected.outer_iter()) {
        let norm2: T = y.iter().map(|v| *v * *v).sum();
        let quad: T = y.iter().zip(sy.iter()).map(|(a, b)| *a * *b).sum();
        acc += norm2 * norm2 - T::lit(2.0) * quad + s_norm2;
    }
    let nn = T::count(n);
    let b2 = (acc / (nn * nn)).min(d2);
    (b2 / d2).max(T::zero()).min(T::one())
}

/// Blocks carrying `region`'s label.
pub fn region_blocks(labels: &[Region], region: Region) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == region)
        .map(|(i, _)| i)
        .collect()
}

/// Statistics of the blocks labelled `region`.
pub fn estimate_region_stats<T: Real>(
    micrograph: &Micrograph<T>,
    partition: &BlockPartition,
    labels: &[Region],
    region: Region,
    estimator: Estimator,
) -> Result<RegionStats<T>> {
    partition.check_grid(micrograph.dim())?;
    if labels.len() != partition.num_blocks() {
        return Err(Error::InvalidParameter(format!(
            "{} labels for {} blocks",
            labels.len(),
            partition.num_blocks()
        )));
    }
    let blocks = region_blocks(labels, region);
    if blocks.len() < 2 {
        return Err(Error::DegenerateRegion {
            region: region.index() as u8,
            blocks: blocks.len(),
        });
    }
    let samples = partition.gather(micrograph.pixels(), &blocks);
    RegionStats::from_samples(samples.view(), estimator)
}

/// Statistics over every block of the micrograph, used when one region is
/// too small to estimate its own.
pub fn estimate_global_stats<T: Real>(
    micrograph: &Micrograph<T>,
    partition: &BlockPartition,
    estimator: Estimator,
) -> Result<RegionStats<T>> {
    let labels = vec![Region::Positive; partition.num_blocks()];
    estimate_region_stats(micrograph, partition, &labels, Region::Positive, estimator)
}

/// Gaussian log-density of one column-stacked block vector.
pub fn block_log_density<T: Real>(stats: &RegionStats<T>, block_vector: &[T]) -> Result<T> {
    if block_vector.len() != stats.dim() {
        return Err(Error::ShapeMismatch {
            expected: (stats.dim(), 1),
            found: (block_vector.len(), 1),
        });
    }
    let mut scratch = vec![T::zero(); stats.dim()];
    Ok(stats.log_density_with(block_vector, &mut scratch))
}

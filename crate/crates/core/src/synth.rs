//! Synthetic micrographs from two independent stationary Gaussian fields on
//! a known partition, with the partition as ground truth.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::micrograph::{Micrograph, SegmentationMask};
use crate::scalar::Real;

/// Correlation structure of one region's field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    White,
    /// Normalized `w x w` box average of white noise (`w` odd).
    MovingAverage(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionModel {
    pub mean: f64,
    pub sd: f64,
    #[serde(default = "white")]
    pub kernel: Kernel,
}

fn white() -> Kernel {
    Kernel::White
}

impl RegionModel {
    pub fn white(mean: f64, sd: f64) -> Self {
        Self {
            mean,
            sd,
            kernel: Kernel::White,
        }
    }
}

/// Disk in unit-square coordinates, `x` along columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disk {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        dx * dx + dy * dy < self.radius * self.radius
    }
}

/// Region-0 (contamination) geometry on the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Geometry {
    Disk(Disk),
    /// Everything left of `x = fraction`.
    HalfPlane { fraction: f64 },
    Disks { disks: Vec<Disk> },
}

impl Geometry {
    /// Whether the unit-square point `(x, y)` lies in region 0.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Geometry::Disk(d) => d.contains(x, y),
            Geometry::HalfPlane { fraction } => x < *fraction,
            Geometry::Disks { disks } => disks.iter().any(|d| d.contains(x, y)),
        }
    }

    fn validate(&self) -> Result<()> {
        let check_disk = |d: &Disk| {
            let inside = d.center.iter().all(|c| (0.0..=1.0).contains(c));
            if inside && d.radius >= 0.0 && d.radius <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("disk {d:?} outside the unit square")))
            }
        };
        match self {
            Geometry::Disk(d) => check_disk(d),
            Geometry::HalfPlane { fraction } if (0.0..=1.0).contains(fraction) => Ok(()),
            Geometry::HalfPlane { fraction } => Err(Error::InvalidParameter(format!(
                "half-plane fraction {fraction} outside [0, 1]"
            ))),
            Geometry::Disks { disks } => disks.iter().try_for_each(check_disk),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub height: usize,
    pub width: usize,
    pub geometry: Geometry,
    /// Model inside the geometry (ground truth 1).
    pub region0: RegionModel,
    /// Model outside the geometry.
    pub region1: RegionModel,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.height < 2 || self.width < 2 {
            return Err(Error::InvalidDimensions {
                height: self.height,
                width: self.width,
                reason: "synthetic micrograph must be at least 2x2",
            });
        }
        self.geometry.validate()?;
        for model in [&self.region0, &self.region1] {
            if !(model.sd > 0.0 && model.sd.is_finite() && model.mean.is_finite()) {
                return Err(Error::InvalidParameter(format!("invalid region model {model:?}")));
            }
            if let Kernel::MovingAverage(w) = model.kernel {
                if w == 0 || w % 2 == 0 {
                    return Err(Error::InvalidParameter(format!("window {w} must be odd and >= 1")));
                }
            }
        }
        Ok(())
    }
}

/// Ground truth by pixel-center containment.
pub fn ground_truth(height: usize, width: usize, geometry: &Geometry) -> SegmentationMask {
    let pixels = Array2::from_shape_fn((height, width), |(r, c)| {
        let x = (c as f64 + 0.5) / width as f64;
        let y = (r as f64 + 0.5) / height as f64;
        u8::from(geometry.contains(x, y))
    });
    SegmentationMask::new(pixels).expect("values are 0 or 1")
}

/// Unit-variance field of the given kernel.
pub fn unit_field(height: usize, width: usize, kernel: Kernel, rng: &mut ChaCha8Rng) -> Array2<f64> {
    match kernel {
        Kernel::White | Kernel::MovingAverage(1) => {
            Array2::from_shape_simple_fn((height, width), || StandardNormal.sample(rng))
        }
        Kernel::MovingAverage(w) => {
            let pad = w - 1;
            let noise: Array2<f64> = Array2::from_shape_simple_fn((height + pad, width + pad), || StandardNormal.sample(rng));
            // Box sums along rows then columns; the mean of w^2 unit
            // variables has sd 1/w, so the sum divided by w has sd 1.
            let mut rows = Array2::<f64>::zeros((height + pad, width));
            for (src, mut dst) in noise.outer_iter().zip(rows.outer_iter_mut()) {
                let mut acc: f64 = src.iter().take(w).sum();
                dst[0] = acc;
                for c in 1..width {
                    acc += src[c + pad] - src[c - 1];
                    dst[c] = acc;
                }
            }
            let mut out = Array2::<f64>::zeros((height, width));
            for c in 0..width {
                let col = rows.column(c);
                let mut acc: f64 = col.iter().take(w).sum();
                out[[0, c]] = acc;
                for r in 1..height {
                    acc += col[r + pad] - col[r - 1];
                    out[[r, c]] = acc;
                }
            }
            out.mapv_into(|v| v / w as f64)
        }
    }
}

/// Draws a micrograph and its ground-truth mask.
pub fn generate<T: Real>(spec: &SyntheticSpec) -> Result<(Micrograph<T>, SegmentationMask)> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let truth = ground_truth(h, w, &spec.geometry);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let f0 = unit_field(h, w, spec.region0.kernel, &mut rng);
    let f1 = unit_field(h, w, spec.region1.kernel, &mut rng);
    let mut pixels = Array2::<T>::zeros((h, w));
    ndarray::Zip::from(&mut pixels)
        .and(truth.pixels())
        .and(&f0)
        .and(&f1)
        .for_each(|p, &t, &a, &b| {
            let (model, v) = if t == 1 { (&spec.region0, a) } else { (&spec.region1, b) };
            *p = T::lit(model.mean + model.sd * v);
        });
    Ok((Micrograph::new(pixels)?, truth))
}

//! Reading micrographs from disk and writing masks and overlays.

pub mod mrc;
mod raster;

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::micrograph::{Micrograph, SegmentationMask};
use crate::scalar::Real;

pub use mrc::{read_mrc, write_mrc, MrcHeader, MrcImage, MrcMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Mrc,
    Png,
    Tiff,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskFormat {
    Mrc,
    Png,
}

impl MaskFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Mrc => "mrc",
            Self::Png => "png",
        }
    }
}

/// File extensions recognised as micrographs or masks.
pub const KNOWN_EXTENSIONS: &[&str] = &["mrc", "mrcs", "map", "png", "tif", "tiff"];

fn detect_format(path: &Path) -> Result<InputFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("mrc" | "mrcs" | "map") => return Ok(InputFormat::Mrc),
        Some("png") => return Ok(InputFormat::Png),
        Some("tif" | "tiff") => return Ok(InputFormat::Tiff),
        _ => {}
    }
    let mut magic = [0u8; 8];
    let n = {
        use std::io::Read;
        let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        f.read(&mut magic).map_err(|e| Error::io(path, e))?
    };
    match &magic[..n.min(8)] {
        [0x89, b'P', b'N', b'G', ..] => Ok(InputFormat::Png),
        [b'I', b'I', 42, 0, ..] | [b'M', b'M', 0, 42, ..] => Ok(InputFormat::Tiff),
        _ => Ok(InputFormat::Mrc),
    }
}

/// Loads a micrograph. MRC files contribute their header pixel size.
pub fn read_micrograph<T: Real>(path: &Path, format: InputFormat) -> Result<Micrograph<T>> {
    let format = match format {
        InputFormat::Auto => detect_format(path)?,
        f => f,
    };
    let (data, pixel_size) = match format {
        InputFormat::Mrc => {
            let img = read_mrc(path)?;
            let apix = img.header.pixel_size_angstrom();
            (img.data, apix)
        }
        InputFormat::Png | InputFormat::Tiff => (raster::read_raster(path)?, None),
        InputFormat::Auto => unreachable!("resolved above"),
    };
    Ok(Micrograph::new(data.mapv(T::lit))?
        .with_pixel_size(pixel_size)
        .with_source(path.display().to_string()))
}

/// Loads a mask from any supported format; nonzero pixels become 1.
pub fn read_mask(path: &Path) -> Result<SegmentationMask> {
    let m: Micrograph<f64> = read_micrograph(path, InputFormat::Auto)?;
    Ok(SegmentationMask::binarize(m.pixels()))
}

/// Writes a mask as 8-bit PNG (0/255) or MRC mode 0 (0/1), optionally
/// nearest-neighbour upsampled to `upsample_to = (height, width)`.
pub fn write_mask(
    mask: &SegmentationMask,
    path: &Path,
    format: MaskFormat,
    upsample_to: Option<(usize, usize)>,
) -> Result<()> {
    let resized;
    let mask = match upsample_to {
        Some((h, w)) if (h, w) != mask.dim() => {
            resized = mask.upsample_nearest(h, w);
            &resized
        }
        _ => mask,
    };
    match format {
        MaskFormat::Png => raster::write_gray_png(path, &mask.pixels().mapv(|v| v * 255)),
        MaskFormat::Mrc => write_mrc(path, mask.pixels().mapv(f64::from).view(), MrcMode::Int8, None),
    }
}

/// Writes a micrograph as float32 MRC.
pub fn write_micrograph_mrc<T: Real>(m: &Micrograph<T>, path: &Path) -> Result<()> {
    write_mrc(path, m.pixels(), MrcMode::Float32, m.pixel_size_angstrom())
}

/// Renders the micrograph in grayscale (1st..99th percentile stretch) with
/// contamination tinted red, as an RGB PNG. The mask must match the
/// micrograph's dimensions.
pub fn write_overlay<T: Real>(m: &Micrograph<T>, mask: &SegmentationMask, path: &Path) -> Result<()> {
    if m.dim() != mask.dim() {
        return Err(Error::ShapeMismatch {
            expected: m.dim(),
            found: mask.dim(),
        });
    }
    let mut sorted: Vec<f64> = m.pixels().iter().map(|v| v.as_f64()).collect();
    sorted.sort_by(f64::total_cmp);
    let pick = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
    let (lo, hi) = (pick(0.01), pick(0.99));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let gray: Array2<u8> = m
        .pixels()
        .mapv(|v| (((v.as_f64() - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8);
    let mut rgb = Vec::with_capacity(gray.len() * 3);
    for (g, &flag) in gray.iter().zip(mask.pixels().iter()) {
        if flag == 1 {
            let g = *g as u16;
            rgb.extend_from_slice(&[((g + 255) / 2) as u8, (g / 2) as u8, (g / 2) as u8]);
        } else {
            rgb.extend_from_slice(&[*g, *g, *g]);
        }
    }
    raster::write_rgb_png(path, m.height(), m.width(), rgb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn png_mask_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let mask = SegmentationMask::new(array![[0u8, 1], [1, 0]]).unwrap();
        write_mask(&mask, &path, MaskFormat::Png, None).unwrap();
        let img = image::open(&path).unwrap();
        assert_eq!(img.color(), image::ColorType::L8);
        assert_eq!(img.into_luma8().into_raw(), vec![0, 255, 255, 0]);
    }

    #[test]
    fn constant_png_reads_as_constant() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        image::GrayImage::from_pixel(5, 4, image::Luma([128u8]))
            .save(&path)
            .unwrap();
        let m: Micrograph<f64> = read_micrograph(&path, InputFormat::Auto).unwrap();
        assert_eq!(m.dim(), (4, 5));
        assert!(m.pixels().iter().all(|&v| v == 128.0));
    }

    #[test]
    fn sixteen_bit_png_keeps_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c16.png");
        let img = image::ImageBuffer::<image::Luma<u16>, _>::from_fn(3, 2, |x, y| {
            image::Luma([(x * 20000 + y) as u16])
        });
        img.save(&path).unwrap();
        let m: Micrograph<f64> = read_micrograph(&path, InputFormat::Png).unwrap();
        assert_eq!(m.pixels(), array![[0.0, 20000.0, 40000.0], [1.0, 20001.0, 40001.0]]);
    }

    #[test]
    fn tiff_reads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tif");
        let img = image::ImageBuffer::<image::Luma<u16>, _>::from_fn(4, 3, |x, y| {
            image::Luma([(x + 10 * y) as u16])
        });
        img.save(&path).unwrap();
        let m: Micrograph<f32> = read_micrograph(&path, InputFormat::Auto).unwrap();
        assert_eq!(m.pixels()[[2, 3]], 23.0);
    }

    #[test]
    fn upsampled_mrc_mask() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mrc");
        let mask = SegmentationMask::new(array![[0u8, 1], [1, 0]]).unwrap();
        write_mask(&mask, &path, MaskFormat::Mrc, Some((4, 4))).unwrap();
        let back = read_mask(&path).unwrap();
        assert_eq!(back, mask.upsample_nearest(4, 4));
        assert_eq!(read_mrc(&path).unwrap().header.mode, MrcMode::Int8);
    }

    #[test]
    fn format_sniffing_without_extension() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("noext");
        let mask = SegmentationMask::new(array![[1u8, 1], [0, 0]]).unwrap();
        write_mask(&mask, &path, MaskFormat::Png, None).unwrap();
        assert_eq!(detect_format(&path).unwrap(), InputFormat::Png);
        assert_eq!(read_mask(&path).unwrap(), mask);
    }

    #[test]
    fn overlay_rejects_shape_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let m = Micrograph::new(Array2::<f64>::zeros((3, 3))).unwrap();
        let mask = SegmentationMask::zeros(2, 2);
        assert!(write_overlay(&m, &mask, &dir.path().join("o.png")).is_err());
    }
}

//! PNG/TIFF reading and 8-bit PNG writing through the `image` crate.

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, ImageReader, RgbImage};
use ndarray::Array2;

use crate::error::{Error, Result};

/// Reads a PNG or TIFF as grayscale intensities in the file's native range
/// (0..255 for 8-bit, 0..65535 for 16-bit, unscaled for float).
pub fn read_raster(path: &Path) -> Result<Array2<f64>> {
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = match img {
        DynamicImage::ImageLuma8(_)
        | DynamicImage::ImageLumaA8(_)
        | DynamicImage::ImageRgb8(_)
        | DynamicImage::ImageRgba8(_) => img.to_luma8().into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => img.to_luma16().into_raw().into_iter().map(f64::from).collect(),
        _ => img.to_luma32f().into_raw().into_iter().map(f64::from).collect(),
    };
    Array2::from_shape_vec((h, w), values).map_err(|e| Error::InvalidParameter(e.to_string()))
}

pub fn write_gray_png(path: &Path, pixels: &Array2<u8>) -> Result<()> {
    let (h, w) = pixels.dim();
    let raw: Vec<u8> = pixels.iter().copied().collect();
    let img = GrayImage::from_raw(w as u32, h as u32, raw)
        .ok_or_else(|| Error::InvalidParameter("png buffer size mismatch".into()))?;
    img.save_with_format(path, ImageFormat::Png).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_rgb_png(path: &Path, height: usize, width: usize, rgb: Vec<u8>) -> Result<()> {
    let img = RgbImage::from_raw(width as u32, height as u32, rgb)
        .ok_or_else(|| Error::InvalidParameter("png buffer size mismatch".into()))?;
    img.save_with_format(path, ImageFormat::Png).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

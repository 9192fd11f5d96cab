use std::f64::consts::PI;

use super::GrayImage;
use crate::error::{Error, Result};

/// An image embedded in a larger periodic working grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedImage {
    pub image: GrayImage,
    /// Width of the band added on every side.
    pub pad: usize,
    pub inner_width: usize,
    pub inner_height: usize,
}

impl PaddedImage {
    /// Copies the original region back out of a grid of the padded size.
    pub fn crop_inner(&self, grid: &GrayImage) -> Result<GrayImage> {
        crop(grid, self.pad, self.inner_width, self.inner_height)
    }
}

/// Replicate-pads by `pad` pixels, then blends the band toward the image mean
/// with a raised-cosine weight so that opposite borders meet smoothly when the
/// grid is treated as periodic.
pub fn pad_replicate_taper(image: &GrayImage, pad: usize) -> PaddedImage {
    let (w, h) = image.dims();
    let mean = image.mean();
    let taper = |d: usize| 0.5 * (1.0 + (PI * d as f64 / (pad as f64 + 1.0)).cos());
    let padded = GrayImage::from_fn(w + 2 * pad, h + 2 * pad, |i, j| {
        let r = i as isize - pad as isize;
        let c = j as isize - pad as isize;
        let v = image.get_clamped(r, c);
        let dr = if r < 0 {
            (-r) as usize
        } else {
            (r as usize).saturating_sub(h - 1)
        };
        let dc = if c < 0 {
            (-c) as usize
        } else {
            (c as usize).saturating_sub(w - 1)
        };
        let d = dr.max(dc);
        if d == 0 {
            v
        } else {
            mean + (v - mean) * taper(d)
        }
    });
    PaddedImage {
        image: padded,
        pad,
        inner_width: w,
        inner_height: h,
    }
}

/// Removes a band of `pad` pixels, keeping a `width x height` interior.
pub fn crop(grid: &GrayImage, pad: usize, width: usize, height: usize) -> Result<GrayImage> {
    if grid.width() < width + 2 * pad || grid.height() < height + 2 * pad {
        return Err(Error::dim("crop region exceeds grid"));
    }
    grid.window(pad, pad, width, height)
}

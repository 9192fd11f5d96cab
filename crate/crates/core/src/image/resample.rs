use super::{GrayImage, Kernel};
use crate::error::{Error, Result};

/// Shrinks an image by `ratio` per dimension: a 2-tap `[0.5, 0.5]` box along
/// each axis for antialiasing, then bilinear resampling.
///
/// The box filter moves the sample grid by half a pixel; the resampling
/// coordinates account for that so the output stays centered on the input.
pub fn downsample(image: &GrayImage, ratio: f64) -> Result<GrayImage> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::param(format!("downsample ratio {ratio} not in (0, 1]")));
    }
    let (w, h) = image.dims();
    let ow = (w as f64 * ratio).round() as usize;
    let oh = (h as f64 * ratio).round() as usize;
    if ow < 1 || oh < 1 {
        return Err(Error::dim(format!(
            "downsampling {w}x{h} by {ratio} leaves no pixels"
        )));
    }
    if ow == w && oh == h {
        return Ok(image.clone());
    }
    let (sw, offw) = if w >= 2 { (w - 1, 0.5) } else { (w, 0.0) };
    let (sh, offh) = if h >= 2 { (h - 1, 0.5) } else { (h, 0.0) };
    let smooth = GrayImage::from_fn(sw, sh, |i, j| {
        let (i1, j1) = ((i + 1).min(h - 1), (j + 1).min(w - 1));
        let (i1, j1) = (if h >= 2 { i1 } else { i }, if w >= 2 { j1 } else { j });
        0.25 * (image.get(i, j) + image.get(i, j1) + image.get(i1, j) + image.get(i1, j1))
    });
    let sx = w as f64 / ow as f64;
    let sy = h as f64 / oh as f64;
    Ok(GrayImage::from_fn(ow, oh, |p, q| {
        let v = ((p as f64 + 0.5) * sy - 0.5 - offh).clamp(0.0, (sh - 1) as f64);
        let u = ((q as f64 + 0.5) * sx - 0.5 - offw).clamp(0.0, (sw - 1) as f64);
        bilinear_clamped(&smooth, v, u)
    }))
}

fn bilinear_clamped(img: &GrayImage, v: f64, u: f64) -> f64 {
    let (i0, j0) = (v.floor() as usize, u.floor() as usize);
    let (i1, j1) = ((i0 + 1).min(img.height() - 1), (j0 + 1).min(img.width() - 1));
    let (fy, fx) = (v - i0 as f64, u - j0 as f64);
    let top = img.get(i0, j0) * (1.0 - fx) + img.get(i0, j1) * fx;
    let bot = img.get(i1, j0) * (1.0 - fx) + img.get(i1, j1) * fx;
    top * (1.0 - fy) + bot * fy
}

/// Resizes a kernel to a `target x target` support by bilinear interpolation
/// (taps outside the source support read as zero), then projects it.
pub fn upsample_kernel(kernel: &Kernel, target: usize) -> Result<Kernel> {
    if target < 1 {
        return Err(Error::dim("target kernel size must be at least 1"));
    }
    if target % 2 == 0 {
        return Err(Error::dim(format!("target kernel size {target} is even")));
    }
    let (ci, cj) = kernel.center();
    let tc = (target / 2) as f64;
    let sy = kernel.height() as f64 / target as f64;
    let sx = kernel.width() as f64 / target as f64;
    let tap = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= kernel.height() as isize || j >= kernel.width() as isize {
            0.0
        } else {
            kernel.get(i as usize, j as usize)
        }
    };
    let mut data = Vec::with_capacity(target * target);
    for p in 0..target {
        for q in 0..target {
            let v = (p as f64 - tc) * sy + ci as f64;
            let u = (q as f64 - tc) * sx + cj as f64;
            let (i0, j0) = (v.floor(), u.floor());
            let (fy, fx) = (v - i0, u - j0);
            let (i0, j0) = (i0 as isize, j0 as isize);
            let val = tap(i0, j0) * (1.0 - fy) * (1.0 - fx)
                + tap(i0, j0 + 1) * (1.0 - fy) * fx
                + tap(i0 + 1, j0) * fy * (1.0 - fx)
                + tap(i0 + 1, j0 + 1) * fy * fx;
            data.push(val);
        }
    }
    Ok(Kernel::from_vec_unchecked(target, target, data).project())
}

use super::{GrayImage, Kernel};
use crate::error::{Error, Result};

/// Output geometry of a spatial convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvMode {
    /// Only positions where the kernel fits entirely inside the image:
    /// `(H - kh + 1) x (W - kw + 1)`.
    Valid,
    /// Same size as the input, indices wrap around (periodic image).
    SameCircular,
}

/// Direct spatial convolution `image * kernel`.
pub fn convolve(image: &GrayImage, kernel: &Kernel, mode: ConvMode) -> Result<GrayImage> {
    check_fits(image, kernel)?;
    let (w, h) = image.dims();
    let (kw, kh) = (kernel.width(), kernel.height());
    match mode {
        ConvMode::Valid => {
            let (ow, oh) = (w - kw + 1, h - kh + 1);
            let mut out = GrayImage::zeros(ow, oh);
            for i in 0..oh {
                for j in 0..ow {
                    let mut acc = 0.0;
                    for a in 0..kh {
                        for b in 0..kw {
                            acc += kernel.get(a, b) * image.get(i + kh - 1 - a, j + kw - 1 - b);
                        }
                    }
                    out.set(i, j, acc);
                }
            }
            Ok(out)
        }
        ConvMode::SameCircular => {
            let (ci, cj) = kernel.center();
            let mut out = GrayImage::zeros(w, h);
            for i in 0..h {
                for j in 0..w {
                    let mut acc = 0.0;
                    for a in 0..kh {
                        let si = (i as isize - a as isize + ci as isize).rem_euclid(h as isize);
                        for b in 0..kw {
                            let sj =
                                (j as isize - b as isize + cj as isize).rem_euclid(w as isize);
                            acc += kernel.get(a, b) * image.get(si as usize, sj as usize);
                        }
                    }
                    out.set(i, j, acc);
                }
            }
            Ok(out)
        }
    }
}

/// Adjoint of [`convolve`] for the same kernel and mode (a correlation).
///
/// For `Valid`, `image` is the small output grid and the result has the size of
/// the original input: `(zh + kh - 1) x (zw + kw - 1)`.
pub fn convolve_adjoint(image: &GrayImage, kernel: &Kernel, mode: ConvMode) -> Result<GrayImage> {
    let (kw, kh) = (kernel.width(), kernel.height());
    match mode {
        ConvMode::Valid => {
            let (zw, zh) = image.dims();
            let (w, h) = (zw + kw - 1, zh + kh - 1);
            let mut out = GrayImage::zeros(w, h);
            for i in 0..zh {
                for j in 0..zw {
                    let z = image.get(i, j);
                    for a in 0..kh {
                        for b in 0..kw {
                            let (p, q) = (i + kh - 1 - a, j + kw - 1 - b);
                            let v = out.get(p, q) + kernel.get(a, b) * z;
                            out.set(p, q, v);
                        }
                    }
                }
            }
            Ok(out)
        }
        ConvMode::SameCircular => {
            check_fits(image, kernel)?;
            let (w, h) = image.dims();
            let (ci, cj) = kernel.center();
            let mut out = GrayImage::zeros(w, h);
            for p in 0..h {
                for q in 0..w {
                    let mut acc = 0.0;
                    for a in 0..kh {
                        let si = (p as isize + a as isize - ci as isize).rem_euclid(h as isize);
                        for b in 0..kw {
                            let sj =
                                (q as isize + b as isize - cj as isize).rem_euclid(w as isize);
                            acc += kernel.get(a, b) * image.get(si as usize, sj as usize);
                        }
                    }
                    out.set(p, q, acc);
                }
            }
            Ok(out)
        }
    }
}

fn check_fits(image: &GrayImage, kernel: &Kernel) -> Result<()> {
    if kernel.width() > image.width() || kernel.height() > image.height() {
        return Err(Error::dim(format!(
            "kernel {}x{} larger than image {}x{}",
            kernel.width(),
            kernel.height(),
            image.width(),
            image.height()
        )));
    }
    Ok(())
}

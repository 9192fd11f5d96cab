//! Dense image containers and the primitives everything else is built on:
//! convolution, Fourier transforms, finite differences, resampling, file I/O.

mod conv;
mod fft;
mod gradient;
mod io;
mod pad;
mod resample;

pub use conv::{convolve, convolve_adjoint, ConvMode};
pub use fft::{fft2, ifft2, ifft2_complex, kernel_to_grid, ComplexGrid, Fft2};
pub use gradient::{gradient, gradient_adjoint, GradientField};
pub use io::{
    format_kernel_table, parse_kernel_table, read_image, read_kernel_table, read_pgm, read_png,
    write_image, write_kernel_table, write_pgm, write_png,
};
pub use pad::{crop, pad_replicate_taper, PaddedImage};
pub use resample::{downsample, upsample_kernel};

use crate::error::{Error, Result};

/// Row-major grayscale raster with finite samples, nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::dim(format!("empty image {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::dim(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite sample at index {pos}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Constructor for internal callers that already guarantee the invariants.
    pub(crate) fn from_vec_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::from_vec_unchecked(width, height, vec![value; width * height])
    }

    /// Builds an image from `f(row, col)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self::from_vec_unchecked(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    /// Sample with replicate boundary for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.get(r, c)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self::from_vec_unchecked(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(Self::from_vec_unchecked(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dim(format!(
                "dimension mismatch {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn clamp01(&self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies the `width x height` window whose top-left corner is `(row, col)`.
    pub fn window(&self, row: usize, col: usize, width: usize, height: usize) -> Result<Self> {
        if row + height > self.height || col + width > self.width || width == 0 || height == 0 {
            return Err(Error::dim(format!(
                "window {width}x{height} at ({row},{col}) exceeds {}x{}",
                self.width, self.height
            )));
        }
        Ok(Self::from_fn(width, height, |i, j| {
            self.get(row + i, col + j)
        }))
    }

    /// Mean squared difference against another image of the same size.
    pub fn mse(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        let sq: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sq / self.data.len() as f64)
    }

    /// Peak signal to noise ratio in dB for unit peak.
    pub fn psnr(&self, reference: &Self) -> Result<f64> {
        let mse = self.mse(reference)?;
        Ok(-10.0 * mse.log10())
    }
}

/// Small dense blur kernel with odd sides so that it has a well-defined center.
///
/// Raw solver output may hold negative entries or a sum other than one;
/// [`Kernel::project`] restores non-negativity and unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(Error::dim(format!(
                "kernel sides must be odd, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::dim(format!(
                "kernel data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite kernel entry".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn square(size: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(size, size, data)
    }

    pub(crate) fn from_vec_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert!(width % 2 == 1 && height % 2 == 1);
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    /// Centered Dirac of the given (odd) size.
    pub fn delta(size: usize) -> Result<Self> {
        let mut data = vec![0.0; size * size];
        if size % 2 == 0 {
            return Err(Error::dim(format!("kernel size must be odd, got {size}")));
        }
        data[(size / 2) * size + size / 2] = 1.0;
        Self::square(size, data)
    }

    /// Two-pixel horizontal blur: the center and its right neighbour share the mass.
    pub fn horizontal_pair(size: usize) -> Result<Self> {
        if size < 3 {
            return Err(Error::dim("a two-pixel blur needs a kernel of size >= 3"));
        }
        let mut k = Self::delta(size)?;
        let c = size / 2;
        k.data[c * size + c] = 0.5;
        k.data[c * size + c + 1] = 0.5;
        Ok(k)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Side length of a square kernel (the width for rectangular ones).
    pub fn size(&self) -> usize {
        self.width
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    /// `(row, col)` of the center tap.
    pub fn center(&self) -> (usize, usize) {
        (self.height / 2, self.width / 2)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Clamp negatives to zero and rescale to unit sum. A kernel with no positive
    /// mass collapses to the centered delta.
    pub fn project(&self) -> Kernel {
        let clamped: Vec<f64> = self.data.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            let mut data = vec![0.0; self.data.len()];
            let (ci, cj) = self.center();
            data[ci * self.width + cj] = 1.0;
            return Kernel::from_vec_unchecked(self.width, self.height, data);
        }
        Kernel::from_vec_unchecked(
            self.width,
            self.height,
            clamped.into_iter().map(|v| v / total).collect(),
        )
    }

    pub fn is_projected(&self, tol: f64) -> bool {
        self.data.iter().all(|&v| v >= 0.0) && (self.sum() - 1.0).abs() <= tol
    }

    /// Distance to the nearest (possibly off-center) Dirac, `min_p ||k - delta_p||`.
    pub fn distance_to_delta(&self) -> f64 {
        let n2: f64 = self.data.iter().map(|v| v * v).sum();
        (n2 - 2.0 * self.max() + 1.0).max(0.0).sqrt()
    }

    /// Zero-pads symmetrically to a larger odd size, or crops symmetrically to a
    /// smaller one.
    pub fn resized(&self, width: usize, height: usize) -> Result<Kernel> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(Error::dim("kernel sides must be odd"));
        }
        let (ci, cj) = self.center();
        let (ni, nj) = (height / 2, width / 2);
        let mut out = vec![0.0; width * height];
        for i in 0..self.height {
            for j in 0..self.width {
                let ti = i as isize - ci as isize + ni as isize;
                let tj = j as isize - cj as isize + nj as isize;
                if ti >= 0 && tj >= 0 && (ti as usize) < height && (tj as usize) < width {
                    out[ti as usize * width + tj as usize] = self.get(i, j);
                }
            }
        }
        Ok(Kernel::from_vec_unchecked(width, height, out))
    }

    /// Circularly shifts the taps by `(drow, dcol)` within the support.
    pub fn shifted(&self, drow: isize, dcol: isize) -> Kernel {
        let (w, h) = (self.width as isize, self.height as isize);
        let mut out = vec![0.0; self.data.len()];
        for i in 0..h {
            for j in 0..w {
                let ti = (i + drow).rem_euclid(h) as usize;
                let tj = (j + dcol).rem_euclid(w) as usize;
                out[ti * self.width + tj] = self.data[(i * w + j) as usize];
            }
        }
        Kernel::from_vec_unchecked(self.width, self.height, out)
    }

    /// The kernel as an image, e.g. for display after scaling.
    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_vec_unchecked(self.width, self.height, self.data.clone())
    }

    /// Rescales so the largest tap maps to 1, for visual inspection only.
    pub fn to_display_image(&self) -> GrayImage {
        let m = self.max();
        let scale = if m > 0.0 { 1.0 / m } else { 1.0 };
        GrayImage::from_vec_unchecked(
            self.width,
            self.height,
            self.data.iter().map(|v| (v * scale).clamp(0.0, 1.0)).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_bad_length_and_nan() {
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
        assert!(GrayImage::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn kernel_requires_odd_sides() {
        assert!(Kernel::new(2, 3, vec![0.0; 6]).is_err());
        assert!(Kernel::delta(4).is_err());
    }

    #[test]
    fn project_clamps_and_normalizes() {
        let k = Kernel::new(3, 1, vec![-0.5, 1.5, 0.0]).unwrap().project();
        assert_eq!(k.data(), &[0.0, 1.0, 0.0]);
        let k = Kernel::new(1, 1, vec![-1.0]).unwrap().project();
        assert_eq!(k.data(), &[1.0]);
    }

    #[test]
    fn project_keeps_feasible_kernel() {
        let k = Kernel::new(3, 1, vec![0.2, 0.2, 0.6]).unwrap();
        let p = k.project();
        for (a, b) in p.data().iter().zip(k.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn all_negative_projects_to_centered_delta() {
        let k = Kernel::square(3, vec![-1.0; 9]).unwrap().project();
        assert_eq!(k, Kernel::delta(3).unwrap());
    }

    #[test]
    fn resize_keeps_center() {
        let k = Kernel::delta(3).unwrap().resized(7, 7).unwrap();
        assert_eq!(k, Kernel::delta(7).unwrap());
        let back = k.resized(3, 3).unwrap();
        assert_eq!(back, Kernel::delta(3).unwrap());
    }

    #[test]
    fn delta_distance() {
        assert_eq!(Kernel::delta(5).unwrap().distance_to_delta(), 0.0);
        let k = Kernel::horizontal_pair(3).unwrap();
        assert!((k.distance_to_delta() - 0.5f64.sqrt()).abs() < 1e-12);
    }
}

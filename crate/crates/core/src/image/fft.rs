use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{GrayImage, Kernel};
use crate::error::{Error, Result};

/// Row-major grid of complex samples, the spectrum of a [`GrayImage`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.width + col]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Planned 2-D transform for a fixed grid.
///
/// Forward is unnormalized; inverse carries the `1/N` factor, so
/// `sum |z|^2 == (1/N) sum |Z|^2`.
#[derive(Clone)]
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn process(&self, buf: &mut [Complex64], rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
        debug_assert_eq!(buf.len(), self.len());
        let (w, h) = (self.width, self.height);
        let scratch_len = rows
            .get_inplace_scratch_len()
            .max(cols.get_inplace_scratch_len());
        let mut scratch = vec![Complex64::default(); scratch_len];
        for row in buf.chunks_exact_mut(w) {
            rows.process_with_scratch(row, &mut scratch);
        }
        let mut column = vec![Complex64::default(); h];
        for j in 0..w {
            for (i, c) in column.iter_mut().enumerate() {
                *c = buf[i * w + j];
            }
            cols.process_with_scratch(&mut column, &mut scratch);
            for (i, c) in column.iter().enumerate() {
                buf[i * w + j] = *c;
            }
        }
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.process(buf, self.row_fwd.as_ref(), self.col_fwd.as_ref());
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.process(buf, self.row_inv.as_ref(), self.col_inv.as_ref());
        let scale = 1.0 / self.len() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    pub fn forward_real(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    /// Inverse transform keeping only the real part.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.inverse_in_place(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Real-valued circular filtering: `ifft(fft(x) * h)` or with `conj(h)`.
    pub fn filter_real(&self, samples: &[f64], transfer: &[Complex64], conjugate: bool) -> Vec<f64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        for (b, t) in buf.iter_mut().zip(transfer) {
            *b *= if conjugate { t.conj() } else { *t };
        }
        self.inverse_in_place(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Transfer function of `kernel` on this grid (center tap at the origin).
    pub fn kernel_transfer(&self, kernel: &Kernel) -> Result<Vec<Complex64>> {
        let grid = kernel_to_grid(kernel, self.width, self.height)?;
        Ok(self.forward_real(grid.data()))
    }
}

/// Zero-pads `kernel` onto a `width x height` grid with its center tap at the
/// origin, wrapping negative offsets circularly.
pub fn kernel_to_grid(kernel: &Kernel, width: usize, height: usize) -> Result<GrayImage> {
    if kernel.width() > width || kernel.height() > height {
        return Err(Error::dim(format!(
            "kernel {}x{} does not fit grid {width}x{height}",
            kernel.width(),
            kernel.height()
        )));
    }
    let (ci, cj) = kernel.center();
    let mut out = GrayImage::zeros(width, height);
    for a in 0..kernel.height() {
        for b in 0..kernel.width() {
            let i = (a as isize - ci as isize).rem_euclid(height as isize) as usize;
            let j = (b as isize - cj as isize).rem_euclid(width as isize) as usize;
            let v = out.get(i, j) + kernel.get(a, b);
            out.set(i, j, v);
        }
    }
    Ok(out)
}

pub fn fft2(image: &GrayImage) -> ComplexGrid {
    let plan = Fft2::new(image.width(), image.height());
    ComplexGrid {
        width: image.width(),
        height: image.height(),
        data: plan.forward_real(image.data()),
    }
}

/// Inverse transform returning the full complex result.
pub fn ifft2_complex(grid: &ComplexGrid) -> ComplexGrid {
    let plan = Fft2::new(grid.width, grid.height);
    let mut data = grid.data.clone();
    plan.inverse_in_place(&mut data);
    ComplexGrid {
        width: grid.width,
        height: grid.height,
        data,
    }
}

/// Inverse transform keeping the real part.
pub fn ifft2(grid: &ComplexGrid) -> Result<GrayImage> {
    let plan = Fft2::new(grid.width, grid.height);
    GrayImage::new(grid.width, grid.height, plan.inverse_real(&grid.data))
}

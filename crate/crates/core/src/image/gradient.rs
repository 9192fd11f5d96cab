use super::GrayImage;
use crate::error::{Error, Result};

/// Horizontal and vertical forward differences of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    dh: GrayImage,
    dv: GrayImage,
}

impl GradientField {
    pub fn new(dh: GrayImage, dv: GrayImage) -> Result<Self> {
        dh.check_same_dims(&dv)?;
        Ok(Self { dh, dv })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            dh: GrayImage::zeros(width, height),
            dv: GrayImage::zeros(width, height),
        }
    }

    pub fn dh(&self) -> &GrayImage {
        &self.dh
    }

    pub fn dv(&self) -> &GrayImage {
        &self.dv
    }

    pub fn channels(&self) -> [&GrayImage; 2] {
        [&self.dh, &self.dv]
    }

    pub fn into_channels(self) -> (GrayImage, GrayImage) {
        (self.dh, self.dv)
    }

    pub fn width(&self) -> usize {
        self.dh.width()
    }

    pub fn height(&self) -> usize {
        self.dh.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dh.dims()
    }

    /// Joint magnitude `sqrt(dh^2 + dv^2)` at a flat index.
    #[inline]
    pub fn magnitude_at(&self, idx: usize) -> f64 {
        let (h, v) = (self.dh.data()[idx], self.dv.data()[idx]);
        (h * h + v * v).sqrt()
    }

    pub fn magnitude(&self) -> GrayImage {
        GrayImage::from_vec_unchecked(
            self.width(),
            self.height(),
            (0..self.dh.len()).map(|i| self.magnitude_at(i)).collect(),
        )
    }

    pub fn norm_sq(&self) -> f64 {
        self.dh.norm_sq() + self.dv.norm_sq()
    }

    pub fn dot(&self, other: &GradientField) -> f64 {
        self.dh.dot(&other.dh) + self.dv.dot(&other.dv)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dh: self.dh.map(&f),
            dv: self.dv.map(&f),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.dh.is_finite() && self.dv.is_finite()
    }

    pub fn window(&self, row: usize, col: usize, width: usize, height: usize) -> Result<Self> {
        Ok(Self {
            dh: self.dh.window(row, col, width, height)?,
            dv: self.dv.window(row, col, width, height)?,
        })
    }
}

/// Forward differences `[-1, 1]`; the last column (row) of `dh` (`dv`) is zero.
pub fn gradient(image: &GrayImage) -> Result<GradientField> {
    let (w, h) = image.dims();
    if w < 2 || h < 2 {
        return Err(Error::dim(format!(
            "gradient needs at least 2x2 pixels, got {w}x{h}"
        )));
    }
    let dh = GrayImage::from_fn(w, h, |i, j| {
        if j + 1 < w {
            image.get(i, j + 1) - image.get(i, j)
        } else {
            0.0
        }
    });
    let dv = GrayImage::from_fn(w, h, |i, j| {
        if i + 1 < h {
            image.get(i + 1, j) - image.get(i, j)
        } else {
            0.0
        }
    });
    Ok(GradientField { dh, dv })
}

/// Adjoint of [`gradient`] (a negative divergence).
pub fn gradient_adjoint(field: &GradientField) -> GrayImage {
    let (w, h) = field.dims();
    let (dh, dv) = (field.dh(), field.dv());
    GrayImage::from_fn(w, h, |i, j| {
        let mut acc = 0.0;
        if j + 1 < w {
            acc -= dh.get(i, j);
        }
        if j >= 1 {
            acc += dh.get(i, j - 1);
        }
        if i + 1 < h {
            acc -= dv.get(i, j);
        }
        if i >= 1 {
            acc += dv.get(i - 1, j);
        }
        acc
    })
}

//! Regularizers: the heavy-tailed gradient cost, the patch-based image weights
//! and the frequency-dependent kernel ridge weights.

use crate::error::{Error, Result};
use crate::image::{Fft2, GradientField, GrayImage};

/// Default ridge strength of the frequency weights.
pub const DEFAULT_LAMBDA_AP: f64 = 200.0;

/// `sum_i |dh_i|^alpha + |dv_i|^alpha`.
pub fn heavy_tailed_cost(grad: &GradientField, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::param(format!("exponent must be positive, got {alpha}")));
    }
    Ok(grad
        .channels()
        .iter()
        .flat_map(|c| c.data().iter())
        .map(|v| v.abs().powf(alpha))
        .sum())
}

/// Smoothed power penalty used by the reweighted solvers.
///
/// Each reweighting step replaces the penalty at `t` by `weight(t0) * t^2`,
/// with `weight(t) = (p / 2) (|t| + eps)^(p - 2)`. [`SmoothedPower::value`] is the
/// penalty that this quadratic majorizes exactly, so alternating reweighting
/// and exact quadratic solves never increases `value`. As `eps -> 0` it
/// tends to `|t|^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedPower {
    pub p: f64,
    pub eps: f64,
}

impl SmoothedPower {
    pub fn new(p: f64, eps: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 2.0) || !(eps > 0.0) {
            return Err(Error::param(format!(
                "smoothed power needs 0 < p <= 2 and eps > 0, got p={p} eps={eps}"
            )));
        }
        Ok(Self { p, eps })
    }

    #[inline]
    pub fn weight(&self, t: f64) -> f64 {
        0.5 * self.p * (t.abs() + self.eps).powf(self.p - 2.0)
    }

    /// `p * integral_0^|t| u (u + eps)^(p-2) du`.
    pub fn value(&self, t: f64) -> f64 {
        let (p, e) = (self.p, self.eps);
        let a = t.abs() + e;
        let first = (a.powf(p) - e.powf(p)) / p;
        let second = if (p - 1.0).abs() < 1e-12 {
            e * (a / e).ln()
        } else {
            e * (a.powf(p - 1.0) - e.powf(p - 1.0)) / (p - 1.0)
        };
        p * (first - second)
    }
}

/// Per-pixel image regularization weights shared by both gradient channels.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    weights: GrayImage,
    eta: f64,
}

impl WeightMap {
    /// Uniform weights, mostly useful for tests and baselines.
    pub fn uniform(width: usize, height: usize, value: f64) -> Self {
        Self {
            weights: GrayImage::filled(width, height, value),
            eta: f64::NAN,
        }
    }

    pub fn from_image(weights: GrayImage) -> Result<Self> {
        if weights.data().iter().any(|&w| w < 0.0) {
            return Err(Error::param("weights must be non-negative"));
        }
        Ok(Self {
            weights,
            eta: f64::NAN,
        })
    }

    pub fn weights(&self) -> &GrayImage {
        &self.weights
    }

    pub fn data(&self) -> &[f64] {
        self.weights.data()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dims(&self) -> (usize, usize) {
        self.weights.dims()
    }

    pub fn mean(&self) -> f64 {
        self.weights.mean()
    }

    pub fn min(&self) -> f64 {
        self.weights.min()
    }
}

/// Euclidean norm of the `r x r` patch around each pixel, both channels stacked,
/// with replicate padding at the borders.
pub fn patch_norms(grad: &GradientField, r: usize) -> GrayImage {
    let (w, h) = grad.dims();
    let half = (r / 2) as isize;
    let sq: Vec<f64> = (0..w * h)
        .map(|i| {
            let m = grad.magnitude_at(i);
            m * m
        })
        .collect();
    let sq = GrayImage::from_vec_unchecked(w, h, sq);
    let rows = GrayImage::from_fn(w, h, |i, j| {
        (-half..=half)
            .map(|d| sq.get_clamped(i as isize, j as isize + d))
            .sum()
    });
    GrayImage::from_fn(w, h, |i, j| {
        (-half..=half)
            .map(|d| rows.get_clamped(i as isize + d, j as isize))
            .sum::<f64>()
            .sqrt()
    })
}

/// `w_i = eta / (eta + |grad_i| * ||patch_i||)`.
///
/// With `eta == 0` the weights take their limit values: 1 where the product
/// vanishes, 0 elsewhere.
pub fn patch_weights(grad: &GradientField, eta: f64, r: usize) -> Result<WeightMap> {
    if r == 0 || r % 2 == 0 {
        return Err(Error::param(format!("patch side must be odd and >= 1, got {r}")));
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::param(format!("eta must be finite and >= 0, got {eta}")));
    }
    let norms = patch_norms(grad, r);
    let (w, h) = grad.dims();
    let data = (0..w * h)
        .map(|i| {
            let prod = grad.magnitude_at(i) * norms.data()[i];
            if prod == 0.0 {
                1.0
            } else if eta == 0.0 {
                0.0
            } else {
                eta / (eta + prod)
            }
        })
        .collect();
    Ok(WeightMap {
        weights: GrayImage::from_vec_unchecked(w, h, data),
        eta,
    })
}

/// Ridge weights per frequency bin of a fixed FFT grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqWeightMap {
    width: usize,
    height: usize,
    alpha: Vec<f64>,
    lambda_ap: f64,
}

impl FreqWeightMap {
    /// Arbitrary non-negative weights; zero disables the ridge at that bin.
    pub fn from_raw(width: usize, height: usize, alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != width * height {
            return Err(Error::dim("weight count does not match grid"));
        }
        if alpha.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(Error::param("frequency weights must be finite and >= 0"));
        }
        let lambda_ap = alpha.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            width,
            height,
            alpha,
            lambda_ap,
        })
    }

    pub fn uniform(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::from_raw(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.alpha[row * self.width + col]
    }

    pub fn lambda_ap(&self) -> f64 {
        self.lambda_ap
    }

    pub fn mean(&self) -> f64 {
        self.alpha.iter().sum::<f64>() / self.alpha.len() as f64
    }
}

/// `alpha_w = lambda_ap / (1 + |Y(w)|)` where `Y` is the transform of the image
/// itself (not of its gradient), zero-padded to `grid_width x grid_height`.
pub fn freq_weights(
    y: &GrayImage,
    lambda_ap: f64,
    grid_width: usize,
    grid_height: usize,
) -> Result<FreqWeightMap> {
    if !(lambda_ap > 0.0) {
        return Err(Error::param(format!("lambda_ap must be positive, got {lambda_ap}")));
    }
    if grid_width < y.width() || grid_height < y.height() {
        return Err(Error::dim(format!(
            "grid {grid_width}x{grid_height} smaller than image {}x{}",
            y.width(),
            y.height()
        )));
    }
    let mut padded = vec![0.0; grid_width * grid_height];
    for i in 0..y.height() {
        for j in 0..y.width() {
            padded[i * grid_width + j] = y.get(i, j);
        }
    }
    let spectrum = Fft2::new(grid_width, grid_height).forward_real(&padded);
    let alpha = spectrum
        .iter()
        .map(|c| lambda_ap / (1.0 + c.norm()))
        .collect();
    Ok(FreqWeightMap {
        width: grid_width,
        height: grid_height,
        alpha,
        lambda_ap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{convolve, gradient, ConvMode, Kernel};

    fn single_channel(values: &[f64], w: usize, h: usize) -> GradientField {
        GradientField::new(
            GrayImage::new(w, h, values.to_vec()).unwrap(),
            GrayImage::zeros(w, h),
        )
        .unwrap()
    }

    #[test]
    fn cost_basics() {
        assert_eq!(heavy_tailed_cost(&GradientField::zeros(4, 4), 0.5).unwrap(), 0.0);
        let g = single_channel(&[4.0], 1, 1);
        assert_eq!(heavy_tailed_cost(&g, 0.5).unwrap(), 2.0);
        assert!(heavy_tailed_cost(&g, 0.0).is_err());
        assert!(heavy_tailed_cost(&g, -1.0).is_err());
    }

    #[test]
    fn blurred_step_costs_less() {
        let x = GrayImage::from_fn(20, 8, |_, j| if j >= 10 { 1.0 } else { 0.0 });
        let k = Kernel::new(5, 1, vec![0.2; 5]).unwrap();
        let blurred = convolve(&x, &k, ConvMode::Valid).unwrap();
        let sharp_region = x.window(0, 2, blurred.width(), blurred.height()).unwrap();
        let c_sharp = heavy_tailed_cost(&gradient(&sharp_region).unwrap(), 0.5).unwrap();
        let c_blur = heavy_tailed_cost(&gradient(&blurred).unwrap(), 0.5).unwrap();
        // step of height 1 per row: 8 * 1; ramp of 5 steps of 0.2: 8 * 5 * sqrt(0.2)
        assert_eq!(c_sharp, 8.0);
        assert!((c_blur - 40.0 * 0.2f64.sqrt()).abs() < 1e-9);
        assert!(c_blur > c_sharp);
    }

    #[test]
    fn zero_field_weights_are_one() {
        let w = patch_weights(&GradientField::zeros(6, 5), 0.3, 5).unwrap();
        assert!(w.data().iter().all(|&v| v == 1.0));
        let w0 = patch_weights(&GradientField::zeros(3, 3), 0.0, 3).unwrap();
        assert!(w0.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_pixel_half_weight() {
        let w = patch_weights(&single_channel(&[1.0], 1, 1), 1.0, 1).unwrap();
        assert_eq!(w.data(), &[0.5]);
    }

    #[test]
    fn even_patch_rejected() {
        assert!(patch_weights(&GradientField::zeros(3, 3), 1.0, 4).is_err());
        assert!(patch_weights(&GradientField::zeros(3, 3), -1.0, 3).is_err());
    }

    #[test]
    fn spike_versus_texture() {
        let m = 0.5;
        let eta = 0.1;
        let mut spike = vec![0.0; 25];
        spike[12] = m;
        let spike_w = patch_weights(&single_channel(&spike, 5, 5), eta, 5).unwrap();
        let texture_w = patch_weights(&single_channel(&[m; 25], 5, 5), eta, 5).unwrap();
        // hand evaluation: spike product m * m, texture product m * sqrt(25 m^2)
        let expect_spike = eta / (eta + m * m);
        let expect_texture = eta / (eta + m * 5.0 * m);
        assert!((spike_w.data()[12] - expect_spike).abs() < 1e-15);
        assert!((texture_w.data()[12] - expect_texture).abs() < 1e-15);
        assert!(spike_w.data()[12] > texture_w.data()[12]);
    }

    #[test]
    fn eta_zero_limit() {
        let w = patch_weights(&single_channel(&[0.0, 1.0, 0.0], 3, 1), 0.0, 1).unwrap();
        assert_eq!(w.data(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn freq_weights_zero_and_constant() {
        let fw = freq_weights(&GrayImage::zeros(4, 4), 200.0, 6, 5).unwrap();
        assert!(fw.alpha().iter().all(|&a| a == 200.0));
        let c = 0.25;
        let fw = freq_weights(&GrayImage::filled(8, 4, c), 200.0, 8, 4).unwrap();
        assert!((fw.get(0, 0) - 200.0 / (1.0 + c * 32.0)).abs() < 1e-12);
        for (i, &a) in fw.alpha().iter().enumerate().skip(1) {
            assert!((a - 200.0).abs() < 1e-9, "bin {i}: {a}");
        }
        assert!(freq_weights(&GrayImage::zeros(4, 4), 200.0, 3, 4).is_err());
        assert!(freq_weights(&GrayImage::zeros(4, 4), 0.0, 4, 4).is_err());
    }

    #[test]
    fn smoothed_power_matches_limit() {
        let sp = SmoothedPower::new(0.5, 1e-12).unwrap();
        assert!((sp.value(4.0) - 2.0).abs() < 1e-5);
        let sp1 = SmoothedPower::new(1.0, 1e-12).unwrap();
        assert!((sp1.value(-3.0) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn smoothed_power_majorizer() {
        // weight(t0) t^2 + c touches value at t0 and stays above it
        for p in [0.5, 0.8, 1.0] {
            let sp = SmoothedPower::new(p, 1e-3).unwrap();
            for t0 in [0.0, 0.01, 0.3, -1.2] {
                let c = sp.value(t0) - sp.weight(t0) * t0 * t0;
                for k in -50..=50 {
                    let t = k as f64 * 0.05;
                    assert!(sp.weight(t0) * t * t + c >= sp.value(t) - 1e-12);
                }
            }
        }
    }
}

//! Non-blind deconvolution with a hyper-Laplacian gradient prior.
//!
//! Minimizes `lambda_img ||y - k * x||^2 + sum_i |grad x_i|^alpha` by IRLS over
//! the gradient penalty, each reweighted problem solved by CG on a periodic
//! working grid (replicate padding with a cosine taper, as in the blind
//! estimator). The result is cropped back and clamped to `[0, 1]`.

use log::warn;
use rustfft::num_complex::Complex64;

use crate::cg::{self, CgSettings};
use crate::error::{Error, Result};
use crate::image::{
    gradient, gradient_adjoint, pad_replicate_taper, Fft2, GradientField, GrayImage, Kernel,
};
use crate::priors::SmoothedPower;

#[derive(Debug, Clone, PartialEq)]
pub struct NonblindConfig {
    /// Exponent of the gradient prior.
    pub alpha: f64,
    /// Weight of the data term.
    pub lambda_img: f64,
    pub irls_outer: usize,
    pub cg_iters: usize,
    pub eps: f64,
}

impl Default for NonblindConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            lambda_img: 2000.0,
            irls_outer: 8,
            cg_iters: 30,
            eps: 1e-4,
        }
    }
}

impl NonblindConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param(format!("alpha {} not in (0, 1]", self.alpha)));
        }
        if !(self.lambda_img > 0.0) || !(self.eps > 0.0) {
            return Err(Error::param("lambda_img and eps must be positive"));
        }
        if self.irls_outer < 1 || self.cg_iters < 1 {
            return Err(Error::param("iteration counts must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonblindOutput {
    pub image: GrayImage,
    /// Set when the kernel is the centered delta and the input was returned as is.
    pub degenerate_kernel: bool,
}

/// Deconvolves `y` with a projected kernel `k`.
pub fn deconvolve(y: &GrayImage, k: &Kernel, cfg: &NonblindConfig) -> Result<NonblindOutput> {
    cfg.validate()?;
    if !k.is_projected(1e-6) {
        return Err(Error::param("non-blind kernel must be non-negative with unit sum"));
    }
    let (ci, cj) = k.center();
    if k.get(ci, cj) >= 1.0 - 1e-12 {
        warn!("delta kernel: returning the observation unchanged");
        return Ok(NonblindOutput {
            image: y.clone(),
            degenerate_kernel: true,
        });
    }
    let pad = k.width().max(k.height()) / 2;
    let padded = pad_replicate_taper(y, pad);
    let (x, _) = deconvolve_periodic(&padded.image, k, cfg)?;
    Ok(NonblindOutput {
        image: padded.crop_inner(&x)?.clamp01(),
        degenerate_kernel: false,
    })
}

/// IRLS on a periodic grid, starting from `x = y`. Returns the raw iterate and
/// the smoothed objective before and after every outer iteration.
pub fn deconvolve_periodic(
    y: &GrayImage,
    k: &Kernel,
    cfg: &NonblindConfig,
) -> Result<(GrayImage, Vec<f64>)> {
    cfg.validate()?;
    let (w, h) = y.dims();
    let plan = Fft2::new(w, h);
    let transfer = plan.kernel_transfer(k)?;
    let power: Vec<Complex64> = transfer
        .iter()
        .map(|t| Complex64::new(t.norm_sqr() * cfg.lambda_img, 0.0))
        .collect();
    let rhs: Vec<f64> = plan
        .filter_real(y.data(), &transfer, true)
        .into_iter()
        .map(|v| v * cfg.lambda_img)
        .collect();
    let penalty = SmoothedPower::new(cfg.alpha, cfg.eps)?;
    let objective = |x: &GrayImage| -> Result<f64> {
        let kx = plan.filter_real(x.data(), &transfer, false);
        let data: f64 = y.data().iter().zip(&kx).map(|(a, b)| (a - b).powi(2)).sum();
        let g = gradient(x)?;
        let prior: f64 = g
            .channels()
            .iter()
            .flat_map(|c| c.data().iter())
            .map(|&t| penalty.value(t))
            .sum();
        Ok(cfg.lambda_img * data + prior)
    };

    let mut x = y.clone();
    let mut trace = vec![objective(&x)?];
    let settings = CgSettings::new(cfg.cg_iters, 1e-10);
    for _ in 0..cfg.irls_outer {
        let g = gradient(&x)?;
        let wh = g.dh().map(|t| penalty.weight(t));
        let wv = g.dv().map(|t| penalty.weight(t));
        let mut xv = x.clone().into_data();
        cg::solve(
            |v, out| {
                let img = GrayImage::from_vec_unchecked(w, h, v.to_vec());
                let gv = gradient(&img).expect("grid is at least 2x2");
                let weighted = GradientField::new(
                    gv.dh().zip_map(&wh, |a, b| a * b).expect("same dims"),
                    gv.dv().zip_map(&wv, |a, b| a * b).expect("same dims"),
                )
                .expect("same dims");
                let reg = gradient_adjoint(&weighted);
                let ktk = plan.filter_real(v, &power, false);
                for i in 0..v.len() {
                    out[i] = ktk[i] + reg.data()[i];
                }
            },
            &rhs,
            &mut xv,
            settings,
        );
        if xv.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-blind solve diverged".into()));
        }
        x = GrayImage::from_vec_unchecked(w, h, xv);
        trace.push(objective(&x)?);
    }
    Ok((x, trace))
}

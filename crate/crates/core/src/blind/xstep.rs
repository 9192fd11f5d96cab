//! Latent gradient update: weighted ridge deconvolution solved by CG.

use rustfft::num_complex::Complex64;

use crate::cg::{self, CgSettings};
use crate::error::{Error, Result};
use crate::image::{Fft2, GradientField, GrayImage, Kernel};
use crate::priors::WeightMap;

const X_STEP_REL_TOL: f64 = 1e-8;

/// Per-channel CG record of the quadratic objective
/// `||g - k * x||^2 + sum_i w_i x_i^2`, one value per iterate.
#[derive(Debug, Clone, Default)]
pub struct XStepTrace {
    pub objective: [Vec<f64>; 2],
}

/// Solves `(K^T K + diag(w)) x = K^T g` for each gradient channel, with `K` the
/// circular convolution by `k` on the grid of `grad_y`.
///
/// CG starts from zero and runs `cg_iters` iterations or until the relative
/// residual drops below `1e-8`.
pub fn x_step(
    grad_y: &GradientField,
    k: &Kernel,
    w: &WeightMap,
    cg_iters: usize,
) -> Result<GradientField> {
    let plan = Fft2::new(grad_y.width(), grad_y.height());
    x_step_with(&plan, grad_y, k, w, cg_iters, None)
}

/// [`x_step`] that also records the objective after every CG iterate.
pub fn x_step_traced(
    grad_y: &GradientField,
    k: &Kernel,
    w: &WeightMap,
    cg_iters: usize,
) -> Result<(GradientField, XStepTrace)> {
    let plan = Fft2::new(grad_y.width(), grad_y.height());
    let mut trace = XStepTrace::default();
    let field = x_step_with(&plan, grad_y, k, w, cg_iters, Some(&mut trace))?;
    Ok((field, trace))
}

pub(crate) fn x_step_with(
    plan: &Fft2,
    grad_y: &GradientField,
    k: &Kernel,
    w: &WeightMap,
    cg_iters: usize,
    mut trace: Option<&mut XStepTrace>,
) -> Result<GradientField> {
    if w.dims() != grad_y.dims() {
        return Err(Error::dim("weight map does not match gradient field"));
    }
    if !grad_y.is_finite() || w.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite x-step input".into()));
    }
    let transfer = plan.kernel_transfer(k)?;
    let power: Vec<Complex64> = transfer
        .iter()
        .map(|t| Complex64::new(t.norm_sqr(), 0.0))
        .collect();
    let weights = w.data();
    let (width, height) = grad_y.dims();
    let settings = CgSettings::new(cg_iters, X_STEP_REL_TOL);

    let mut channels = Vec::with_capacity(2);
    for (ci, g) in grad_y.channels().into_iter().enumerate() {
        let rhs = plan.filter_real(g.data(), &transfer, true);
        let mut x = vec![0.0; g.len()];
        let apply = |v: &[f64], out: &mut [f64]| {
            let ktk = plan.filter_real(v, &power, false);
            for i in 0..v.len() {
                out[i] = ktk[i] + weights[i] * v[i];
            }
        };
        match trace.as_deref_mut() {
            Some(t) => {
                let log = &mut t.objective[ci];
                cg::solve_observed(apply, &rhs, &mut x, settings, |_, xi| {
                    let kx = plan.filter_real(xi, &transfer, false);
                    let data: f64 = g.data().iter().zip(&kx).map(|(a, b)| (a - b).powi(2)).sum();
                    let reg: f64 = xi.iter().zip(weights).map(|(x, w)| w * x * x).sum();
                    log.push(data + reg);
                });
            }
            None => {
                cg::solve(apply, &rhs, &mut x, settings);
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("x-step diverged".into()));
        }
        channels.push(GrayImage::from_vec_unchecked(width, height, x));
    }
    let dv = channels.pop().expect("two channels");
    let dh = channels.pop().expect("two channels");
    GradientField::new(dh, dv)
}

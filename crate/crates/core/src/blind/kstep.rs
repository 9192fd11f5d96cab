//! Kernel update: least squares on both gradient channels with a
//! frequency-weighted ridge and a `sum |k_i|^(1/2)` sparsity term, solved by
//! IRLS with CG inner solves carried out in the Fourier domain.

use rustfft::num_complex::Complex64;

use super::SolverConfig;
use crate::cg::{self, CgSettings};
use crate::error::{Error, Result};
use crate::image::{Fft2, GradientField, Kernel};
use crate::priors::{FreqWeightMap, SmoothedPower};

const K_STEP_REL_TOL: f64 = 1e-12;

/// Raw (unprojected) kernel and the IRLS objective before and after every
/// outer iteration.
#[derive(Debug, Clone)]
pub struct KStepOutcome {
    pub kernel: Kernel,
    pub objective: Vec<f64>,
}

/// Precomputed spectra for one kernel update on a fixed grid.
pub(crate) struct KernelProblem<'a> {
    plan: &'a Fft2,
    size: usize,
    /// Grid index of every support tap, row-major over the `size x size` support.
    taps: Vec<usize>,
    /// `sum_c |X_c|^2 + alpha`.
    normal: Vec<Complex64>,
    x_spec: [Vec<Complex64>; 2],
    y_spec: [Vec<Complex64>; 2],
    alpha: &'a [f64],
    /// `P_S sum_c X_c^T g_c`.
    rhs: Vec<f64>,
    penalty: SmoothedPower,
    lambda: f64,
}

impl<'a> KernelProblem<'a> {
    pub(crate) fn new(
        plan: &'a Fft2,
        grad_y: &GradientField,
        grad_x: &GradientField,
        fw: &'a FreqWeightMap,
        lambda: f64,
        eps: f64,
        size: usize,
    ) -> Result<Self> {
        grad_y.dh().check_same_dims(grad_x.dh())?;
        let (w, h) = grad_y.dims();
        if (plan.width(), plan.height()) != (w, h) || (fw.width(), fw.height()) != (w, h) {
            return Err(Error::dim("k-step grids disagree"));
        }
        if size % 2 == 0 || size > w || size > h {
            return Err(Error::dim(format!("kernel support {size} invalid for {w}x{h} grid")));
        }
        if !grad_x.is_finite() || !grad_y.is_finite() {
            return Err(Error::Numeric("non-finite k-step input".into()));
        }
        if grad_x.norm_sq() == 0.0 {
            return Err(Error::IllPosed(
                "latent gradients are identically zero; keep the previous kernel".into(),
            ));
        }
        let c = size / 2;
        let taps = (0..size * size)
            .map(|t| {
                let (a, b) = (t / size, t % size);
                let i = (a as isize - c as isize).rem_euclid(h as isize) as usize;
                let j = (b as isize - c as isize).rem_euclid(w as isize) as usize;
                i * w + j
            })
            .collect();
        let x_spec = [
            plan.forward_real(grad_x.dh().data()),
            plan.forward_real(grad_x.dv().data()),
        ];
        let y_spec = [
            plan.forward_real(grad_y.dh().data()),
            plan.forward_real(grad_y.dv().data()),
        ];
        let alpha = fw.alpha();
        let normal = (0..w * h)
            .map(|i| {
                Complex64::new(
                    x_spec[0][i].norm_sqr() + x_spec[1][i].norm_sqr() + alpha[i],
                    0.0,
                )
            })
            .collect();
        let mut cross: Vec<Complex64> = (0..w * h)
            .map(|i| x_spec[0][i].conj() * y_spec[0][i] + x_spec[1][i].conj() * y_spec[1][i])
            .collect();
        plan.inverse_in_place(&mut cross);
        let mut problem = Self {
            plan,
            size,
            taps,
            normal,
            x_spec,
            y_spec,
            alpha,
            rhs: Vec::new(),
            penalty: SmoothedPower::new(0.5, eps)?,
            lambda,
        };
        problem.rhs = problem.taps.iter().map(|&t| cross[t].re).collect();
        Ok(problem)
    }

    fn embed_spectrum(&self, k: &[f64]) -> Vec<Complex64> {
        let mut grid = vec![Complex64::default(); self.plan.len()];
        for (&t, &v) in self.taps.iter().zip(k) {
            grid[t].re += v;
        }
        self.plan.forward_in_place(&mut grid);
        grid
    }

    /// Quadratic part `(X^T X + R) k` restricted to the support.
    fn apply_quadratic(&self, k: &[f64], out: &mut [f64]) {
        let mut spec = self.embed_spectrum(k);
        for (s, n) in spec.iter_mut().zip(&self.normal) {
            *s *= n;
        }
        self.plan.inverse_in_place(&mut spec);
        for (o, &t) in out.iter_mut().zip(&self.taps) {
            *o = spec[t].re;
        }
    }

    /// Data term plus the Parseval-scaled frequency ridge.
    pub(crate) fn quadratic_objective(&self, k: &[f64]) -> f64 {
        let spec = self.embed_spectrum(k);
        let n = self.plan.len() as f64;
        let mut total = 0.0;
        for i in 0..spec.len() {
            for c in 0..2 {
                total += (self.y_spec[c][i] - self.x_spec[c][i] * spec[i]).norm_sqr();
            }
            total += self.alpha[i] * spec[i].norm_sqr();
        }
        total / n
    }

    pub(crate) fn objective(&self, k: &[f64]) -> f64 {
        let sparse: f64 = k.iter().map(|&v| self.penalty.value(v)).sum();
        self.quadratic_objective(k) + self.lambda * sparse
    }

    pub(crate) fn solve(
        &self,
        init: &[f64],
        outer: usize,
        cg_iters: usize,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut k = init.to_vec();
        let mut objective = vec![self.objective(&k)];
        let settings = CgSettings::new(cg_iters, K_STEP_REL_TOL);
        for _ in 0..outer {
            let v: Vec<f64> = k
                .iter()
                .map(|&ki| self.lambda * self.penalty.weight(ki))
                .collect();
            cg::solve(
                |p, out| {
                    self.apply_quadratic(p, out);
                    for i in 0..p.len() {
                        out[i] += v[i] * p[i];
                    }
                },
                &self.rhs,
                &mut k,
                settings,
            );
            objective.push(self.objective(&k));
        }
        (k, objective)
    }

    pub(crate) fn size(&self) -> usize {
        self.size
    }
}

/// IRLS kernel update on the grid of `grad_y`, warm-started from `init`.
///
/// The support is `cfg.kernel_size`; `init` is resized to it if needed.
/// Returns the raw minimizer; callers project it afterwards.
pub fn k_step(
    grad_y: &GradientField,
    grad_x: &GradientField,
    fw: &FreqWeightMap,
    lambda_l05: f64,
    cfg: &SolverConfig,
    init: &Kernel,
) -> Result<KStepOutcome> {
    let plan = Fft2::new(grad_y.width(), grad_y.height());
    k_step_with(&plan, grad_y, grad_x, fw, lambda_l05, cfg, init)
}

pub(crate) fn k_step_with(
    plan: &Fft2,
    grad_y: &GradientField,
    grad_x: &GradientField,
    fw: &FreqWeightMap,
    lambda_l05: f64,
    cfg: &SolverConfig,
    init: &Kernel,
) -> Result<KStepOutcome> {
    let size = cfg.kernel_size;
    let problem = KernelProblem::new(plan, grad_y, grad_x, fw, lambda_l05, cfg.irls_eps, size)?;
    let start = if init.width() == size && init.height() == size {
        init.clone()
    } else {
        init.resized(size, size)?
    };
    let (k, objective) = problem.solve(start.data(), cfg.irls_outer, cfg.cg_iters_k);
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("k-step diverged".into()));
    }
    Ok(KStepOutcome {
        kernel: Kernel::square(problem.size(), k)?,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{convolve, ConvMode, GrayImage};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(w: usize, h: usize, rng: &mut ChaCha8Rng) -> GradientField {
        GradientField::new(
            GrayImage::from_fn(w, h, |_, _| rng.random::<f64>() - 0.5),
            GrayImage::from_fn(w, h, |_, _| rng.random::<f64>() - 0.5),
        )
        .unwrap()
    }

    fn blur_field(g: &GradientField, k: &Kernel) -> GradientField {
        GradientField::new(
            convolve(g.dh(), k, ConvMode::SameCircular).unwrap(),
            convolve(g.dv(), k, ConvMode::SameCircular).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn exact_recovery_without_regularization() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let gx = random_field(16, 16, &mut rng);
        let k0 = Kernel::square(3, (0..9).map(|_| rng.random::<f64>()).collect())
            .unwrap()
            .project();
        let gy = blur_field(&gx, &k0);
        let fw = FreqWeightMap::uniform(16, 16, 0.0).unwrap();
        let cfg = SolverConfig::with_kernel_size(3);
        let out = k_step(&gy, &gx, &fw, 0.0, &cfg, &Kernel::delta(3).unwrap()).unwrap();
        for (a, b) in out.kernel.data().iter().zip(k0.data()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn sharp_input_gives_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let gx = random_field(16, 16, &mut rng);
        let fw = FreqWeightMap::uniform(16, 16, 1e-3).unwrap();
        let cfg = SolverConfig::with_kernel_size(5);
        let out = k_step(&gx, &gx, &fw, 1e-4, &cfg, &Kernel::horizontal_pair(5).unwrap()).unwrap();
        let k = out.kernel.project();
        assert!(k.get(2, 2) > 0.95, "{:?}", k.data());
    }

    #[test]
    fn zero_latent_is_ill_posed() {
        let gy = GradientField::zeros(8, 8);
        let fw = FreqWeightMap::uniform(8, 8, 1.0).unwrap();
        let err = k_step(&gy, &gy, &fw, 1e-3, &SolverConfig::with_kernel_size(3), &Kernel::delta(3).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::IllPosed(_)));
    }

    #[test]
    fn irls_objective_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gx = random_field(20, 20, &mut rng);
        let k0 = Kernel::square(5, (0..25).map(|_| rng.random::<f64>().powi(4)).collect())
            .unwrap()
            .project();
        let gy = blur_field(&gx, &k0);
        let fw = FreqWeightMap::uniform(20, 20, 0.5).unwrap();
        let cfg = SolverConfig {
            irls_outer: 8,
            ..SolverConfig::with_kernel_size(5)
        };
        let out = k_step(&gy, &gx, &fw, 0.05, &cfg, &Kernel::delta(5).unwrap()).unwrap();
        assert_eq!(out.objective.len(), 9);
        for pair in out.objective.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-8 * pair[0].abs().max(1.0), "{:?}", out.objective);
        }
    }
}

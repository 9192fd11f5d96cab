use crate::error::{Error, Result};

/// Parameters of the blind kernel estimator.
///
/// Defaults: `lambda_l05 = 6e-3`, `lambda_ap = 200`, patch side 5,
/// 30 CG iterations per x-update and 20 alternations per pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Kernel support at the finest level (odd).
    pub kernel_size: usize,
    /// Weight of the `sum |k_i|^(1/2)` sparsity term.
    pub lambda_l05: f64,
    /// Scale of the frequency-dependent ridge.
    pub lambda_ap: f64,
    pub cg_iters_x: usize,
    pub alt_iters: usize,
    pub irls_outer: usize,
    pub irls_eps: f64,
    pub cg_iters_k: usize,
    /// Side of the patch used by the image weights (odd).
    pub patch_r: usize,
    pub pyramid_ratio: f64,
    /// Kernel support at the coarsest level (odd).
    pub min_kernel: usize,
    /// Divide the residual energy by the pixel count before using it as the
    /// weight offset. With `false` the raw sum is used.
    pub eta_per_pixel: bool,
    /// Multiplier on the per-pixel residual offset.
    pub eta_scale: f64,
    /// Never let the weight offset grow between alternations of one level.
    pub eta_monotone: bool,
    /// Multiplier applied to the image weights in the x-update.
    pub weight_scale: f64,
    /// Intensity scale of `y` when its spectrum sets the ridge weights.
    pub spectrum_scale: f64,
    /// After each kernel update, taps below this fraction of the largest tap
    /// are zeroed (0 disables).
    pub kernel_threshold: f64,
    /// Replace the adaptive ridge weights with a constant of equal mean.
    pub uniform_ridge: bool,
    /// Keep a kernel snapshot for every alternation in the trace.
    pub trace_kernels: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kernel_size: 11,
            lambda_l05: 6e-3,
            lambda_ap: 200.0,
            cg_iters_x: 30,
            alt_iters: 20,
            irls_outer: 4,
            irls_eps: 1e-4,
            cg_iters_k: 25,
            patch_r: 5,
            pyramid_ratio: std::f64::consts::FRAC_1_SQRT_2,
            min_kernel: 3,
            eta_per_pixel: true,
            eta_scale: 1.0,
            eta_monotone: true,
            weight_scale: 30.0,
            spectrum_scale: 255.0,
            kernel_threshold: 0.05,
            uniform_ridge: false,
            trace_kernels: false,
        }
    }
}

impl SolverConfig {
    pub fn with_kernel_size(kernel_size: usize) -> Self {
        Self {
            kernel_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("cg_iters_x", self.cg_iters_x),
            ("alt_iters", self.alt_iters),
            ("irls_outer", self.irls_outer),
            ("cg_iters_k", self.cg_iters_k),
            ("patch_r", self.patch_r),
            ("kernel_size", self.kernel_size),
            ("min_kernel", self.min_kernel),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::param(format!("{name} must be >= 1")));
            }
        }
        for (name, v) in [
            ("kernel_size", self.kernel_size),
            ("min_kernel", self.min_kernel),
            ("patch_r", self.patch_r),
        ] {
            if v % 2 == 0 {
                return Err(Error::param(format!("{name} must be odd, got {v}")));
            }
        }
        if self.min_kernel > self.kernel_size {
            return Err(Error::param("min_kernel exceeds kernel_size"));
        }
        if !(self.pyramid_ratio > 0.0 && self.pyramid_ratio < 1.0) {
            return Err(Error::param(format!(
                "pyramid_ratio {} not in (0, 1)",
                self.pyramid_ratio
            )));
        }
        if !(0.0..1.0).contains(&self.kernel_threshold) {
            return Err(Error::param("kernel_threshold must be in [0, 1)"));
        }
        if !(self.weight_scale > 0.0) || !(self.eta_scale > 0.0) || !(self.spectrum_scale > 0.0) {
            return Err(Error::param("weight_scale, eta_scale and spectrum_scale must be positive"));
        }
        if !(self.lambda_l05 >= 0.0) || !(self.lambda_ap > 0.0) || !(self.irls_eps > 0.0) {
            return Err(Error::param(
                "lambda_l05 must be >= 0, lambda_ap and irls_eps > 0",
            ));
        }
        Ok(())
    }

    /// Kernel support at pyramid level `level` (0 is the finest): the odd
    /// integer nearest to `kernel_size * ratio^level`, floored at `min_kernel`.
    pub fn kernel_size_at(&self, level: usize) -> usize {
        let scaled = self.kernel_size as f64 * self.pyramid_ratio.powi(level as i32);
        let odd = 2 * ((scaled - 1.0) / 2.0).round().max(0.0) as usize + 1;
        odd.max(self.min_kernel)
    }

    /// Number of pyramid levels: enough for the coarsest kernel to reach `min_kernel`.
    pub fn level_count(&self) -> usize {
        let mut level = 0;
        while self.kernel_size_at(level) > self.min_kernel {
            level += 1;
        }
        level + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SolverConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.patch_r, 5);
        assert_eq!(cfg.lambda_l05, 6e-3);
        assert_eq!(cfg.lambda_ap, 200.0);
        assert_eq!(cfg.cg_iters_x, 30);
        assert_eq!(cfg.alt_iters, 20);
    }

    #[test]
    fn level_sizes() {
        let cfg = SolverConfig::with_kernel_size(11);
        let sizes: Vec<_> = (0..cfg.level_count()).map(|l| cfg.kernel_size_at(l)).collect();
        assert_eq!(sizes, vec![11, 7, 5, 3]);
        let cfg = SolverConfig::with_kernel_size(7);
        let sizes: Vec<_> = (0..cfg.level_count()).map(|l| cfg.kernel_size_at(l)).collect();
        assert_eq!(sizes, vec![7, 5, 3]);
        assert_eq!(SolverConfig::with_kernel_size(3).level_count(), 1);
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            SolverConfig { kernel_size: 8, ..Default::default() },
            SolverConfig { min_kernel: 13, ..Default::default() },
            SolverConfig { pyramid_ratio: 1.0, ..Default::default() },
            SolverConfig { alt_iters: 0, ..Default::default() },
            SolverConfig { patch_r: 4, ..Default::default() },
            SolverConfig { kernel_threshold: 1.0, ..Default::default() },
            SolverConfig { weight_scale: 0.0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}

use log::debug;

use super::kstep::k_step_with;
use super::xstep::x_step_with;
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::image::{
    downsample, gradient, pad_replicate_taper, upsample_kernel, Fft2, GradientField, GrayImage,
    Kernel,
};
use crate::priors::{freq_weights, patch_weights, FreqWeightMap, WeightMap};

/// Axis-aligned rectangle of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub row: usize,
    pub col: usize,
    pub width: usize,
    pub height: usize,
}

impl Region {
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            row: 0,
            col: 0,
            width,
            height,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// `||grad y - grad x * k||^2` on the inner region before the x-update.
    pub residual: f64,
    /// Weight offset derived from `residual`.
    pub eta: f64,
    pub weight_mean: f64,
    pub weight_min: f64,
    /// IRLS objective before and after each outer iteration of the k-update.
    pub kstep_objective: Vec<f64>,
    pub kernel: Option<Kernel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrace {
    pub level: usize,
    pub kernel_size: usize,
    pub width: usize,
    pub height: usize,
    pub iterations: Vec<IterationRecord>,
    pub final_kernel: Kernel,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimationTrace {
    /// Coarsest level first.
    pub levels: Vec<LevelTrace>,
}

impl EstimationTrace {
    /// Largest relative increase of any k-update objective between consecutive
    /// IRLS iterations (zero when all are non-increasing).
    pub fn worst_kstep_increase(&self) -> f64 {
        self.levels
            .iter()
            .flat_map(|l| &l.iterations)
            .flat_map(|it| it.kstep_objective.windows(2))
            .map(|p| (p[1] - p[0]) / p[0].abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

/// Zeroes taps below `rel * max` and renormalizes.
fn suppress_small_taps(k: &Kernel, rel: f64) -> Kernel {
    let floor = rel * k.max();
    let data = k.data().iter().map(|&v| if v < floor { 0.0 } else { v }).collect();
    Kernel::new(k.width(), k.height(), data)
        .expect("same shape")
        .project()
}

/// Residual energy of both channels inside `region`, with circular convolution
/// on the grid of `grad_y`.
pub fn residual_energy(
    grad_y: &GradientField,
    grad_x: &GradientField,
    k: &Kernel,
    region: Region,
) -> Result<f64> {
    let plan = Fft2::new(grad_y.width(), grad_y.height());
    residual_energy_with(&plan, grad_y, grad_x, k, region)
}

fn residual_energy_with(
    plan: &Fft2,
    grad_y: &GradientField,
    grad_x: &GradientField,
    k: &Kernel,
    region: Region,
) -> Result<f64> {
    grad_y.dh().check_same_dims(grad_x.dh())?;
    let (w, h) = grad_y.dims();
    if region.row + region.height > h || region.col + region.width > w {
        return Err(Error::dim("residual region exceeds grid"));
    }
    let transfer = plan.kernel_transfer(k)?;
    let mut total = 0.0;
    for (gy, gx) in grad_y.channels().into_iter().zip(grad_x.channels()) {
        let pred = plan.filter_real(gx.data(), &transfer, false);
        for i in region.row..region.row + region.height {
            for j in region.col..region.col + region.width {
                let r = gy.get(i, j) - pred[i * w + j];
                total += r * r;
            }
        }
    }
    Ok(total)
}

/// Coarse-to-fine blind kernel estimation.
///
/// At every level the blurred image is downsampled from the finest one,
/// replicate-padded by half the kernel width with a cosine taper and treated
/// as periodic. The frequency weights are computed once per level; each
/// alternation then refreshes the image weights, updates the latent
/// gradients, updates and projects the kernel.
pub fn estimate_kernel(y: &GrayImage, cfg: &SolverConfig) -> Result<(Kernel, EstimationTrace)> {
    cfg.validate()?;
    let levels = cfg.level_count();
    let coarsest = levels - 1;
    let coarse_scale = cfg.pyramid_ratio.powi(coarsest as i32);
    let coarse_w = (y.width() as f64 * coarse_scale).round() as usize;
    let coarse_h = (y.height() as f64 * coarse_scale).round() as usize;
    if coarse_w.min(coarse_h) <= 3 * cfg.min_kernel
        || y.width().min(y.height()) <= cfg.kernel_size
    {
        return Err(Error::dim(format!(
            "image {}x{} too small for kernel size {} (coarsest level {}x{})",
            y.width(),
            y.height(),
            cfg.kernel_size,
            coarse_w,
            coarse_h
        )));
    }
    if !y.is_finite() {
        return Err(Error::Numeric("non-finite input image".into()));
    }

    let mut trace = EstimationTrace::default();
    let mut k = Kernel::horizontal_pair(cfg.kernel_size_at(coarsest).max(3))?;
    for level in (0..levels).rev() {
        let size = cfg.kernel_size_at(level);
        if k.size() != size {
            k = upsample_kernel(&k, size)?;
        }
        let y_level = if level == 0 {
            y.clone()
        } else {
            downsample(y, cfg.pyramid_ratio.powi(level as i32))?
        };
        let level_cfg = SolverConfig {
            kernel_size: size,
            ..cfg.clone()
        };
        let (k_new, level_trace) = run_level(&y_level, k, &level_cfg, level)?;
        k = k_new;
        trace.levels.push(level_trace);
    }
    Ok((k, trace))
}

fn run_level(
    y: &GrayImage,
    mut k: Kernel,
    cfg: &SolverConfig,
    level: usize,
) -> Result<(Kernel, LevelTrace)> {
    let size = cfg.kernel_size;
    let padded = pad_replicate_taper(y, size / 2);
    let (gw, gh) = padded.image.dims();
    let plan = Fft2::new(gw, gh);
    let grad_y = gradient(&padded.image)?;
    let scaled = padded.image.map(|v| v * cfg.spectrum_scale);
    let mut fw = freq_weights(&scaled, cfg.lambda_ap, gw, gh)?;
    if cfg.uniform_ridge {
        fw = FreqWeightMap::uniform(gw, gh, fw.mean())?;
    }
    let inner = Region {
        row: padded.pad,
        col: padded.pad,
        width: padded.inner_width,
        height: padded.inner_height,
    };

    let mut grad_x = grad_y.clone();
    let mut iterations = Vec::with_capacity(cfg.alt_iters);
    let mut prev_eta = f64::INFINITY;
    for it in 0..cfg.alt_iters {
        let residual = residual_energy_with(&plan, &grad_y, &grad_x, &k, inner)?;
        let raw_eta = if cfg.eta_per_pixel {
            cfg.eta_scale * residual / (inner.width * inner.height) as f64
        } else {
            residual
        };
        let eta = if cfg.eta_monotone { raw_eta.min(prev_eta) } else { raw_eta };
        prev_eta = eta;
        let mut weights = patch_weights(&grad_x, eta, cfg.patch_r)?;
        if cfg.weight_scale != 1.0 {
            weights = WeightMap::from_image(weights.weights().map(|v| v * cfg.weight_scale))?;
        }
        grad_x = x_step_with(&plan, &grad_y, &k, &weights, cfg.cg_iters_x, None)?;
        let kstep_objective =
            match k_step_with(&plan, &grad_y, &grad_x, &fw, cfg.lambda_l05, cfg, &k) {
                Ok(out) => {
                    k = out.kernel.project();
                    if cfg.kernel_threshold > 0.0 {
                        k = suppress_small_taps(&k, cfg.kernel_threshold);
                    }
                    out.objective
                }
                Err(Error::IllPosed(msg)) => {
                    debug!("level {level} iteration {it}: {msg}");
                    Vec::new()
                }
                Err(e) => return Err(e),
            };
        debug!(
            "level {level} iter {it}: eta={eta:.4e} w_mean={:.3}",
            weights.mean()
        );
        iterations.push(IterationRecord {
            residual,
            eta,
            weight_mean: weights.mean(),
            weight_min: weights.min(),
            kstep_objective,
            kernel: cfg.trace_kernels.then(|| k.clone()),
        });
    }
    Ok((
        k.clone(),
        LevelTrace {
            level,
            kernel_size: size,
            width: y.width(),
            height: y.height(),
            iterations,
            final_kernel: k,
        },
    ))
}

//! Reference algorithms: plain alternating MAP with a heavy-tailed gradient
//! prior, and an Osher-Rudin style shock filter.

use rustfft::num_complex::Complex64;

use crate::blind::{KernelProblem, Region};
use crate::cg::{self, CgSettings};
use crate::error::{Error, Result};
use crate::image::{pad_replicate_taper, gradient, Fft2, GradientField, GrayImage, Kernel};
use crate::priors::{FreqWeightMap, SmoothedPower};

const MAP_EPS: f64 = 1e-4;
const MAP_IRLS: usize = 3;
const MAP_CG_ITERS: usize = 30;
const MAP_K_CG_ITERS: usize = 200;
const MAP_K_BACKTRACK: usize = 12;
/// Ridge on the kernel update, only there to keep the normal equations invertible.
const MAP_K_RIDGE: f64 = 1e-6;

/// `lambda ||grad_y - grad_x * k||^2 + sum_i |grad_x_i|^alpha` with circular
/// convolution on the grid of `grad_y`; both sums run over `region` when given.
pub fn joint_cost(
    grad_y: &GradientField,
    grad_x: &GradientField,
    k: &Kernel,
    alpha: f64,
    lambda: f64,
    region: Option<Region>,
) -> Result<f64> {
    joint_cost_with(grad_y, grad_x, k, lambda, region, |t| t.abs().powf(alpha))
}

fn joint_cost_with(
    grad_y: &GradientField,
    grad_x: &GradientField,
    k: &Kernel,
    lambda: f64,
    region: Option<Region>,
    penalty: impl Fn(f64) -> f64,
) -> Result<f64> {
    grad_y.dh().check_same_dims(grad_x.dh())?;
    let (w, h) = grad_y.dims();
    let region = region.unwrap_or(Region::full(w, h));
    if region.row + region.height > h || region.col + region.width > w {
        return Err(Error::dim("cost region exceeds grid"));
    }
    let plan = Fft2::new(w, h);
    let transfer = plan.kernel_transfer(k)?;
    let mut total = 0.0;
    for (gy, gx) in grad_y.channels().into_iter().zip(grad_x.channels()) {
        let pred = plan.filter_real(gx.data(), &transfer, false);
        for i in region.row..region.row + region.height {
            for j in region.col..region.col + region.width {
                let idx = i * w + j;
                total += lambda * (gy.data()[idx] - pred[idx]).powi(2) + penalty(gx.data()[idx]);
            }
        }
    }
    Ok(total)
}

/// IRLS for `lambda ||grad_y - x * k||^2 + sum_i |x_i|^alpha`, warm-started
/// from `init`, with `irls` reweightings of `cg_iters` CG iterations each.
pub fn naive_x_step(
    grad_y: &GradientField,
    k: &Kernel,
    init: &GradientField,
    alpha: f64,
    lambda: f64,
    irls: usize,
    cg_iters: usize,
) -> Result<GradientField> {
    grad_y.dh().check_same_dims(init.dh())?;
    let penalty = SmoothedPower::new(alpha, MAP_EPS)?;
    let (w, h) = grad_y.dims();
    let plan = Fft2::new(w, h);
    let transfer = plan.kernel_transfer(k)?;
    let power: Vec<Complex64> = transfer
        .iter()
        .map(|t| Complex64::new(lambda * t.norm_sqr(), 0.0))
        .collect();
    let settings = CgSettings::new(cg_iters, 1e-10);
    let mut out = Vec::with_capacity(2);
    for (gy, x0) in grad_y.channels().into_iter().zip(init.channels()) {
        let rhs: Vec<f64> = plan
            .filter_real(gy.data(), &transfer, true)
            .into_iter()
            .map(|v| lambda * v)
            .collect();
        let mut x = x0.data().to_vec();
        for _ in 0..irls {
            let weights: Vec<f64> = x.iter().map(|&t| penalty.weight(t)).collect();
            cg::solve(
                |v, o| {
                    let ktk = plan.filter_real(v, &power, false);
                    for i in 0..v.len() {
                        o[i] = ktk[i] + weights[i] * v[i];
                    }
                },
                &rhs,
                &mut x,
                settings,
            );
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("naive x-step diverged".into()));
        }
        out.push(GrayImage::from_vec_unchecked(w, h, x));
    }
    let dv = out.pop().expect("two channels");
    let dh = out.pop().expect("two channels");
    GradientField::new(dh, dv)
}

#[derive(Debug, Clone)]
pub struct NaiveMapResult {
    /// Latent gradients on the grid of `y`.
    pub grad_x: GradientField,
    pub kernel: Kernel,
    /// Smoothed joint cost at the start and after every half-step.
    pub cost: Vec<f64>,
}

/// Alternating minimization of the joint MAP cost, starting from
/// `grad_x = grad_y` and a two-tap horizontal kernel.
///
/// The kernel half-step is least squares (tiny ridge) followed by projection,
/// then a backtracking search from the current kernel towards that candidate
/// so the cost trace never increases.
pub fn naive_map(
    y: &GrayImage,
    alpha: f64,
    lambda: f64,
    iters: usize,
    kernel_size: usize,
) -> Result<NaiveMapResult> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param(format!("alpha {alpha} not in (0, 1]")));
    }
    if iters < 1 || !(lambda > 0.0) {
        return Err(Error::param("naive MAP needs iters >= 1 and lambda > 0"));
    }
    if kernel_size % 2 == 0 || kernel_size >= y.width().min(y.height()) {
        return Err(Error::param(format!("kernel size {kernel_size} invalid for this image")));
    }
    let penalty = SmoothedPower::new(alpha, MAP_EPS)?;
    let padded = pad_replicate_taper(y, kernel_size / 2);
    let (w, h) = padded.image.dims();
    let plan = Fft2::new(w, h);
    let grad_y = gradient(&padded.image)?;
    let ridge = FreqWeightMap::uniform(w, h, MAP_K_RIDGE)?;
    let cost = |gx: &GradientField, k: &Kernel| {
        joint_cost_with(&grad_y, gx, k, lambda, None, |t| penalty.value(t))
    };

    let mut k = Kernel::horizontal_pair(kernel_size)?;
    let mut grad_x = grad_y.clone();
    let mut trace = vec![cost(&grad_x, &k)?];
    for _ in 0..iters {
        grad_x = naive_x_step(&grad_y, &k, &grad_x, alpha, lambda, MAP_IRLS, MAP_CG_ITERS)?;
        let after_x = cost(&grad_x, &k)?;
        trace.push(after_x);
        let candidate = match KernelProblem::new(&plan, &grad_y, &grad_x, &ridge, 0.0, MAP_EPS, kernel_size) {
            Ok(problem) => {
                let (raw, _) = problem.solve(k.data(), 1, MAP_K_CG_ITERS);
                Some(Kernel::square(kernel_size, raw)?.project())
            }
            Err(Error::IllPosed(_)) => None,
            Err(e) => return Err(e),
        };
        let mut current = after_x;
        if let Some(c) = candidate {
            // convex combinations stay on the simplex; halve the step until the
            // cost does not rise
            let mut t = 1.0;
            for _ in 0..MAP_K_BACKTRACK {
                let data = k.data().iter().zip(c.data()).map(|(a, b)| a + t * (b - a)).collect();
                let trial = Kernel::square(kernel_size, data)?;
                let trial_cost = cost(&grad_x, &trial)?;
                if trial_cost <= after_x {
                    k = trial;
                    current = trial_cost;
                    break;
                }
                t *= 0.5;
            }
        }
        trace.push(current);
    }
    let grad_x = grad_x.window(padded.pad, padded.pad, y.width(), y.height())?;
    Ok(NaiveMapResult {
        grad_x,
        kernel: k,
        cost: trace,
    })
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Shock filter `x <- x - dt * sign(lap x) * |grad x|`.
///
/// The gradient magnitude uses minmod-limited one-sided differences and the
/// sign comes from the Laplacian of a `[1 2 1] / 4` smoothed copy, with a
/// dead zone of `1e-9`. Boundaries replicate. Samples stay within the input's
/// range.
pub fn shock_filter(image: &GrayImage, dt: f64, iters: usize) -> Result<GrayImage> {
    if !(dt > 0.0 && dt <= 0.5) || iters < 1 {
        return Err(Error::param(format!(
            "shock filter needs dt in (0, 0.5] and iters >= 1, got dt={dt} iters={iters}"
        )));
    }
    let (lo, hi) = (image.min(), image.max());
    let (w, h) = image.dims();
    let mut x = image.clone();
    for _ in 0..iters {
        let g = |i: isize, j: isize| x.get_clamped(i, j);
        let rows = GrayImage::from_fn(w, h, |i, j| {
            let (i, j) = (i as isize, j as isize);
            0.25 * g(i, j - 1) + 0.5 * g(i, j) + 0.25 * g(i, j + 1)
        });
        let smooth = GrayImage::from_fn(w, h, |i, j| {
            let (i, j) = (i as isize, j as isize);
            0.25 * rows.get_clamped(i - 1, j) + 0.5 * rows.get_clamped(i, j) + 0.25 * rows.get_clamped(i + 1, j)
        });
        let next = GrayImage::from_fn(w, h, |i, j| {
            let (i, j) = (i as isize, j as isize);
            let s = |a: isize, b: isize| smooth.get_clamped(a, b);
            let lap = s(i - 1, j) + s(i + 1, j) + s(i, j - 1) + s(i, j + 1) - 4.0 * s(i, j);
            let c = g(i, j);
            let gx = minmod(g(i, j + 1) - c, c - g(i, j - 1));
            let gy = minmod(g(i + 1, j) - c, c - g(i - 1, j));
            let mag = (gx * gx + gy * gy).sqrt();
            let sign = if lap > 1e-9 {
                1.0
            } else if lap < -1e-9 {
                -1.0
            } else {
                0.0
            };
            (c - dt * sign * mag).clamp(lo, hi)
        });
        x = next;
    }
    Ok(x)
}

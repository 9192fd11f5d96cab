//! Numerical checks of the kernel-recovery error bound: the local convolution
//! matrix, its smallest singular value on zero-mean kernels, the sum-constrained
//! ridge estimate of the kernel and the measured bound constant.
//!
//! Kernels are `s x s` with odd `s`; images are zero outside their domain.
//! `Omega_S` is the set of pixels within Chebyshev distance `s` of `Omega`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bench::{motion_kernel, rng_from_seed};
use crate::error::{Error, Result};
use crate::image::{GrayImage, Kernel};

pub type Pixel = (usize, usize);

/// Relative eigenvalue floor below which the ridge system counts as singular.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PropInstance {
    pub x0: GrayImage,
    pub k0: Kernel,
    pub noise: GrayImage,
    pub omega: Vec<Pixel>,
    pub lambda: f64,
    /// Candidate approximation of `x0`; only its values on `omega` are used.
    pub x_approx: GrayImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub epsilon: f64,
    pub gamma: f64,
    pub delta: f64,
    pub lambda: f64,
    /// Noise norm over `Omega_S`.
    pub noise_norm_omega: f64,
    pub k_hat_error: f64,
    pub k0_norm: f64,
    /// `max(epsilon * gamma / delta, lambda)`.
    pub bound_c_big: f64,
    /// `noise_norm_omega * gamma / delta`.
    pub bound_c_small: f64,
    /// `bound_c_big * ||k0|| + bound_c_small`.
    pub bound: f64,
    /// Smallest `M` with `k_hat_error <= M * bound`.
    pub holds_with_constant: f64,
}

fn side(s: usize) -> Result<usize> {
    if s == 0 || s % 2 == 0 {
        return Err(Error::param(format!("support side must be odd, got {s}")));
    }
    Ok(s)
}

/// `sum_a k[a] x[j - a + c]` at pixel `j`, zero outside the domain.
fn conv_at(x: &GrayImage, k: &[f64], s: usize, j: Pixel) -> f64 {
    let c = (s / 2) as isize;
    let mut acc = 0.0;
    for a in 0..s {
        for b in 0..s {
            let r = j.0 as isize - a as isize + c;
            let q = j.1 as isize - b as isize + c;
            if r >= 0 && q >= 0 && (r as usize) < x.height() && (q as usize) < x.width() {
                acc += k[a * s + b] * x.get(r as usize, q as usize);
            }
        }
    }
    acc
}

/// Zero-boundary convolution of `x` with `k` over the whole domain.
pub fn convolve_zero(x: &GrayImage, k: &Kernel) -> Result<GrayImage> {
    if !k.is_square() {
        return Err(Error::dim("kernel must be square"));
    }
    let s = k.width();
    Ok(GrayImage::from_fn(x.width(), x.height(), |i, j| conv_at(x, k.data(), s, (i, j))))
}

fn check_in_domain(img: &GrayImage, omega: &[Pixel]) -> Result<()> {
    if omega.is_empty() {
        return Err(Error::param("omega is empty"));
    }
    for &(i, j) in omega {
        if i >= img.height() || j >= img.width() {
            return Err(Error::Domain(format!("pixel ({i}, {j}) outside the image")));
        }
    }
    Ok(())
}

/// Border distance of `p` in pixels (0 on the outermost ring).
fn border_distance(img: &GrayImage, p: Pixel) -> usize {
    p.0.min(p.1)
        .min(img.height() - 1 - p.0)
        .min(img.width() - 1 - p.1)
}

/// Rows are the pixels of `omega`; row `j` holds the `s x s` window of `x0`
/// around `j` so that `A vec(k) = (x0 * k)` on `omega`. Every window must lie
/// inside the image.
pub fn build_window_matrix(x0: &GrayImage, omega: &[Pixel], s: usize) -> Result<DMatrix<f64>> {
    let s = side(s)?;
    check_in_domain(x0, omega)?;
    let c = s / 2;
    let mut a = DMatrix::zeros(omega.len(), s * s);
    for (row, &j) in omega.iter().enumerate() {
        if border_distance(x0, j) < c {
            return Err(Error::Domain(format!(
                "window of side {s} around ({}, {}) leaves the image",
                j.0, j.1
            )));
        }
        for t in 0..s * s {
            let (p, q) = (t / s, t % s);
            a[(row, t)] = x0.get(j.0 + c - p, j.1 + c - q);
        }
    }
    Ok(a)
}

/// Orthonormal basis of the zero-sum subspace of `R^n` (Helmert contrasts),
/// one vector per column.
pub fn zero_mean_basis(n: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(n, n.saturating_sub(1));
    for col in 0..n.saturating_sub(1) {
        let m = (col + 1) as f64;
        let scale = 1.0 / (m * (m + 1.0)).sqrt();
        for row in 0..=col {
            b[(row, col)] = scale;
        }
        b[(col + 1, col)] = -m * scale;
    }
    b
}

/// `inf ||A v||` over unit zero-sum `v`: the smallest singular value of `A B`.
/// Infinite when there are no zero-sum directions (a single column).
pub fn delta_min(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::param("matrix is empty"));
    }
    if a.ncols() == 1 {
        return Ok(f64::INFINITY);
    }
    let ab = a * zero_mean_basis(a.ncols());
    if ab.nrows() < ab.ncols() {
        return Ok(0.0);
    }
    let sv = ab.singular_values();
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min).max(0.0))
}

/// Pixels within Chebyshev distance `s` of `omega`, clipped to the domain,
/// in row-major order.
pub fn omega_s(width: usize, height: usize, omega: &[Pixel], s: usize) -> Vec<Pixel> {
    let mut mask = vec![false; width * height];
    for &(i, j) in omega {
        for r in i.saturating_sub(s)..=(i + s).min(height - 1) {
            for q in j.saturating_sub(s)..=(j + s).min(width - 1) {
                mask[r * width + q] = true;
            }
        }
    }
    (0..width * height)
        .filter(|&t| mask[t])
        .map(|t| (t / width, t % width))
        .collect()
}

/// `x` on `omega`, zero elsewhere.
pub fn restrict(x: &GrayImage, omega: &[Pixel]) -> Result<GrayImage> {
    check_in_domain(x, omega)?;
    let mut out = GrayImage::zeros(x.width(), x.height());
    for &(i, j) in omega {
        out.set(i, j, x.get(i, j));
    }
    Ok(out)
}

fn constrained_ridge_on(
    y: &GrayImage,
    x_tilde: &GrayImage,
    rows: &[Pixel],
    s: usize,
    lambda: f64,
) -> Result<Kernel> {
    if !(lambda >= 0.0) {
        return Err(Error::param("lambda must be >= 0"));
    }
    y.check_same_dims(x_tilde)?;
    let n = s * s;
    let mut m = DMatrix::zeros(rows.len(), n);
    let mut unit = vec![0.0; n];
    for t in 0..n {
        unit[t] = 1.0;
        for (r, &p) in rows.iter().enumerate() {
            m[(r, t)] = conv_at(x_tilde, &unit, s, p);
        }
        unit[t] = 0.0;
    }
    let target = DVector::from_iterator(rows.len(), rows.iter().map(|&(i, j)| y.get(i, j)));
    // k = 1/n + B z, and B^T 1 = 0 decouples the ridge term.
    let k_p = DVector::from_element(n, 1.0 / n as f64);
    let b = zero_mean_basis(n);
    let mb = &m * &b;
    let mut system = mb.transpose() * &mb;
    for d in 0..system.nrows() {
        system[(d, d)] += lambda;
    }
    let rhs = mb.transpose() * (target - &m * &k_p);
    let k = if system.nrows() == 0 {
        k_p
    } else {
        let eig = SymmetricEigen::new(system.clone());
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let low = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if !(low > RANK_TOL * top.max(f64::MIN_POSITIVE)) {
            return Err(Error::RankDeficient(format!(
                "sum-constrained ridge system is singular (eigenvalues {low:.3e} / {top:.3e})"
            )));
        }
        let z = system
            .cholesky()
            .ok_or_else(|| Error::RankDeficient("cholesky failed".into()))?
            .solve(&rhs);
        k_p + &b * z
    };
    Kernel::square(s, k.iter().copied().collect())
}

/// `argmin_{sum k = 1} ||y - x_tilde * k||^2 + lambda ||k||^2` with the data
/// term restricted to `Omega_S`. No sign constraint.
pub fn constrained_ridge_k(
    y: &GrayImage,
    x_tilde: &GrayImage,
    omega: &[Pixel],
    s: usize,
    lambda: f64,
) -> Result<Kernel> {
    let s = side(s)?;
    check_in_domain(y, omega)?;
    let rows = omega_s(y.width(), y.height(), omega, s);
    constrained_ridge_on(y, x_tilde, &rows, s, lambda)
}

/// Same problem with the data term over the whole domain.
pub fn constrained_ridge_k_full(
    y: &GrayImage,
    x_tilde: &GrayImage,
    s: usize,
    lambda: f64,
) -> Result<Kernel> {
    let s = side(s)?;
    let rows: Vec<Pixel> = (0..y.height())
        .flat_map(|i| (0..y.width()).map(move |j| (i, j)))
        .collect();
    constrained_ridge_on(y, x_tilde, &rows, s, lambda)
}

/// Terms of the likelihood split: `(||y - x_tilde * k||^2` over the domain,
/// the same over `Omega_S`, `||y||^2` over the complement of `Omega_S`).
pub fn residual_split(
    y: &GrayImage,
    x_tilde: &GrayImage,
    omega: &[Pixel],
    k: &Kernel,
) -> Result<(f64, f64, f64)> {
    y.check_same_dims(x_tilde)?;
    check_in_domain(y, omega)?;
    let s = side(k.width())?;
    let rows = omega_s(y.width(), y.height(), omega, s);
    let mut inside = vec![false; y.len()];
    for &(i, j) in &rows {
        inside[i * y.width() + j] = true;
    }
    let pred = convolve_zero(x_tilde, k)?;
    let (mut full, mut on, mut off) = (0.0, 0.0, 0.0);
    for t in 0..y.len() {
        let r = (y.data()[t] - pred.data()[t]).powi(2);
        full += r;
        if inside[t] {
            on += r;
        } else {
            off += y.data()[t].powi(2);
        }
    }
    Ok((full, on, off))
}

fn norm_on(img: &GrayImage, rows: &[Pixel]) -> f64 {
    rows.iter().map(|&(i, j)| img.get(i, j).powi(2)).sum::<f64>().sqrt()
}

/// Builds `y = x0 * k0 + n`, solves for the kernel from `x_approx` restricted
/// to `omega`, and measures the error against the bound.
///
/// `epsilon` is measured between `x0` and the restricted approximation, i.e.
/// the field actually used by the kernel estimate.
pub fn check_bound(inst: &PropInstance) -> Result<BoundReport> {
    let s = side(inst.k0.width())?;
    if !inst.k0.is_square() {
        return Err(Error::dim("kernel must be square"));
    }
    inst.x0.check_same_dims(&inst.noise)?;
    inst.x0.check_same_dims(&inst.x_approx)?;
    check_in_domain(&inst.x0, &inst.omega)?;
    for &p in &inst.omega {
        if border_distance(&inst.x0, p) <= s {
            return Err(Error::Domain(format!(
                "pixel ({}, {}) is within {s} of the border",
                p.0, p.1
            )));
        }
    }
    let (w, h) = inst.x0.dims();
    let y = convolve_zero(&inst.x0, &inst.k0)?.zip_map(&inst.noise, |a, b| a + b)?;
    let x_tilde = restrict(&inst.x_approx, &inst.omega)?;
    let rows = omega_s(w, h, &inst.omega, s);
    let diff = x_tilde.zip_map(&inst.x0, |a, b| a - b)?;
    let epsilon = norm_on(&diff, &rows);
    let gamma = norm_on(&inst.x0, &rows);
    let noise_norm_omega = norm_on(&inst.noise, &rows);
    let delta = delta_min(&build_window_matrix(&inst.x0, &inst.omega, s)?)?;
    let k_hat = constrained_ridge_on(&y, &x_tilde, &rows, s, inst.lambda)?;
    let k_hat_error = k_hat
        .data()
        .iter()
        .zip(inst.k0.data())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let k0_norm = inst.k0.norm();
    let bound_c_big = (epsilon * gamma / delta).max(inst.lambda);
    let bound_c_small = noise_norm_omega * gamma / delta;
    let bound = bound_c_big * k0_norm + bound_c_small;
    let holds_with_constant = if bound > 0.0 {
        k_hat_error / bound
    } else if k_hat_error == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(BoundReport {
        epsilon,
        gamma,
        delta,
        lambda: inst.lambda,
        noise_norm_omega,
        k_hat_error,
        k0_norm,
        bound_c_big,
        bound_c_small,
        bound,
        holds_with_constant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Epsilon,
    Delta,
    Lambda,
}

impl std::str::FromStr for SweepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" => Ok(SweepKind::Epsilon),
            "delta" => Ok(SweepKind::Delta),
            "lambda" => Ok(SweepKind::Lambda),
            other => Err(Error::param(format!(
                "unknown sweep {other:?} (expected epsilon, delta or lambda)"
            ))),
        }
    }
}

const SWEEP_SIZE: usize = 48;
const SWEEP_S: usize = 5;

/// Two 4x4 active blocks well inside a 48x48 domain.
pub fn sweep_omega() -> Vec<Pixel> {
    let mut omega = Vec::new();
    for (r0, c0) in [(14, 14), (24, 26)] {
        for i in r0..r0 + 4 {
            for j in c0..c0 + 4 {
                omega.push((i, j));
            }
        }
    }
    omega
}

fn gaussian_field(seed: u64, f: impl Fn(usize, usize) -> bool, scale: f64) -> GrayImage {
    let mut rng = rng_from_seed(seed);
    GrayImage::from_fn(SWEEP_SIZE, SWEEP_SIZE, |i, j| {
        let z: f64 = rng.sample(StandardNormal);
        if f(i, j) {
            scale * z
        } else {
            0.0
        }
    })
}

/// Sparse instance: random values on `omega`, zero on the rest of `Omega_S`,
/// and texture in a band far from `omega` that cannot reach `Omega_S`.
pub fn sparse_instance(seed: u64, eps_scale: f64, noise_sigma: f64, lambda: f64) -> Result<PropInstance> {
    let omega = sweep_omega();
    let mut in_omega = vec![false; SWEEP_SIZE * SWEEP_SIZE];
    for &(i, j) in &omega {
        in_omega[i * SWEEP_SIZE + j] = true;
    }
    let x0 = gaussian_field(seed, |i, j| in_omega[i * SWEEP_SIZE + j] || i >= 42, 1.0);
    let dir = gaussian_field(seed ^ 0x9e37_79b9, |i, j| in_omega[i * SWEEP_SIZE + j], 1.0);
    let dir_norm = dir.norm_sq().sqrt();
    let x_approx = x0.zip_map(&dir, |a, d| a + eps_scale * d / dir_norm)?;
    let noise = gaussian_field(seed.wrapping_add(7), |_, _| true, noise_sigma);
    Ok(PropInstance {
        x0,
        k0: motion_kernel(SWEEP_S, seed)?,
        noise,
        omega,
        lambda,
        x_approx,
    })
}

/// Dense instance whose content around `omega` is `1 + t * texture`; it
/// flattens as `t -> 0`, driving `delta` to zero.
pub fn flattening_instance(seed: u64, t: f64, noise_sigma: f64, lambda: f64) -> Result<PropInstance> {
    let texture = gaussian_field(seed, |_, _| true, 1.0);
    let x0 = texture.map(|v| 1.0 + t * v);
    let noise = gaussian_field(seed.wrapping_add(7), |_, _| true, noise_sigma);
    Ok(PropInstance {
        x_approx: x0.clone(),
        x0,
        k0: motion_kernel(SWEEP_S, seed)?,
        noise,
        omega: sweep_omega(),
        lambda,
    })
}

/// Runs one parametric family:
/// - `Epsilon`: 21 instances, approximation error `0.01 * i` for `i = 0..=20`,
///   no noise; the first row is the exact instance with a vanishing ridge;
/// - `Delta`: 10 instances flattening from `t = 1` to `t = 1e-3`;
/// - `Lambda`: 10 instances with `lambda` from `1e-4` to `1e0`.
pub fn run_sweep(kind: SweepKind, seed: u64) -> Result<Vec<BoundReport>> {
    match kind {
        SweepKind::Epsilon => (0..=20)
            .map(|i| {
                let lambda = if i == 0 { 1e-9 } else { 1e-6 };
                check_bound(&sparse_instance(seed, 0.01 * i as f64, 0.0, lambda)?)
            })
            .collect(),
        SweepKind::Delta => (0..10)
            .map(|i| {
                let t = 10f64.powf(-(i as f64) / 3.0);
                check_bound(&flattening_instance(seed, t, 1e-3, 1e-6)?)
            })
            .collect(),
        SweepKind::Lambda => (0..10)
            .map(|i| {
                let lambda = 1e-4 * 10f64.powf(i as f64 * 4.0 / 9.0);
                check_bound(&sparse_instance(seed, 0.05, 1e-3, lambda)?)
            })
            .collect(),
    }
}

/// Tab-separated table with a fixed header.
pub fn reports_tsv(reports: &[BoundReport]) -> String {
    let mut out = String::from("epsilon\tgamma\tdelta\tlambda\tnoise\terror\tbound\tM\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}",
            r.epsilon,
            r.gamma,
            r.delta,
            r.lambda,
            r.noise_norm_omega,
            r.k_hat_error,
            r.bound,
            r.holds_with_constant
        );
    }
    out
}

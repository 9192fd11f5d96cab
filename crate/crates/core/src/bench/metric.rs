use crate::error::{Error, Result};
use crate::image::{GrayImage, Kernel};
use crate::nonblind::{deconvolve, NonblindConfig};

use super::BenchCase;

/// Integer translation `(rows, cols)`.
pub type Shift = (isize, isize);

fn common_support(a: &Kernel, b: &Kernel) -> Result<(Kernel, Kernel)> {
    let w = a.width().max(b.width());
    let h = a.height().max(b.height());
    Ok((a.resized(w, h)?, b.resized(w, h)?))
}

/// Circularly shifts `k_hat` by the translation that maximizes its correlation
/// with `k_true`, after padding both to a common support. Returns the shifted
/// kernel and the shift that was applied. Ties go to the smallest shift.
pub fn align_kernel(k_hat: &Kernel, k_true: &Kernel) -> Result<(Kernel, Shift)> {
    let (a, b) = common_support(k_hat, k_true)?;
    let (w, h) = (a.width() as isize, a.height() as isize);
    let mut shifts: Vec<Shift> = (-(h / 2)..=h / 2)
        .flat_map(|di| (-(w / 2)..=w / 2).map(move |dj| (di, dj)))
        .collect();
    shifts.sort_by_key(|&(di, dj)| (di.abs() + dj.abs(), di.abs(), di, dj));
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for s in shifts {
        let corr: f64 = a
            .shifted(s.0, s.1)
            .data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| x * y)
            .sum();
        if corr > best.0 {
            best = (corr, s);
        }
    }
    let s = best.1;
    Ok((a.shifted(s.0, s.1), s))
}

/// `||align(k_hat) - k_true|| / ||k_true||` on the common support.
pub fn kernel_error(k_hat: &Kernel, k_true: &Kernel) -> Result<f64> {
    let (aligned, _) = align_kernel(k_hat, k_true)?;
    let (a, b) = common_support(&aligned, k_true)?;
    let diff: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    Ok(diff.sqrt() / b.norm())
}

/// MSE of a restoration against the sharp image. `restored[i, j]` is compared
/// with `sharp[i + c - s.0, j + c - s.1]` where `c` is the true kernel radius
/// and `s` the alignment shift, over the restored grid eroded by `margin`.
fn aligned_mse(
    restored: &GrayImage,
    sharp: &GrayImage,
    offset: (usize, usize),
    shift: Shift,
    margin: (usize, usize),
) -> Result<f64> {
    let (w, h) = restored.dims();
    if 2 * margin.0 >= h || 2 * margin.1 >= w {
        return Err(Error::dim("comparison region is empty"));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for i in margin.0..h - margin.0 {
        for j in margin.1..w - margin.1 {
            let si = (i + offset.0) as isize - shift.0;
            let sj = (j + offset.1) as isize - shift.1;
            if si < 0 || sj < 0 || si as usize >= sharp.height() || sj as usize >= sharp.width() {
                return Err(Error::dim("aligned comparison leaves the sharp image"));
            }
            let d = restored.get(i, j) - sharp.get(si as usize, sj as usize);
            total += d * d;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// MSE of the restoration with `k_hat` over MSE of the restoration with the
/// true kernel, both on the same aligned region of the valid grid.
pub fn error_ratio(case: &BenchCase, k_hat: &Kernel, nb_cfg: &NonblindConfig) -> Result<f64> {
    let (_, shift) = align_kernel(k_hat, &case.kernel)?;
    let radius = (case.kernel.height() / 2, case.kernel.width() / 2);
    let hat_radius = (k_hat.height() / 2, k_hat.width() / 2);
    let margin = (
        radius.0.max(hat_radius.0) + shift.0.unsigned_abs(),
        radius.1.max(hat_radius.1) + shift.1.unsigned_abs(),
    );
    let restored = deconvolve(&case.blurred, k_hat, nb_cfg)?.image;
    let reference = deconvolve(&case.blurred, &case.kernel, nb_cfg)?.image;
    let num = aligned_mse(&restored, &case.sharp, radius, shift, margin)?;
    let den = aligned_mse(&reference, &case.sharp, radius, (0, 0), margin)?;
    if den == 0.0 {
        return Err(Error::DegenerateRatio);
    }
    Ok(num / den)
}

use std::fmt::Write as _;

use super::synth::{motion_kernel, piecewise_smooth_image, synth_blur};
use crate::error::{Error, Result};
use crate::image::gradient;
use crate::priors::heavy_tailed_cost;

#[derive(Debug, Clone, PartialEq)]
pub struct CostPair {
    pub image: usize,
    pub kernel: usize,
    pub alpha: f64,
    pub sharp_cost: f64,
    pub blurred_cost: f64,
}

/// Heavy-tailed cost of sharp versus blurred gradients over a seeded corpus.
/// The sharp image is cropped to the valid region of the blur so both costs
/// are sums over the same number of pixels. Kernel sizes cycle through 7, 9
/// and 11.
pub fn cost_pairs(
    seed: u64,
    n_images: usize,
    n_kernels: usize,
    image_size: usize,
    sigma: f64,
    alphas: &[f64],
) -> Result<Vec<CostPair>> {
    if n_images == 0 || n_kernels == 0 || alphas.is_empty() {
        return Err(Error::param("corpus needs images, kernels and exponents"));
    }
    let sizes = [7usize, 9, 11];
    let mut rows = Vec::with_capacity(n_images * n_kernels * alphas.len());
    for i in 0..n_images {
        let sharp = piecewise_smooth_image(image_size, seed.wrapping_mul(1000).wrapping_add(i as u64));
        for j in 0..n_kernels {
            let ks = sizes[j % sizes.len()];
            let kseed = seed.wrapping_mul(1000).wrapping_add(500 + j as u64);
            let k = motion_kernel(ks, kseed)?;
            let blurred = synth_blur(&sharp, &k, sigma, kseed ^ ((i as u64) << 16))?;
            let c = ks / 2;
            let crop = sharp.window(c, c, blurred.width(), blurred.height())?;
            let gs = gradient(&crop)?;
            let gb = gradient(&blurred)?;
            for &alpha in alphas {
                rows.push(CostPair {
                    image: i,
                    kernel: j,
                    alpha,
                    sharp_cost: heavy_tailed_cost(&gs, alpha)?,
                    blurred_cost: heavy_tailed_cost(&gb, alpha)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Fraction of rows with exponent `alpha` where the blurred image is cheaper.
pub fn fraction_blurred_cheaper(rows: &[CostPair], alpha: f64) -> f64 {
    let sel: Vec<_> = rows.iter().filter(|r| r.alpha == alpha).collect();
    if sel.is_empty() {
        return 0.0;
    }
    sel.iter().filter(|r| r.blurred_cost < r.sharp_cost).count() as f64 / sel.len() as f64
}

pub fn cost_pairs_tsv(rows: &[CostPair]) -> String {
    let mut out = String::from("sharp_cost\tblurred_cost\talpha\timage\tkernel\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:.6}\t{:.6}\t{}\t{}\t{}",
            r.sharp_cost, r.blurred_cost, r.alpha, r.image, r.kernel
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blur_lowers_the_cost() {
        let rows = cost_pairs(3, 4, 3, 64, 0.0, &[0.5, 0.8]).unwrap();
        assert_eq!(rows.len(), 24);
        assert!(fraction_blurred_cheaper(&rows, 0.5) >= 0.9);
        assert!(fraction_blurred_cheaper(&rows, 0.8) >= 0.9);
    }

    #[test]
    fn deterministic() {
        let a = cost_pairs(1, 2, 2, 48, 0.01, &[0.5]).unwrap();
        let b = cost_pairs(1, 2, 2, 48, 0.01, &[0.5]).unwrap();
        assert_eq!(cost_pairs_tsv(&a), cost_pairs_tsv(&b));
    }
}

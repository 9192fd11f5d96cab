//! Frequency-weighted kernel ridge versus a uniform ridge of equal mean, on a
//! scene dominated by vertical edges.
use blind_deconv::bench::{kernel_error, motion_kernel, synth_blur};
use blind_deconv::blind::{estimate_kernel, SolverConfig};
use blind_deconv::image::GrayImage;
use blind_deconv::priors::freq_weights;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // vertical stripes of varying width plus a faint horizontal bar
    let sharp = GrayImage::from_fn(128, 128, |i, j| {
        let stripe = if (j / 7 + j / 13) % 2 == 0 { 0.8 } else { 0.2 };
        if (60..64).contains(&i) { stripe * 0.9 + 0.05 } else { stripe }
    });
    let k = motion_kernel(9, 21)?;
    let y = synth_blur(&sharp, &k, 0.01, 22)?;

    let fw = freq_weights(&y.map(|v| 255.0 * v), 200.0, y.width(), y.height())?;
    println!("ridge weights: mean {:.3}, dc {:.3}", fw.mean(), fw.get(0, 0));

    let adaptive = SolverConfig::with_kernel_size(9);
    let uniform = SolverConfig { uniform_ridge: true, ..adaptive.clone() };
    let (ka, _) = estimate_kernel(&y, &adaptive)?;
    let (ku, _) = estimate_kernel(&y, &uniform)?;
    println!("kernel error, adaptive ridge: {:.3}", kernel_error(&ka, &k)?);
    println!("kernel error, uniform ridge:  {:.3}", kernel_error(&ku, &k)?);
    Ok(())
}

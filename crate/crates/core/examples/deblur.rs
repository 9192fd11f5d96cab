//! Non-blind restoration with the true kernel and with an estimated one.
use blind_deconv::bench::{motion_kernel, piecewise_smooth_image, synth_blur};
use blind_deconv::blind::{estimate_kernel, SolverConfig};
use blind_deconv::nonblind::{deconvolve, NonblindConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sharp = piecewise_smooth_image(128, 7);
    let k = motion_kernel(7, 8)?;
    let y = synth_blur(&sharp, &k, 0.01, 9)?;
    // the blurred image covers the valid region only
    let reference = sharp.window(3, 3, y.width(), y.height())?;

    let nb = NonblindConfig::default();
    let oracle = deconvolve(&y, &k, &nb)?.image;
    let (k_hat, _) = estimate_kernel(&y, &SolverConfig::with_kernel_size(7))?;
    let blind = deconvolve(&y, &k_hat, &nb)?.image;

    println!("blurred     PSNR {:.2} dB", y.psnr(&reference)?);
    println!("true kernel PSNR {:.2} dB", oracle.psnr(&reference)?);
    println!("estimated   PSNR {:.2} dB", blind.psnr(&reference)?);
    Ok(())
}

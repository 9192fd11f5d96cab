//! Blurs a synthetic scene with a motion kernel and estimates the kernel back.
use blind_deconv::bench::{kernel_error, motion_kernel, piecewise_smooth_image, synth_blur};
use blind_deconv::blind::{estimate_kernel, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sharp = piecewise_smooth_image(128, 3);
    let k_true = motion_kernel(9, 4)?;
    let y = synth_blur(&sharp, &k_true, 0.01, 5)?;

    let (k_hat, trace) = estimate_kernel(&y, &SolverConfig::with_kernel_size(9))?;
    println!("levels: {}", trace.levels.len());
    println!("kernel error: {:.3}", kernel_error(&k_hat, &k_true)?);
    for i in 0..9 {
        let row: Vec<String> = (0..9).map(|j| format!("{:.3}", k_hat.get(i, j))).collect();
        println!("{}", row.join(" "));
    }
    Ok(())
}

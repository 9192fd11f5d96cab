//! Plain joint MAP drifts towards the blurred image and the delta kernel.
use blind_deconv::baselines::naive_map;
use blind_deconv::bench::{motion_kernel, piecewise_smooth_image, synth_blur};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sharp = piecewise_smooth_image(96, 2);
    let k_true = motion_kernel(7, 3)?;
    let y = synth_blur(&sharp, &k_true, 0.01, 4)?;

    let result = naive_map(&y, 0.5, 2000.0, 10, 7)?;
    println!("cost: {:.3} -> {:.3}", result.cost[0], result.cost.last().unwrap());
    println!("true kernel distance to delta:      {:.3}", k_true.distance_to_delta());
    println!("recovered kernel distance to delta: {:.3}", result.kernel.distance_to_delta());
    Ok(())
}

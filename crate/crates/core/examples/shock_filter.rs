//! Sharpens a blurred step edge with the shock filter.
use blind_deconv::baselines::shock_filter;
use blind_deconv::image::GrayImage;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let blurred = GrayImage::from_fn(16, 1, |_, j| 1.0 / (1.0 + (-(j as f64 - 7.5) / 1.5).exp()));
    let sharpened = shock_filter(&blurred, 0.25, 40)?;
    let fmt = |img: &GrayImage| {
        img.data().iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join(" ")
    };
    println!("before: {}", fmt(&blurred));
    println!("after:  {}", fmt(&sharpened));
    Ok(())
}

//! Small synthetic benchmark: 2 images x 2 kernels, error ratios and summary.
use blind_deconv::bench::{generate_dataset, run_benchmark, DatasetSpec};
use blind_deconv::blind::SolverConfig;
use blind_deconv::nonblind::NonblindConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = DatasetSpec {
        seed: 1,
        n_images: 2,
        n_kernels: 2,
        image_size: 128,
        kernel_sizes: vec![7, 9],
        sigma: 0.01,
    };
    let cases = generate_dataset(&spec)?;
    let report = run_benchmark(&cases, &SolverConfig::default(), &NonblindConfig::default())?;
    print!("{}", report.cases_tsv());
    print!("{}", report.summary());
    Ok(())
}

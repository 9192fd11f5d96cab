//! Synthetic benchmark: data generation, the error-ratio metric and the
//! parallel runner producing per-case rows and a cumulative curve.

mod dataset;
mod figure1;
mod metric;
mod run;
mod synth;

pub use dataset::{generate_dataset, read_dataset, write_dataset, BenchCase, DatasetSpec};
pub use figure1::{cost_pairs, cost_pairs_tsv, fraction_blurred_cheaper, CostPair};
pub use metric::{align_kernel, error_ratio, kernel_error, Shift};
pub use run::{run_benchmark, BenchReport, CaseResult};
pub use synth::{add_gaussian_noise, motion_kernel, piecewise_smooth_image, rng_from_seed, synth_blur};

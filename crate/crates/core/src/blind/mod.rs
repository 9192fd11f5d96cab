//! Blind kernel estimation by alternating a reweighted least-squares update of
//! the latent gradients with a regularized kernel update, coarse to fine.

mod config;
mod estimate;
mod kstep;
mod xstep;

pub use config::SolverConfig;
pub use estimate::{
    estimate_kernel, residual_energy, EstimationTrace, IterationRecord, LevelTrace, Region,
};
pub use kstep::{k_step, KStepOutcome};
pub use xstep::{x_step, x_step_traced, XStepTrace};

pub(crate) use kstep::KernelProblem;

use crate::image::Kernel;

/// Clamp negative taps to zero and renormalize to unit sum (delta fallback).
pub fn project_kernel(k: &Kernel) -> Kernel {
    k.project()
}

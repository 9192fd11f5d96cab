pub mod baselines;
pub mod bench;
pub mod blind;
pub mod cli;
pub mod cg;
pub mod error;
pub mod image;
pub mod nonblind;
pub mod priors;
pub mod prop_verify;

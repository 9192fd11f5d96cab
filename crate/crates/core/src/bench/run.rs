use std::fmt::Write as _;

use rayon::prelude::*;

use super::metric::{error_ratio, kernel_error};
use super::BenchCase;
use crate::blind::{estimate_kernel, SolverConfig};
use crate::error::{Error, Result};
use crate::image::Kernel;
use crate::nonblind::NonblindConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub id: usize,
    pub kernel_size: usize,
    /// Error ratio, or the message of the failure that prevented it.
    pub ratio: std::result::Result<f64, String>,
    pub kernel_error: Option<f64>,
    pub estimate: Option<Kernel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// Sorted by case id.
    pub cases: Vec<CaseResult>,
}

/// Estimates a kernel for every case (support = the true kernel size) and
/// scores it with [`error_ratio`]. Cases run in parallel; failures are
/// recorded per case.
pub fn run_benchmark(
    cases: &[BenchCase],
    solver: &SolverConfig,
    nb_cfg: &NonblindConfig,
) -> Result<BenchReport> {
    if cases.is_empty() {
        return Err(Error::param("benchmark needs at least one case"));
    }
    let mut results: Vec<CaseResult> = cases
        .par_iter()
        .map(|case| run_case(case, solver, nb_cfg))
        .collect();
    results.sort_by_key(|r| r.id);
    Ok(BenchReport { cases: results })
}

fn run_case(case: &BenchCase, solver: &SolverConfig, nb_cfg: &NonblindConfig) -> CaseResult {
    let size = case.kernel.width().max(case.kernel.height());
    let cfg = SolverConfig {
        kernel_size: size,
        ..solver.clone()
    };
    let mut result = CaseResult {
        id: case.id,
        kernel_size: size,
        ratio: Err(String::new()),
        kernel_error: None,
        estimate: None,
    };
    let k_hat = match estimate_kernel(&case.blurred, &cfg) {
        Ok((k, _)) => k,
        Err(e) => {
            log::warn!("case {}: estimation failed: {e}", case.id);
            result.ratio = Err(e.to_string());
            return result;
        }
    };
    result.kernel_error = kernel_error(&k_hat, &case.kernel).ok();
    result.ratio = error_ratio(case, &k_hat, nb_cfg).map_err(|e| {
        log::warn!("case {}: scoring failed: {e}", case.id);
        e.to_string()
    });
    result.estimate = Some(k_hat);
    result
}

impl BenchReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.cases.iter().filter_map(|c| c.ratio.as_ref().ok().copied()).collect()
    }

    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| c.ratio.is_err()).count()
    }

    /// Median over successful cases.
    pub fn median(&self) -> Option<f64> {
        let mut r = self.ratios();
        if r.is_empty() {
            return None;
        }
        r.sort_by(f64::total_cmp);
        let n = r.len();
        Some(if n % 2 == 1 {
            r[n / 2]
        } else {
            0.5 * (r[n / 2 - 1] + r[n / 2])
        })
    }

    /// Fraction of all cases (failures count as misses) with ratio `<= t`.
    pub fn fraction_at_most(&self, t: f64) -> f64 {
        let hits = self.ratios().iter().filter(|&&r| r <= t).count();
        hits as f64 / self.cases.len() as f64
    }

    /// Fraction of all cases with ratio strictly below `t`.
    pub fn fraction_below(&self, t: f64) -> f64 {
        let hits = self.ratios().iter().filter(|&&r| r < t).count();
        hits as f64 / self.cases.len() as f64
    }

    /// `(t, fraction <= t)` on a grid from 1 to 5 in steps of 0.25, plus every
    /// observed ratio, sorted by `t`.
    pub fn cumulative(&self) -> Vec<(f64, f64)> {
        let mut ts: Vec<f64> = (0..=16).map(|i| 1.0 + 0.25 * i as f64).collect();
        ts.extend(self.ratios());
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts.into_iter().map(|t| (t, self.fraction_at_most(t))).collect()
    }

    pub fn cases_tsv(&self) -> String {
        let mut out = String::from("id\tkernel_size\tratio\tkernel_error\tstatus\n");
        for c in &self.cases {
            let (ratio, status) = match &c.ratio {
                Ok(r) => (format!("{r:.6}"), "ok".to_string()),
                Err(e) => ("nan".to_string(), format!("failed: {e}")),
            };
            let kerr = c.kernel_error.map_or("nan".to_string(), |e| format!("{e:.6}"));
            let _ = writeln!(out, "{}\t{}\t{ratio}\t{kerr}\t{status}", c.id, c.kernel_size);
        }
        out
    }

    pub fn cumulative_tsv(&self) -> String {
        let mut out = String::from("threshold\tfraction\n");
        for (t, f) in self.cumulative() {
            let _ = writeln!(out, "{t:.6}\t{f:.6}");
        }
        out
    }

    pub fn summary(&self) -> String {
        let median = self.median().map_or("n/a".to_string(), |m| format!("{m:.4}"));
        let max = self.ratios().into_iter().fold(f64::NAN, f64::max);
        format!(
            "cases: {}\nfailures: {}\nmedian ratio: {median}\nmax ratio: {max:.4}\n\
             fraction < 2: {:.4}\nfraction < 3: {:.4}\n",
            self.cases.len(),
            self.failures(),
            self.fraction_below(2.0),
            self.fraction_below(3.0),
        )
    }
}

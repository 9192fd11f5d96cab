//! Conjugate gradient for the symmetric positive definite systems produced by
//! the quadratic subproblems. Operators are plain closures so that FFT-based,
//! spatial and dense applications all plug in the same way.

/// Iteration limits for one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings {
    pub max_iters: usize,
    /// Stop once `||r|| <= rel_tol * ||b||`.
    pub rel_tol: f64,
}

impl CgSettings {
    pub fn new(max_iters: usize, rel_tol: f64) -> Self {
        Self { max_iters, rel_tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` starting from the contents of `x`.
///
/// `apply(v, out)` must write `A v` into `out`. `observe` sees every iterate,
/// including the starting point (iteration 0).
pub fn solve_observed<F, O>(
    mut apply: F,
    b: &[f64],
    x: &mut [f64],
    settings: CgSettings,
    mut observe: O,
) -> CgStats
where
    F: FnMut(&[f64], &mut [f64]),
    O: FnMut(usize, &[f64]),
{
    let n = b.len();
    debug_assert_eq!(x.len(), n);
    let b_norm = dot(b, b).sqrt();
    observe(0, x);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgStats {
            iterations: 0,
            relative_residual: 0.0,
        };
    }
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while iterations < settings.max_iters && rr.sqrt() > settings.rel_tol * b_norm {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
        observe(iterations, x);
    }
    CgStats {
        iterations,
        relative_residual: rr.sqrt() / b_norm,
    }
}

pub fn solve<F>(apply: F, b: &[f64], x: &mut [f64], settings: CgSettings) -> CgStats
where
    F: FnMut(&[f64], &mut [f64]),
{
    solve_observed(apply, b, x, settings, |_, _| {})
}

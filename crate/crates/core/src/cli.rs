//! Command-line front end. `run` parses arguments, executes one command and
//! returns the process exit code: 0 on success, 2 for usage and I/O problems,
//! 3 for numeric failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    cost_pairs, cost_pairs_tsv, fraction_blurred_cheaper, generate_dataset, run_benchmark,
    write_dataset, DatasetSpec,
};
use crate::blind::{estimate_kernel, EstimationTrace, SolverConfig};
use crate::error::{Error, Result};
use crate::image::{read_image, read_kernel_table, write_image, write_kernel_table, Kernel};
use crate::nonblind::{deconvolve, NonblindConfig};
use crate::prop_verify::{reports_tsv, run_sweep, SweepKind};

#[derive(Debug, Parser)]
#[command(name = "blind-deconv", version, about = "Blind deconvolution toolkit")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a blur kernel from a blurred image.
    Estimate(EstimateArgs),
    /// Restore an image with a given or estimated kernel.
    Deblur(DeblurArgs),
    /// Heavy-tailed costs of sharp and blurred images over a synthetic corpus.
    Figure1(Figure1Args),
    /// Kernel-recovery error bound sweeps.
    Prop1(Prop1Args),
    /// Synthetic benchmark with error ratios.
    Bench(BenchArgs),
}

/// Overrides shared by the commands that run the solvers.
#[derive(Debug, Args)]
struct Tuning {
    /// File of `key=value` lines overriding solver fields (`nonblind.` prefix
    /// for the non-blind step).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda_l05: Option<f64>,
    #[arg(long)]
    lambda_ap: Option<f64>,
    #[arg(long)]
    alt_iters: Option<usize>,
    #[arg(long)]
    cg_iters: Option<usize>,
    #[arg(long)]
    patch_r: Option<usize>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    kernel_size: usize,
    /// Kernel image, rescaled for display. The exact values go to the same
    /// path with a `.txt` extension.
    #[arg(long, default_value = "kernel.png")]
    out_kernel: PathBuf,
    /// Defaults to the kernel path with a `.trace.tsv` extension.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug, Args)]
struct DeblurArgs {
    #[arg(long)]
    input: PathBuf,
    /// Kernel as a `.txt` value table or an image (normalized to unit sum).
    #[arg(long, conflicts_with = "kernel_size", required_unless_present = "kernel_size")]
    kernel: Option<PathBuf>,
    /// Estimate a kernel of this size first.
    #[arg(long)]
    kernel_size: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the estimated kernel (image plus `.txt` table).
    #[arg(long)]
    out_kernel: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug, Args)]
struct Figure1Args {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.8")]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    images: usize,
    #[arg(long, default_value_t = 3)]
    kernels: usize,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Prop1Args {
    /// epsilon, delta or lambda.
    #[arg(long)]
    sweep: SweepKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Keep only the first N cases.
    #[arg(long)]
    cases: Option<usize>,
    #[arg(long, default_value_t = 4)]
    images: usize,
    #[arg(long, default_value_t = 4)]
    kernels: usize,
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, value_delimiter = ',', default_value = "7,9,11,9")]
    kernel_sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    sigma: f64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
}

/// Exit code for an error: 3 for numeric failures, 2 for everything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Numeric(_) | Error::IllPosed(_) | Error::RankDeficient(_) | Error::DegenerateRatio => 3,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logger(cli.verbose);
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Deblur(a) => cmd_deblur(a),
        Command::Figure1(a) => cmd_figure1(a),
        Command::Prop1(a) => cmd_prop1(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, offset: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        offset,
        message: format!("bad value {value:?} for `{key}`"),
    })
}

/// Applies `key=value` lines to the configs. Blank lines and `#` comments are
/// skipped; parse errors carry the byte offset of the offending value.
pub fn apply_overrides(text: &str, solver: &mut SolverConfig, nb: &mut NonblindConfig) -> Result<()> {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let body = line.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(Error::Parse {
                offset: start,
                message: format!("expected key=value, got {:?}", body.trim()),
            });
        };
        let key = body[..eq].trim();
        let raw = &body[eq + 1..];
        let at = start + eq + 1 + (raw.len() - raw.trim_start().len());
        let value = raw.trim();
        match key {
            "kernel_size" => solver.kernel_size = parse_value(key, value, at)?,
            "lambda_l05" => solver.lambda_l05 = parse_value(key, value, at)?,
            "lambda_ap" => solver.lambda_ap = parse_value(key, value, at)?,
            "cg_iters_x" => solver.cg_iters_x = parse_value(key, value, at)?,
            "alt_iters" => solver.alt_iters = parse_value(key, value, at)?,
            "irls_outer" => solver.irls_outer = parse_value(key, value, at)?,
            "irls_eps" => solver.irls_eps = parse_value(key, value, at)?,
            "cg_iters_k" => solver.cg_iters_k = parse_value(key, value, at)?,
            "patch_r" => solver.patch_r = parse_value(key, value, at)?,
            "pyramid_ratio" => solver.pyramid_ratio = parse_value(key, value, at)?,
            "min_kernel" => solver.min_kernel = parse_value(key, value, at)?,
            "eta_per_pixel" => solver.eta_per_pixel = parse_value(key, value, at)?,
            "eta_scale" => solver.eta_scale = parse_value(key, value, at)?,
            "eta_monotone" => solver.eta_monotone = parse_value(key, value, at)?,
            "weight_scale" => solver.weight_scale = parse_value(key, value, at)?,
            "spectrum_scale" => solver.spectrum_scale = parse_value(key, value, at)?,
            "uniform_ridge" => solver.uniform_ridge = parse_value(key, value, at)?,
            "kernel_threshold" => solver.kernel_threshold = parse_value(key, value, at)?,
            "nonblind.alpha" => nb.alpha = parse_value(key, value, at)?,
            "nonblind.lambda_img" => nb.lambda_img = parse_value(key, value, at)?,
            "nonblind.irls_outer" => nb.irls_outer = parse_value(key, value, at)?,
            "nonblind.cg_iters" => nb.cg_iters = parse_value(key, value, at)?,
            "nonblind.eps" => nb.eps = parse_value(key, value, at)?,
            other => {
                return Err(Error::Parse {
                    offset: start,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }
    Ok(())
}

fn configs(tuning: &Tuning, kernel_size: Option<usize>) -> Result<(SolverConfig, NonblindConfig)> {
    let mut solver = SolverConfig::default();
    let mut nb = NonblindConfig::default();
    if let Some(path) = &tuning.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        apply_overrides(&text, &mut solver, &mut nb)?;
    }
    if let Some(v) = kernel_size {
        solver.kernel_size = v;
    }
    if let Some(v) = tuning.lambda_l05 {
        solver.lambda_l05 = v;
    }
    if let Some(v) = tuning.lambda_ap {
        solver.lambda_ap = v;
    }
    if let Some(v) = tuning.alt_iters {
        solver.alt_iters = v;
    }
    if let Some(v) = tuning.cg_iters {
        solver.cg_iters_x = v;
    }
    if let Some(v) = tuning.patch_r {
        solver.patch_r = v;
    }
    solver.validate()?;
    nb.validate()?;
    Ok((solver, nb))
}

/// Trace as text: a `#` header echoing the solver settings, then one row per
/// alternation.
pub fn format_trace(cfg: &SolverConfig, trace: &EstimationTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# lambda_l05={} lambda_ap={} patch_r={} cg_iters_x={} alt_iters={} kernel_size={}",
        cfg.lambda_l05, cfg.lambda_ap, cfg.patch_r, cfg.cg_iters_x, cfg.alt_iters, cfg.kernel_size
    );
    let _ = writeln!(
        out,
        "# irls_outer={} cg_iters_k={} pyramid_ratio={} eta_scale={} eta_monotone={} weight_scale={} spectrum_scale={} kernel_threshold={} uniform_ridge={}",
        cfg.irls_outer,
        cfg.cg_iters_k,
        cfg.pyramid_ratio,
        cfg.eta_scale,
        cfg.eta_monotone,
        cfg.weight_scale,
        cfg.spectrum_scale,
        cfg.kernel_threshold,
        cfg.uniform_ridge
    );
    out.push_str("level\titer\tkernel_size\twidth\theight\tresidual\teta\tweight_mean\tweight_min\tkstep_first\tkstep_last\n");
    for level in &trace.levels {
        for (i, it) in level.iterations.iter().enumerate() {
            let first = it.kstep_objective.first().copied().unwrap_or(f64::NAN);
            let last = it.kstep_objective.last().copied().unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}",
                level.level,
                i,
                level.kernel_size,
                level.width,
                level.height,
                it.residual,
                it.eta,
                it.weight_mean,
                it.weight_min,
                first,
                last
            );
        }
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_kernel_files(path: &Path, k: &Kernel) -> Result<()> {
    write_image(path, &k.to_display_image())?;
    write_kernel_table(path.with_extension("txt"), k)
}

fn load_kernel(path: &Path) -> Result<Kernel> {
    if path.extension().is_some_and(|e| e == "txt") {
        return read_kernel_table(path);
    }
    let img = read_image(path)?;
    let k = Kernel::new(img.width(), img.height(), img.into_data())?;
    if !(k.sum() > 0.0) {
        return Err(Error::param(format!("{}: kernel image is all zero", path.display())));
    }
    Ok(k.project())
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let (solver, _) = configs(&a.tuning, Some(a.kernel_size))?;
    let y = read_image(&a.input)?;
    let (k, trace) = estimate_kernel(&y, &solver)?;
    write_kernel_files(&a.out_kernel, &k)?;
    let trace_path = a.trace.unwrap_or_else(|| a.out_kernel.with_extension("trace.tsv"));
    write_text(&trace_path, &format_trace(&solver, &trace))?;
    println!("kernel: {}", a.out_kernel.display());
    println!("distance to delta: {:.6}", k.distance_to_delta());
    Ok(())
}

fn cmd_deblur(a: DeblurArgs) -> Result<()> {
    let (solver, nb) = configs(&a.tuning, a.kernel_size)?;
    let y = read_image(&a.input)?;
    let k = match &a.kernel {
        Some(path) => load_kernel(path)?,
        None => estimate_kernel(&y, &solver)?.0,
    };
    if let Some(path) = &a.out_kernel {
        write_kernel_files(path, &k)?;
    }
    let restored = deconvolve(&y, &k, &nb)?;
    write_image(&a.out, &restored.image)?;
    println!("restored: {}", a.out.display());
    Ok(())
}

fn cmd_figure1(a: Figure1Args) -> Result<()> {
    let rows = cost_pairs(a.seed, a.images, a.kernels, a.size, a.sigma, &a.alpha)?;
    write_text(&a.out, &cost_pairs_tsv(&rows))?;
    for &alpha in &a.alpha {
        println!(
            "alpha {alpha}: blurred cheaper in {:.4} of pairs",
            fraction_blurred_cheaper(&rows, alpha)
        );
    }
    Ok(())
}

fn cmd_prop1(a: Prop1Args) -> Result<()> {
    let reports = run_sweep(a.sweep, a.seed)?;
    write_text(&a.out, &reports_tsv(&reports))?;
    let ms: Vec<f64> = reports
        .iter()
        .map(|r| r.holds_with_constant)
        .filter(|m| *m > 0.0)
        .collect();
    let lo = ms.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ms.iter().copied().fold(0.0, f64::max);
    println!("instances: {}", reports.len());
    println!("M range: {lo:.4e} .. {hi:.4e}");
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let (solver, nb) = configs(&a.tuning, None)?;
    let spec = DatasetSpec {
        seed: a.seed,
        n_images: a.images,
        n_kernels: a.kernels,
        image_size: a.size,
        kernel_sizes: a.kernel_sizes,
        sigma: a.sigma,
    };
    let mut cases = generate_dataset(&spec)?;
    if let Some(n) = a.cases {
        cases.truncate(n);
    }
    write_dataset(a.out.join("dataset"), &cases)?;
    let report = run_benchmark(&cases, &solver, &nb)?;
    let est_dir = a.out.join("estimates");
    fs::create_dir_all(&est_dir).map_err(|e| Error::io(&est_dir, e))?;
    for c in &report.cases {
        if let Some(k) = &c.estimate {
            write_kernel_table(est_dir.join(format!("case_{:03}.txt", c.id)), k)?;
        }
    }
    write_text(&a.out.join("cases.tsv"), &report.cases_tsv())?;
    write_text(&a.out.join("cumulative.tsv"), &report.cumulative_tsv())?;
    let summary = report.summary();
    write_text(&a.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

struct StderrLogger(log::LevelFilter);

impl log::Log for StderrLogger {
    fn enabled(&self, meta: &log::Metadata) -> bool {
        meta.level() <= self.0
    }
    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            eprintln!("{}: {}", record.level().as_str().to_lowercase(), record.args());
        }
    }
    fn flush(&self) {}
}

fn init_logger(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    if log::set_boxed_logger(Box::new(StderrLogger(level))).is_ok() {
        log::set_max_level(level);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply_and_report_offsets() {
        let mut s = SolverConfig::default();
        let mut nb = NonblindConfig::default();
        apply_overrides("# tuned\nlambda_ap = 50\nnonblind.lambda_img=300\n\n", &mut s, &mut nb).unwrap();
        assert_eq!(s.lambda_ap, 50.0);
        assert_eq!(nb.lambda_img, 300.0);

        let err = apply_overrides("alt_iters=3\npatch_r=x\n", &mut s, &mut nb).unwrap_err();
        assert!(matches!(err, Error::Parse { offset: 20, .. }), "{err:?}");
        let err = apply_overrides("bogus=1\n", &mut s, &mut nb).unwrap_err();
        assert!(matches!(err, Error::Parse { offset: 0, .. }));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Numeric("x".into())), 3);
        assert_eq!(exit_code(&Error::param("x")), 2);
        assert_eq!(run(["blind-deconv", "nope"]), 2);
        assert_eq!(run(["blind-deconv", "estimate", "--input", "/no/such.pgm", "--kernel-size", "7"]), 2);
    }

    #[test]
    fn trace_header_echoes_defaults() {
        let t = format_trace(&SolverConfig::default(), &EstimationTrace::default());
        let head = t.lines().next().unwrap();
        assert!(head.contains("lambda_l05=0.006"));
        assert!(head.contains("lambda_ap=200"));
        assert!(head.contains("patch_r=5"));
        assert!(head.contains("cg_iters_x=30"));
        assert!(head.contains("alt_iters=20"));
    }
}

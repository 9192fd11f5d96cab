//! Runs the three bound sweeps and prints their tables.
use blind_deconv::prop_verify::{reports_tsv, run_sweep, SweepKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for kind in [SweepKind::Epsilon, SweepKind::Delta, SweepKind::Lambda] {
        println!("# {kind:?}");
        print!("{}", reports_tsv(&run_sweep(kind, 1)?));
    }
    Ok(())
}

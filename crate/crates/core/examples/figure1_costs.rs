//! Blur lowers the heavy-tailed gradient cost: the sharp image is not the
//! cheapest explanation under the prior.
use blind_deconv::bench::{cost_pairs, fraction_blurred_cheaper};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = cost_pairs(1, 10, 3, 128, 0.0, &[0.5, 0.8])?;
    for alpha in [0.5, 0.8] {
        println!(
            "alpha {alpha}: blurred cheaper in {:.0}% of pairs",
            100.0 * fraction_blurred_cheaper(&rows, alpha)
        );
    }
    let r = &rows[0];
    println!("first pair: sharp {:.1}, blurred {:.1}", r.sharp_cost, r.blurred_cost);
    Ok(())
}

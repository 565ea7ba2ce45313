//! Negative current of equal-momentum pairs as a function of k, and the
//! threshold k_sigma for a few packet widths.

use arrival::experiments::{default_k_grid, spreading_sweep, threshold_k_sigma, SpreadingGeometry};
use arrival::ProfileOptions;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let opts = ProfileOptions::default();
    let sweep = spreading_sweep(
        1.0,
        &default_k_grid(1.0)[..25],
        &SpreadingGeometry::scaled(1.0),
        &opts,
    )?;
    println!("sigma = 1");
    println!("{:>6} {:>12} {:>12}", "k", "N+", "N-");
    for i in (0..sweep.k_values.len()).step_by(2) {
        println!(
            "{:>6.2} {:>12.4e} {:>12.4e}",
            sweep.k_values[i], sweep.n_plus[i], sweep.n_minus[i]
        );
    }

    println!("\n{:>6} {:>10} {:>20}", "sigma", "k_sigma", "bracket");
    for sigma in [0.5, 0.75, 1.0, 1.25, 2.0] {
        let b = threshold_k_sigma(sigma, 0.01, &opts)?;
        println!(
            "{sigma:>6} {:>10.4} [{:.4}, {:.4}]",
            b.estimate(),
            b.lower,
            b.upper
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}

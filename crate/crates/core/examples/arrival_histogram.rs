//! First-arrival histogram of g1 - g2 against the flux prediction.

use arrival::bohm::{first_arrival_ensemble, flux_bin_probabilities, IntegratorOptions};
use arrival::experiments::SpreadingGeometry;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let geometry = SpreadingGeometry::scaled(1.0);
    let (_, minus) = geometry.states(1.0, 0.0)?;
    let window = geometry.window(1.0, 0.0)?;
    let n = 4000;
    let bins = 12;
    let ens = first_arrival_ensemble(&minus, &window, n, 42, bins, &IntegratorOptions::default())?;
    let probs = flux_bin_probabilities(&minus, &window, bins);
    println!(
        "{:>8} {:>8} {:>7} {:>9} {:>6}",
        "from", "to", "count", "expected", "z"
    );
    for (b, &p) in probs.iter().enumerate() {
        let expected = n as f64 * p;
        let sd = (expected * (1.0 - p)).sqrt().max(1.0);
        println!(
            "{:>8.3} {:>8.3} {:>7} {:>9.1} {:>+6.2}",
            ens.bin_edges[b],
            ens.bin_edges[b + 1],
            ens.histogram[b],
            expected,
            (ens.histogram[b] as f64 - expected) / sd
        );
    }
    let multiple = ens.crossing_counts.iter().filter(|&&c| c > 1).count();
    println!(
        "crossed {} of {n}, never {}, multiple crossings {multiple}",
        ens.crossing_times.len(),
        ens.n_never
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}

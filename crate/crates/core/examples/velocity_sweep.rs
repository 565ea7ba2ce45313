//! The velocity-mismatch metric M over k2/k1 for fast first packets.

use arrival::experiments::{default_ratio_grid, velocity_profile_options, velocity_sweep};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let grid = default_ratio_grid();
    let opts = velocity_profile_options();
    for k1 in [20.0, 40.0, 60.0] {
        let s = velocity_sweep(k1, &grid, 1.0, 40.0, &opts)?;
        let runs: Vec<String> = s
            .support
            .iter()
            .map(|(a, b)| format!("{a:.3}..{b:.3}"))
            .collect();
        println!(
            "k1 = {k1}: support width {:.3}, max M {:.3e}",
            s.support_width(),
            s.max_m
        );
        println!("  M > 0 on {}", runs.join(" "));
        let edge = &s.points[0];
        println!(
            "  ratio {:.2}: N+ {:.3e}, N- {:.3e}, M {}",
            edge.ratio, edge.n_plus, edge.n_minus, edge.m
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}

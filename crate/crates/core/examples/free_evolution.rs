//! Free spreading of a Gaussian packet and of a two-packet superposition.
//!
//! Run with `cargo run --example free_evolution`.

use arrival::wavepacket::spread_width;
use arrival::{GaussianPacket, WaveState};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let g = GaussianPacket::new(0.0, 1.5, 1.0)?;
    println!("single packet, x0 = 0, k = 1.5, sigma = 1");
    println!(
        "{:>6} {:>10} {:>10} {:>12}",
        "t", "center", "sigma_t", "norm"
    );
    let s = WaveState::single(g);
    for t in [0.0, 1.0, 2.0, 4.0, 8.0] {
        println!(
            "{t:>6.1} {:>10.4} {:>10.4} {:>12.9}",
            g.center(t),
            spread_width(1.0, t),
            s.norm_sqr(t)
        );
    }

    let pair = WaveState::new(vec![
        GaussianPacket::new(4.0, 0.0, 1.0)?,
        GaussianPacket::new(-4.0, 0.0, 1.0)?,
    ])?;
    println!("\ng1 + g2 at x0 = ±4: density along the line");
    for t in [0.0, 10.0, 25.0] {
        let row: Vec<String> = (-3..=3)
            .map(|i| format!("{:.4}", pair.density(4.0 * i as f64, t)))
            .collect();
        println!("t = {t:>4}: {}", row.join(" "));
    }
    let p = pair.momentum_amplitude(0.0);
    println!("momentum amplitude at p = 0: {:.6} {:+.6}i", p.re, p.im);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}

//! Detector current against its far-field form for a fast packet.

use arrival::analysis::transit_peak;
use arrival::{GaussianPacket, WaveState};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let k = 5.0;
    let s = WaveState::single(GaussianPacket::new(0.0, k, 1.0)?);
    println!(
        "{:>7} {:>9} {:>12} {:>12} {:>10}",
        "D", "t_peak", "j", "far field", "rel err"
    );
    for d in [25.0, 50.0, 100.0, 200.0, 400.0, 1000.0] {
        let p = transit_peak(&s, d, 0.5 * d / k, 2.0 * d / k)?;
        println!(
            "{d:>7} {:>9.4} {:>12.6e} {:>12.6e} {:>10.3e}",
            p.t,
            p.current,
            p.farfield,
            p.relative_error()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}

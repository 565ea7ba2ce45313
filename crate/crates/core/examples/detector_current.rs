//! Current through a detector at D = 10 for g1 ± g2, the sign test on the
//! window and the integrated negative part.

use arrival::experiments::SpreadingGeometry;
use arrival::{current_profile, ProfileOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let geometry = SpreadingGeometry::scaled(1.0);
    let (plus, minus) = geometry.states(1.0, 0.0)?;
    let window = geometry.window(1.0, 0.0)?;
    println!(
        "detector at D = {}, window (0, {})",
        window.position, window.t_end
    );
    for (name, state) in [("g1 + g2", plus), ("g1 - g2", minus)] {
        let p = current_profile(&state, &window, &ProfileOptions::default())?;
        println!("\n{name}");
        println!("  nonnegative on the window: {}", p.is_nonnegative());
        println!("  min j = {:.6e} at t = {:.4}", p.min_value, p.argmin);
        println!("  N = {:.6e}", p.neg_integral);
        for m in p.negative_minima() {
            println!("  negative minimum t = {:.4}, j = {:.6e}", m.t, m.j);
        }
        let step = p.times.len() / 8;
        let samples: Vec<String> = (0..p.times.len())
            .step_by(step)
            .map(|i| format!("{:.1}:{:+.2e}", p.times[i], p.values[i]))
            .collect();
        println!("  j(t) {}", samples.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}

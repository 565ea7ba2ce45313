//! A fan of Bohmian trajectories for g1 + g2 and the one that leaves the
//! detector at the current minimum.

use arrival::bohm::{
    integrate_trajectory, sample_initial_positions, seed_through, IntegratorOptions,
};
use arrival::experiments::SpreadingGeometry;
use arrival::{current_profile, ProfileOptions};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let geometry = SpreadingGeometry::scaled(1.0);
    let (plus, _) = geometry.states(1.0, 0.0)?;
    let window = geometry.window(1.0, 0.0)?;
    let opts = IntegratorOptions::default();

    println!(
        "{:>10} {:>10} {:>10} {:>9} first",
        "x(0)", "x(T/2)", "x(T)", "crossings"
    );
    let mut seeds = sample_initial_positions(&plus, 12, 7)?;
    seeds.sort_by(f64::total_cmp);
    for x0 in seeds {
        let traj = integrate_trajectory(&plus, x0, &window, &opts);
        let first = traj
            .first_crossing()
            .map_or("-".to_string(), |c| format!("{:.4}", c.t));
        println!(
            "{x0:>10.4} {:>10.4} {:>10.4} {:>9} {first}",
            traj.position_at(0.5 * window.t_end).unwrap_or(f64::NAN),
            traj.position_at(traj.end_time()).unwrap_or(f64::NAN),
            traj.crossing_count()
        );
    }

    let profile = current_profile(&plus, &window, &ProfileOptions::default())?;
    let x0 = seed_through(&plus, window.position, profile.argmin);
    let special = integrate_trajectory(&plus, x0, &window, &opts);
    println!(
        "\ntrajectory through the detector at t = {:.4} starts at x = {x0:.6}",
        profile.argmin
    );
    for c in &special.crossings {
        let way = if c.direction > 0 { "in" } else { "back" };
        println!("  crosses D at t = {:.6} ({way})", c.t);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}

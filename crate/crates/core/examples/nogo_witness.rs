//! Checks the four-state sign pattern behind the no-go argument and the
//! error bound of the momentum-based candidate density.

use arrival::analysis::{epsilon_bound_check, verify_nogo_witness, CandidatePovmDensity};
use arrival::experiments::SpreadingGeometry;
use arrival::{GaussianPacket, ProfileOptions, WaveState};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let psi = WaveState::single(GaussianPacket::new(4.0, 0.0, 1.0)?);
    let phi = WaveState::single(GaussianPacket::new(-4.0, 0.0, 1.0)?);
    let window = SpreadingGeometry::scaled(1.0).window(1.0, 0.0)?;
    let opts = ProfileOptions::default();

    let witness = verify_nogo_witness(&psi, &phi, &window, &opts)?;
    println!("memberships: {}", witness.memberships);
    println!(
        "{} goes negative: j = {:.6e} at t = {:.6}",
        witness.negative.label(),
        witness.j_minus,
        witness.t_minus
    );

    let candidate = CandidatePovmDensity::momentum(window.position)?;
    let report = epsilon_bound_check(&candidate, &psi, &phi, &window, &opts)?;
    let at = report.at_t_minus;
    println!("\ncandidate O(t) = (D/t^2) |psi~(D/t)|^2 against j");
    println!(
        "  eps at t_-: psi {:+.3e} phi {:+.3e} member {:+.3e} negative {:+.3e}",
        at.psi, at.phi, at.member, at.negative
    );
    println!(
        "  |eps_-(t_-)| - |j_-(t_-)| = {:.3e}",
        report.gap_at_t_minus
    );
    println!(
        "  bound 2|eps_psi| + 2|eps_phi| + |eps_+| >= |eps_-| holds: {}",
        report.bound_holds
    );
    println!(
        "  smallest slack {:.3e}, identity residual {:.1e}",
        report.min_slack, report.max_identity_residual
    );
    println!(
        "  max |eps_-| on the window {:.4e}",
        report.max_abs_eps_negative
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}

//! Arrival-time statistics for a free particle on the line.
//!
//! Units are `m = ħ = 1`. States are finite superpositions of Gaussian
//! packets evolved in closed form.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bohm;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod flux;
pub mod numerics;
pub mod wavepacket;

pub use analysis::{verify_nogo_witness, CandidatePovmDensity, NogoWitness};
pub use bohm::{first_arrival_ensemble, integrate_trajectory, IntegratorOptions, Trajectory};
pub use error::{Error, Result};
pub use flux::{
    current, current_profile, is_in_cplus, negative_current_integral, DetectorWindow,
    ProfileOptions,
};
pub use wavepacket::{GaussianPacket, WaveState};

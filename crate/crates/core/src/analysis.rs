//! The no-go argument in numbers.
//!
//! The detector current is a sesquilinear form in the wave function, so for
//! any pair `(ψ, φ)` it obeys the parallelogram law
//! `j_ψ + j_φ = ½ (j_{ψ+φ} + j_{ψ−φ})`. Any POVM density obeys the same law.
//! If `ψ`, `φ` and one of `ψ ± φ` have nonnegative current on the window
//! while the other combination does not, no nonnegative quadratic form can
//! agree with the current on all four states. This module checks that
//! pattern on concrete states, evaluates the error of a concrete candidate
//! (the momentum-based density) and the far-field approximation that makes
//! the candidate exact for scattering states.

use crate::error::{Error, Result};
use crate::flux::{self, CurrentProfile, DetectorWindow, ProfileOptions};
use crate::numerics;
use crate::wavepacket::WaveState;

/// The built-in candidate arrival-time density,
/// `O_ψ(t) = (D / t²) · |ψ̃(D / t)|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePovmDensity {
    detector: f64,
}

impl CandidatePovmDensity {
    /// Momentum-based candidate for a detector at `detector > 0`.
    pub fn momentum(detector: f64) -> Result<Self> {
        if !(detector > 0.0 && detector.is_finite()) {
            return Err(Error::InvalidWindow(format!(
                "candidate density needs a detector at D > 0, got {detector}"
            )));
        }
        Ok(Self { detector })
    }

    pub fn detector(&self) -> f64 {
        self.detector
    }

    pub fn value(&self, state: &WaveState, t: f64) -> Result<f64> {
        povm_value(self, state, t)
    }
}

fn dilated_momentum_density(state: &WaveState, d: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let p = d / t;
    Ok(d / (t * t) * state.momentum_amplitude(p).norm_sqr())
}

pub fn povm_value(candidate: &CandidatePovmDensity, state: &WaveState, t: f64) -> Result<f64> {
    dilated_momentum_density(state, candidate.detector, t)
}

/// Far-field approximation of the detector current,
/// `j(D, t) ≈ (D / t²) · |ψ̃(D / t)|²`.
pub fn farfield_current(state: &WaveState, detector: f64, t: f64) -> Result<f64> {
    dilated_momentum_density(state, detector, t)
}

/// Maximum of the detector current and the far-field value there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitPeak {
    pub t: f64,
    pub current: f64,
    pub farfield: f64,
}

impl TransitPeak {
    pub fn relative_error(&self) -> f64 {
        (self.farfield - self.current).abs() / self.current.abs()
    }
}

/// Locates the largest detector current on `[t_lo, t_hi]` (grid scan, then
/// golden section) and evaluates the far-field approximation there.
pub fn transit_peak(state: &WaveState, detector: f64, t_lo: f64, t_hi: f64) -> Result<TransitPeak> {
    if !(t_lo > 0.0 && t_hi > t_lo) {
        return Err(Error::InvalidWindow(format!(
            "transit search range [{t_lo}, {t_hi}]"
        )));
    }
    let neg_j = |t: f64| -flux::current(state, detector, t);
    let grid = numerics::linspace(t_lo, t_hi, 2048);
    let i = (0..grid.len())
        .min_by(|&a, &b| neg_j(grid[a]).total_cmp(&neg_j(grid[b])))
        .unwrap_or(0);
    let a = grid[i.saturating_sub(1)];
    let b = grid[(i + 1).min(grid.len() - 1)];
    let (t, f) = numerics::golden_section_min(&neg_j, a, b, 1e-12 * t_hi);
    Ok(TransitPeak {
        t,
        current: -f,
        farfield: farfield_current(state, detector, t)?,
    })
}

/// `j_ψ + j_φ − ½ (j_{ψ+φ} + j_{ψ−φ})` at the detector and time `t`.
pub fn parallelogram_residual(
    psi: &WaveState,
    phi: &WaveState,
    window: &DetectorWindow,
    t: f64,
) -> f64 {
    let d = window.position;
    let j = |s: &WaveState| flux::current(s, d, t);
    j(psi) + j(phi) - 0.5 * (j(&(psi + phi)) + j(&(psi - phi)))
}

/// Which of the two combinations fails to stay nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combination {
    Sum,
    Difference,
}

impl Combination {
    pub fn label(&self) -> &'static str {
        match self {
            Combination::Sum => "psi+phi",
            Combination::Difference => "psi-phi",
        }
    }

    fn other(&self) -> Self {
        match self {
            Combination::Sum => Combination::Difference,
            Combination::Difference => Combination::Sum,
        }
    }
}

/// Nonnegative-current memberships of `ψ`, `φ`, `ψ+φ`, `ψ−φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Memberships {
    pub psi: bool,
    pub phi: bool,
    pub sum: bool,
    pub difference: bool,
}

impl Memberships {
    fn of(&self, c: Combination) -> bool {
        match c {
            Combination::Sum => self.sum,
            Combination::Difference => self.difference,
        }
    }
}

impl std::fmt::Display for Memberships {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mark = |b: bool| if b { "in" } else { "out" };
        write!(
            f,
            "psi {}, phi {}, psi+phi {}, psi-phi {}",
            mark(self.psi),
            mark(self.phi),
            mark(self.sum),
            mark(self.difference)
        )
    }
}

/// A certified instance of the no-go hypothesis pattern.
#[derive(Debug, Clone)]
pub struct NogoWitness {
    pub psi: WaveState,
    pub phi: WaveState,
    pub window: DetectorWindow,
    pub memberships: Memberships,
    /// The combination whose current goes negative.
    pub negative: Combination,
    pub t_minus: f64,
    pub j_minus: f64,
    /// Refined minima of the negative combination's current.
    pub negative_profile: CurrentProfile,
}

impl NogoWitness {
    pub fn negative_state(&self) -> WaveState {
        combine(&self.psi, &self.phi, self.negative)
    }

    pub fn nonnegative_state(&self) -> WaveState {
        combine(&self.psi, &self.phi, self.negative.other())
    }
}

fn combine(psi: &WaveState, phi: &WaveState, c: Combination) -> WaveState {
    match c {
        Combination::Sum => psi + phi,
        Combination::Difference => psi - phi,
    }
}

/// Checks that `ψ`, `φ` and exactly one of `ψ ± φ` have nonnegative detector
/// current on the window, and returns the time where the other goes negative.
pub fn verify_nogo_witness(
    psi: &WaveState,
    phi: &WaveState,
    window: &DetectorWindow,
    opts: &ProfileOptions,
) -> Result<NogoWitness> {
    let sum = psi + phi;
    let diff = psi - phi;
    let scale = psi.norm_sqr(0.0) + phi.norm_sqr(0.0);
    for (label, s) in [
        ("psi", psi),
        ("phi", phi),
        ("psi+phi", &sum),
        ("psi-phi", &diff),
    ] {
        if !(s.norm_sqr(0.0) > 1e-20 * scale) {
            return Err(Error::PatternNotSatisfied(format!(
                "{label} is the zero state"
            )));
        }
    }

    let profiles = [psi, phi, &sum, &diff].map(|s| flux::current_profile(s, window, opts));
    let [p_psi, p_phi, p_sum, p_diff] = profiles;
    let (p_psi, p_phi, p_sum, p_diff) = (p_psi?, p_phi?, p_sum?, p_diff?);
    let memberships = Memberships {
        psi: p_psi.is_nonnegative(),
        phi: p_phi.is_nonnegative(),
        sum: p_sum.is_nonnegative(),
        difference: p_diff.is_nonnegative(),
    };

    let negative = match (
        memberships.psi && memberships.phi,
        memberships.sum,
        memberships.difference,
    ) {
        (true, true, false) => Combination::Difference,
        (true, false, true) => Combination::Sum,
        _ => return Err(Error::PatternNotSatisfied(memberships.to_string())),
    };
    let negative_profile = match negative {
        Combination::Sum => p_sum,
        Combination::Difference => p_diff,
    };
    debug_assert!(!memberships.of(negative));
    Ok(NogoWitness {
        psi: psi.clone(),
        phi: phi.clone(),
        window: *window,
        memberships,
        negative,
        t_minus: negative_profile.argmin,
        j_minus: negative_profile.min_value,
        negative_profile,
    })
}

/// `ε = O − j` for the four states at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSample {
    pub t: f64,
    pub psi: f64,
    pub phi: f64,
    /// The combination inside the nonnegative set.
    pub member: f64,
    /// The combination with negative current.
    pub negative: f64,
    pub j_negative: f64,
}

impl EpsilonSample {
    /// `2|ε_ψ| + 2|ε_φ| + |ε_member| − |ε_negative|`, never negative.
    pub fn slack(&self) -> f64 {
        2.0 * self.psi.abs() + 2.0 * self.phi.abs() + self.member.abs() - self.negative.abs()
    }

    /// `2ε_ψ + 2ε_φ − ε_member − ε_negative`, zero up to rounding.
    pub fn identity_residual(&self) -> f64 {
        2.0 * self.psi + 2.0 * self.phi - self.member - self.negative
    }
}

/// Error of a candidate density against the current on a no-go witness.
#[derive(Debug, Clone)]
pub struct EpsilonReport {
    pub samples: Vec<EpsilonSample>,
    pub min_slack: f64,
    pub max_identity_residual: f64,
    pub at_t_minus: EpsilonSample,
    /// `|ε_negative(t_−)| − |j_negative(t_−)|`, positive because `O ≥ 0`.
    pub gap_at_t_minus: f64,
    pub max_abs_eps_negative: f64,
    pub bound_holds: bool,
}

/// Slack allowed on the triangle bound, relative to the largest `|ε|`.
pub const BOUND_ROUNDING: f64 = 1e-12;

/// Points of the uniform 4096-interval grid on `(0, T]`.
pub const EPSILON_GRID: usize = 4096;

fn epsilon_sample(
    candidate: &CandidatePovmDensity,
    states: [&WaveState; 4],
    d: f64,
    t: f64,
) -> Result<EpsilonSample> {
    let eps = |s: &WaveState| -> Result<(f64, f64)> {
        let j = flux::current(s, d, t);
        Ok((povm_value(candidate, s, t)? - j, j))
    };
    let (psi, _) = eps(states[0])?;
    let (phi, _) = eps(states[1])?;
    let (member, _) = eps(states[2])?;
    let (negative, j_negative) = eps(states[3])?;
    Ok(EpsilonSample {
        t,
        psi,
        phi,
        member,
        negative,
        j_negative,
    })
}

/// Evaluates `ε = O − j` for the four states on the window grid plus every
/// refined minimum, checks `2|ε_ψ| + 2|ε_φ| + |ε_+| ≥ |ε_−|` everywhere and
/// reports the gap at `t_−`.
pub fn epsilon_bound_check(
    candidate: &CandidatePovmDensity,
    psi: &WaveState,
    phi: &WaveState,
    window: &DetectorWindow,
    opts: &ProfileOptions,
) -> Result<EpsilonReport> {
    let witness = verify_nogo_witness(psi, phi, window, opts)?;
    let member_state = witness.nonnegative_state();
    let negative_state = witness.negative_state();
    let states = [psi, phi, &member_state, &negative_state];
    let d = window.position;

    let mut times: Vec<f64> = numerics::linspace(0.0, window.t_end, EPSILON_GRID)
        .into_iter()
        .skip(1)
        .collect();
    times.extend(
        witness
            .negative_profile
            .refined_minima
            .iter()
            .map(|m| m.t)
            .filter(|&t| t > 0.0),
    );
    times.sort_by(f64::total_cmp);
    times.dedup();

    let samples = times
        .iter()
        .map(|&t| epsilon_sample(candidate, states, d, t))
        .collect::<Result<Vec<_>>>()?;
    let at_t_minus = epsilon_sample(candidate, states, d, witness.t_minus)?;

    let scale = samples
        .iter()
        .map(|s| {
            s.psi
                .abs()
                .max(s.phi.abs())
                .max(s.member.abs())
                .max(s.negative.abs())
        })
        .fold(0.0_f64, f64::max)
        .max(1e-300);
    let min_slack = samples
        .iter()
        .map(EpsilonSample::slack)
        .fold(f64::INFINITY, f64::min);
    let max_identity_residual = samples
        .iter()
        .map(|s| s.identity_residual().abs())
        .fold(0.0_f64, f64::max);
    let max_abs_eps_negative = samples
        .iter()
        .map(|s| s.negative.abs())
        .fold(0.0_f64, f64::max);
    let gap_at_t_minus = at_t_minus.negative.abs() - at_t_minus.j_negative.abs();
    let bound_holds =
        min_slack >= -BOUND_ROUNDING * scale && at_t_minus.slack() >= -BOUND_ROUNDING * scale;

    Ok(EpsilonReport {
        samples,
        min_slack,
        max_identity_residual,
        at_t_minus,
        gap_at_t_minus,
        max_abs_eps_negative,
        bound_holds,
    })
}

//! Probability current at a detector point, membership in the set of states
//! whose detector current stays nonnegative over the active window, and the
//! integrated negative current `N_ψ`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics;
use crate::wavepacket::WaveState;

/// Detector at position `position`, active on `(0, t_end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorWindow {
    pub position: f64,
    pub t_end: f64,
}

impl DetectorWindow {
    pub fn new(position: f64, t_end: f64) -> Result<Self> {
        if !position.is_finite() {
            return Err(Error::InvalidWindow(format!(
                "detector position {position} is not finite"
            )));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidWindow(format!(
                "window end T = {t_end} must be positive and finite"
            )));
        }
        Ok(Self { position, t_end })
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= 0.0 && t <= self.t_end
    }
}

/// Sampling and tolerance knobs for [`current_profile`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Number of uniform intervals on the window (`n_coarse + 1` samples).
    pub n_coarse: usize,
    /// A current counts as negative only below `-eps_rel * max|j|`.
    pub eps_rel: f64,
    /// Absolute tolerance of the quadrature on each negative stretch.
    pub quad_tol: f64,
    /// Time accuracy of minimum refinement, relative to the window length.
    pub refine_tol_rel: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            n_coarse: 2048,
            eps_rel: 1e-9,
            quad_tol: 1e-10,
            refine_tol_rel: 1e-6,
        }
    }
}

impl ProfileOptions {
    pub fn with_n_coarse(self, n_coarse: usize) -> Self {
        Self { n_coarse, ..self }
    }
}

/// A locally refined minimum of the detector current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentMinimum {
    pub t: f64,
    pub j: f64,
}

/// The detector current sampled over the window, with refined minima and
/// the negative-current integral.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentProfile {
    pub window: DetectorWindow,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub refined_minima: Vec<CurrentMinimum>,
    /// Smallest current seen, over samples and refined minima.
    pub min_value: f64,
    /// Time at which `min_value` occurs.
    pub argmin: f64,
    /// `max |j|` over the samples.
    pub max_abs: f64,
    /// Negativity threshold actually used, `eps_rel * max_abs`.
    pub tolerance: f64,
    /// `N_ψ`, the integral of `|j|` over the stretches where `j < 0`.
    pub neg_integral: f64,
}

impl CurrentProfile {
    /// True when no current below `-tolerance` was found.
    pub fn is_nonnegative(&self) -> bool {
        self.min_value >= -self.tolerance
    }

    /// Refined minima lying strictly below the negativity threshold.
    pub fn negative_minima(&self) -> impl Iterator<Item = &CurrentMinimum> {
        self.refined_minima
            .iter()
            .filter(move |m| m.j < -self.tolerance)
    }
}

/// Probability current `Im(ψ* ∂ₓψ)` at `(x, t)`.
pub fn current(state: &WaveState, x: f64, t: f64) -> f64 {
    let (psi, dpsi) = state.evaluate_with_gradient(x, t);
    (psi.conj() * dpsi).im
}

/// Samples `j(D, t)` on the window, refines every discrete local minimum by
/// golden-section search, and integrates the negative part.
pub fn current_profile(
    state: &WaveState,
    window: &DetectorWindow,
    opts: &ProfileOptions,
) -> Result<CurrentProfile> {
    DetectorWindow::new(window.position, window.t_end)?;
    if opts.n_coarse < 64 {
        return Err(Error::InvalidConfiguration(format!(
            "n_coarse = {} is below the minimum of 64",
            opts.n_coarse
        )));
    }
    let d = window.position;
    let j = |t: f64| current(state, d, t);

    let times = numerics::linspace(0.0, window.t_end, opts.n_coarse);
    let values: Vec<f64> = times.par_iter().map(|&t| j(t)).collect();
    let max_abs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tolerance = opts.eps_rel * max_abs;

    let last = values.len() - 1;
    let minima_idx: Vec<usize> = (0..=last)
        .filter(|&i| {
            let left = i == 0 || values[i] < values[i - 1];
            let right = i == last || values[i] <= values[i + 1];
            left && right
        })
        .collect();
    let refine_tol = opts.refine_tol_rel * window.t_end;
    let refined_minima: Vec<CurrentMinimum> = minima_idx
        .par_iter()
        .map(|&i| {
            let lo = times[i.saturating_sub(1)];
            let hi = times[(i + 1).min(last)];
            let (t, v) = numerics::golden_section_min(&j, lo, hi, refine_tol);
            if v <= values[i] {
                CurrentMinimum { t, j: v }
            } else {
                CurrentMinimum {
                    t: times[i],
                    j: values[i],
                }
            }
        })
        .collect();

    let (mut min_value, mut argmin) = (f64::INFINITY, 0.0);
    for (&t, &v) in times.iter().zip(&values) {
        if v < min_value {
            min_value = v;
            argmin = t;
        }
    }
    for m in &refined_minima {
        if m.j < min_value {
            min_value = m.j;
            argmin = m.t;
        }
    }

    let neg_integral =
        integrate_negative_part(&j, &times, &values, &refined_minima, tolerance, opts);

    Ok(CurrentProfile {
        window: *window,
        times,
        values,
        refined_minima,
        min_value,
        argmin,
        max_abs,
        tolerance,
        neg_integral,
    })
}

fn integrate_negative_part<F>(
    j: &F,
    times: &[f64],
    values: &[f64],
    minima: &[CurrentMinimum],
    tolerance: f64,
    opts: &ProfileOptions,
) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let mut points: Vec<(f64, f64)> = times.iter().copied().zip(values.iter().copied()).collect();
    points.extend(minima.iter().map(|m| (m.t, m.j)));
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    points.dedup_by(|a, b| a.0 == b.0);

    let t_end = times[times.len() - 1];
    let root_tol = 1e-13 * t_end.max(1e-300);
    let last = points.len() - 1;

    // Negative runs of consecutive samples, bounded by refined zeros of j.
    let mut stretches = Vec::new();
    let mut i = 0;
    while i <= last {
        if points[i].1 >= 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        let mut run_min = points[i].1;
        while i < last && points[i + 1].1 < 0.0 {
            i += 1;
            run_min = run_min.min(points[i].1);
        }
        let end = i;
        i += 1;
        if run_min >= -tolerance {
            continue;
        }
        let lo = if start == 0 {
            points[0].0
        } else {
            numerics::bisect_root(j, points[start - 1].0, points[start].0, root_tol)
        };
        let hi = if end == last {
            points[last].0
        } else {
            numerics::bisect_root(j, points[end].0, points[end + 1].0, root_tol)
        };
        stretches.push((lo, hi));
    }

    let neg = |t: f64| (-j(t)).max(0.0);
    let parts: Vec<f64> = stretches
        .par_iter()
        .map(|&(lo, hi)| numerics::adaptive_simpson(&neg, lo, hi, opts.quad_tol))
        .collect();
    // Fixed index order keeps the sum independent of the thread schedule.
    parts.iter().fold(0.0, |acc, p| acc + p)
}

/// Membership verdict for the nonnegative-current set on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct CplusVerdict {
    pub member: bool,
    /// Time and value of the most negative current when not a member.
    pub witness: Option<CurrentMinimum>,
    pub profile: CurrentProfile,
}

pub fn is_in_cplus(
    state: &WaveState,
    window: &DetectorWindow,
    opts: &ProfileOptions,
) -> Result<CplusVerdict> {
    let profile = current_profile(state, window, opts)?;
    let member = profile.is_nonnegative();
    let witness = (!member).then_some(CurrentMinimum {
        t: profile.argmin,
        j: profile.min_value,
    });
    Ok(CplusVerdict {
        member,
        witness,
        profile,
    })
}

/// `N_ψ = ∫_I |j(D, t)| · 1[j(D, t) < 0] dt`.
pub fn negative_current_integral(
    state: &WaveState,
    window: &DetectorWindow,
    opts: &ProfileOptions,
) -> Result<f64> {
    Ok(current_profile(state, window, opts)?.neg_integral)
}

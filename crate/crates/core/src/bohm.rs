//! Bohmian trajectories `dX/dt = j(X, t) / |ψ(X, t)|²`, initial positions
//! drawn from `|ψ₀|²`, and first-arrival statistics at the detector.
//!
//! Trajectories are integrated with an embedded Dormand–Prince 5(4) pair and
//! its free 4th-order dense output. Crossings of the detector are sign
//! changes of `X - D` between accepted steps, localized by bisection on the
//! dense output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flux::{self, DetectorWindow};
use crate::numerics;
use crate::wavepacket::WaveState;

/// Densities below this are treated as a node of the wave function.
pub const DENSITY_FLOOR: f64 = 1e-30;

/// Bohmian velocity `j / |ψ|²` at `(x, t)`.
pub fn velocity(state: &WaveState, x: f64, t: f64) -> Result<f64> {
    let (psi, dpsi) = state.evaluate_with_gradient(x, t);
    let density = psi.norm_sqr();
    if !(density >= DENSITY_FLOOR) {
        return Err(Error::NodeProximity { x, t, density });
    }
    Ok((psi.conj() * dpsi).im / density)
}

/// Tolerances and step limits of the trajectory integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step as a fraction of the window length.
    pub max_step_fraction: f64,
    /// Consecutive step halvings near a node before the trajectory is abandoned.
    pub max_halvings: u32,
    /// Stop as soon as the first crossing is located.
    pub stop_at_first_crossing: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_step_fraction: 1.0 / 256.0,
            max_halvings: 60,
            stop_at_first_crossing: false,
        }
    }
}

impl IntegratorOptions {
    /// Both tolerances multiplied by `factor`.
    pub fn scaled_tolerances(self, factor: f64) -> Self {
        Self {
            rtol: self.rtol * factor,
            atol: self.atol * factor,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    WindowEnd,
    CrossingRecorded,
    NodeProximityFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::WindowEnd => "window-end",
            Termination::CrossingRecorded => "crossing-recorded",
            Termination::NodeProximityFailure => "node-proximity-failure",
        }
    }
}

/// Passage through the detector; `direction` is `+1` left to right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub direction: i8,
}

/// Dense-output polynomial of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    t0: f64,
    h: f64,
    r: [f64; 5],
}

impl Segment {
    fn eval(&self, t: f64) -> f64 {
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        let r = &self.r;
        r[0] + theta * (r[1] + theta1 * (r[2] + theta * (r[3] + theta1 * r[4])))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed_position: f64,
    /// Accepted `(t, X(t))` nodes, starting at `(0, seed_position)`.
    pub nodes: Vec<(f64, f64)>,
    /// Every crossing of the detector, in time order.
    pub crossings: Vec<Crossing>,
    pub termination: Termination,
    segments: Vec<Segment>,
}

impl Trajectory {
    pub fn first_crossing(&self) -> Option<Crossing> {
        self.crossings.first().copied()
    }

    pub fn crossing_count(&self) -> usize {
        self.crossings.len()
    }

    pub fn failed(&self) -> bool {
        self.termination == Termination::NodeProximityFailure
    }

    pub fn end_time(&self) -> f64 {
        self.nodes.last().map_or(0.0, |n| n.0)
    }

    /// Position at time `t` from the dense output, or `None` outside the
    /// integrated range.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        if t == 0.0 {
            return Some(self.seed_position);
        }
        if !(t > 0.0 && t <= self.end_time()) {
            return None;
        }
        let idx = self
            .segments
            .partition_point(|s| s.t0 + s.h < t)
            .min(self.segments.len() - 1);
        Some(self.segments[idx].eval(t))
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Step {
    y1: f64,
    k7: f64,
    err: f64,
    segment: Segment,
}

fn dp_step(
    state: &WaveState,
    t: f64,
    y: f64,
    k1: f64,
    h: f64,
    opts: &IntegratorOptions,
) -> Result<Step> {
    let v = |t: f64, x: f64| velocity(state, x, t);
    let k2 = v(t + C2 * h, y + h * A21 * k1)?;
    let k3 = v(t + C3 * h, y + h * (A31 * k1 + A32 * k2))?;
    let k4 = v(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
    let k5 = v(
        t + C5 * h,
        y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
    )?;
    let k6 = v(
        t + h,
        y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
    )?;
    let y1 = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
    let k7 = v(t + h, y1)?;
    let err_abs = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    let scale = opts.atol + opts.rtol * y.abs().max(y1.abs());
    let err = (err_abs / scale).abs();

    let ydiff = y1 - y;
    let bspl = h * k1 - ydiff;
    let segment = Segment {
        t0: t,
        h,
        r: [
            y,
            ydiff,
            bspl,
            ydiff - h * k7 - bspl,
            h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
        ],
    };
    Ok(Step {
        y1,
        k7,
        err,
        segment,
    })
}

fn side(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Integrates one trajectory from `x_init` at `t = 0` over the window.
pub fn integrate_trajectory(
    state: &WaveState,
    x_init: f64,
    window: &DetectorWindow,
    opts: &IntegratorOptions,
) -> Trajectory {
    let t_end = window.t_end;
    let d = window.position;
    let h_max = opts.max_step_fraction * t_end;
    let event_tol = 1e-14 * t_end;

    let mut traj = Trajectory {
        seed_position: x_init,
        nodes: vec![(0.0, x_init)],
        crossings: Vec::new(),
        termination: Termination::WindowEnd,
        segments: Vec::new(),
    };

    let mut t = 0.0;
    let mut y = x_init;
    let mut k1 = match velocity(state, y, t) {
        Ok(v) => v,
        Err(_) => {
            traj.termination = Termination::NodeProximityFailure;
            return traj;
        }
    };
    let mut h = 0.1 * h_max;
    let mut halvings = 0u32;
    let mut last_side = side(y - d);
    let mut last_side_time = 0.0;

    while t < t_end {
        let mut step_h = h.min(h_max);
        if t + step_h >= t_end || t_end - (t + step_h) < 1e-12 * t_end {
            step_h = t_end - t;
        }
        let step = match dp_step(state, t, y, k1, step_h, opts) {
            Ok(s) => s,
            Err(_) => {
                halvings += 1;
                if halvings >= opts.max_halvings {
                    traj.termination = Termination::NodeProximityFailure;
                    return traj;
                }
                h = 0.5 * step_h;
                continue;
            }
        };
        halvings = 0;
        if !(step.err <= 1.0) {
            let factor = if step.err.is_finite() {
                (0.9 * step.err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h = step_h * factor;
            continue;
        }

        let t1 = if step_h == t_end - t {
            t_end
        } else {
            t + step_h
        };
        let new_side = side(step.y1 - d);
        let mut stop = false;
        if new_side != 0 && last_side != 0 && new_side != last_side {
            let t_cross = if y - d == 0.0 {
                last_side_time
            } else {
                let seg = step.segment;
                numerics::bisect_root(&|s: f64| seg.eval(s) - d, t, t1, event_tol)
            };
            traj.crossings.push(Crossing {
                t: t_cross,
                direction: new_side,
            });
            stop = opts.stop_at_first_crossing;
        }
        if new_side != 0 {
            last_side = new_side;
            last_side_time = t1;
        } else if last_side == 0 {
            last_side_time = t1;
        }

        traj.segments.push(step.segment);
        t = t1;
        y = step.y1;
        k1 = step.k7;
        traj.nodes.push((t, y));

        let factor = if step.err > 0.0 {
            (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = step_h * factor;

        if stop {
            traj.termination = Termination::CrossingRecorded;
            break;
        }
    }
    traj
}

/// Initial position whose trajectory passes through `(x, t)`.
///
/// Trajectories never cross each other, so the probability to the left of a
/// trajectory is conserved; the seed is the `|ψ₀|²` quantile matching the
/// `|ψ_t|²` probability to the left of `x`.
pub fn seed_through(state: &WaveState, x: f64, t: f64) -> f64 {
    let norm = state.norm_sqr(0.0);
    let target = state.probability_between(f64::NEG_INFINITY, x, t) / state.norm_sqr(t) * norm;
    let support = state.support(0.0);
    let lo = support.first().map_or(-1.0, |s| s.0);
    let hi = support.last().map_or(1.0, |s| s.1);
    let span = hi - lo;
    numerics::bisect_root(
        &|x0: f64| state.probability_between(f64::NEG_INFINITY, x0, 0.0) - target,
        lo,
        hi,
        1e-13 * span,
    )
}

fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Rejection sampler for `|ψ₀|²` with the Gaussian-mixture envelope
/// `m · Σ |cᵢ|² |gᵢ|²`.
#[derive(Debug, Clone)]
pub struct InitialSampler<'a> {
    state: &'a WaveState,
    weights: Vec<f64>,
    total_weight: f64,
    n_terms: f64,
    acceptance: f64,
}

const MAX_ATTEMPTS_PER_SAMPLE: u32 = 100_000;

impl<'a> InitialSampler<'a> {
    pub fn new(state: &'a WaveState) -> Result<Self> {
        let weights: Vec<f64> = state.terms().iter().map(|p| p.coeff.norm_sqr()).collect();
        let total_weight: f64 = weights.iter().sum();
        let n_terms = weights.iter().filter(|&&w| w > 0.0).count() as f64;
        if !(total_weight > 0.0) {
            return Err(Error::EnvelopeFailure { rate: 0.0 });
        }
        let acceptance = state.norm_sqr(0.0) / (n_terms * total_weight);
        if !(acceptance >= 0.01) {
            return Err(Error::EnvelopeFailure { rate: acceptance });
        }
        Ok(Self {
            state,
            weights,
            total_weight,
            n_terms,
            acceptance,
        })
    }

    /// Expected fraction of accepted proposals.
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance
    }

    fn envelope(&self, x: f64) -> f64 {
        let mix: f64 = self
            .state
            .terms()
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| {
                let z = (x - p.x0) / p.sigma;
                w * (-0.5 * z * z).exp() / (p.sigma * (2.0 * std::f64::consts::PI).sqrt())
            })
            .sum();
        self.n_terms * mix
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<f64> {
        for _ in 0..MAX_ATTEMPTS_PER_SAMPLE {
            let mut u = rng.random::<f64>() * self.total_weight;
            let mut idx = self.weights.len() - 1;
            for (i, &w) in self.weights.iter().enumerate() {
                if u < w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            let p = &self.state.terms()[idx];
            let z: f64 = rng.sample(StandardNormal);
            let x = p.x0 + p.sigma * z;
            let accept: f64 = rng.random();
            if accept * self.envelope(x) < self.state.density(x, 0.0) {
                return Ok(x);
            }
        }
        Err(Error::EnvelopeFailure {
            rate: 1.0 / MAX_ATTEMPTS_PER_SAMPLE as f64,
        })
    }

    /// Sample number `index` of the substream family seeded by `seed`.
    pub fn sample_indexed(&self, seed: u64, index: u64) -> Result<f64> {
        self.sample(&mut substream(seed, index))
    }
}

/// `n` independent draws from `|ψ₀|²`; draw `i` uses its own substream.
pub fn sample_initial_positions(state: &WaveState, n: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = InitialSampler::new(state)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| sampler.sample_indexed(seed, i))
        .collect()
}

/// Outcome of a Monte Carlo first-arrival experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalEnsemble {
    pub n_samples: usize,
    pub seed: u64,
    pub window: DetectorWindow,
    /// First-crossing times of the trajectories that reached the detector,
    /// in trajectory index order.
    pub crossing_times: Vec<f64>,
    pub n_never: usize,
    /// Trajectories abandoned near a node (also counted above).
    pub n_failed: usize,
    pub bin_edges: Vec<f64>,
    pub histogram: Vec<u64>,
    /// Detector crossings per trajectory, in index order.
    pub crossing_counts: Vec<usize>,
    pub seeds: Vec<f64>,
}

impl ArrivalEnsemble {
    pub fn failure_fraction(&self) -> f64 {
        if self.n_samples == 0 {
            0.0
        } else {
            self.n_failed as f64 / self.n_samples as f64
        }
    }
}

/// Integrates `n` trajectories from `|ψ₀|²` seeds and bins first crossings.
pub fn first_arrival_ensemble(
    state: &WaveState,
    window: &DetectorWindow,
    n: usize,
    seed: u64,
    n_bins: usize,
    opts: &IntegratorOptions,
) -> Result<ArrivalEnsemble> {
    DetectorWindow::new(window.position, window.t_end)?;
    if n_bins == 0 {
        return Err(Error::InvalidConfiguration(
            "histogram needs at least one bin".into(),
        ));
    }
    let bin_edges = numerics::linspace(0.0, window.t_end, n_bins);
    if n == 0 {
        return Ok(ArrivalEnsemble {
            n_samples: 0,
            seed,
            window: *window,
            crossing_times: Vec::new(),
            n_never: 0,
            n_failed: 0,
            bin_edges,
            histogram: vec![0; n_bins],
            crossing_counts: Vec::new(),
            seeds: Vec::new(),
        });
    }
    let seeds = sample_initial_positions(state, n, seed)?;
    let outcomes: Vec<(Option<f64>, usize, bool)> = seeds
        .par_iter()
        .map(|&x0| {
            let traj = integrate_trajectory(state, x0, window, opts);
            (
                traj.first_crossing().map(|c| c.t),
                traj.crossing_count(),
                traj.failed(),
            )
        })
        .collect();

    let mut histogram = vec![0u64; n_bins];
    let mut crossing_times = Vec::new();
    let mut n_never = 0;
    let mut n_failed = 0;
    let mut crossing_counts = Vec::with_capacity(n);
    let width = window.t_end / n_bins as f64;
    for &(first, count, failed) in &outcomes {
        crossing_counts.push(count);
        if failed {
            n_failed += 1;
        }
        match first {
            Some(t) => {
                crossing_times.push(t);
                let bin = ((t / width) as usize).min(n_bins - 1);
                histogram[bin] += 1;
            }
            None => n_never += 1,
        }
    }
    Ok(ArrivalEnsemble {
        n_samples: n,
        seed,
        window: *window,
        crossing_times,
        n_never,
        n_failed,
        bin_edges,
        histogram,
        crossing_counts,
        seeds,
    })
}

/// Number of detector crossings of each of `n` seeded trajectories.
pub fn crossing_count_map(
    state: &WaveState,
    window: &DetectorWindow,
    n: usize,
    seed: u64,
    opts: &IntegratorOptions,
) -> Result<Vec<usize>> {
    let seeds = sample_initial_positions(state, n, seed)?;
    Ok(seeds
        .par_iter()
        .map(|&x0| integrate_trajectory(state, x0, window, opts).crossing_count())
        .collect())
}

/// Expected first-arrival probability per bin from the detector current,
/// `∫_bin j(D, t) dt / ‖ψ‖²`. Meaningful as arrival statistics only when
/// the current is nonnegative on the window.
pub fn flux_bin_probabilities(
    state: &WaveState,
    window: &DetectorWindow,
    n_bins: usize,
) -> Vec<f64> {
    let norm = state.norm_sqr(0.0);
    let edges = numerics::linspace(0.0, window.t_end, n_bins);
    let j = |t: f64| flux::current(state, window.position, t);
    edges
        .windows(2)
        .map(|w| {
            numerics::adaptive_simpson_panels(&j, w[0], w[1], (w[1] - w[0]) / 8.0, 1e-13) / norm
        })
        .collect()
}

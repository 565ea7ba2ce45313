#![allow(dead_code)]

use arrival::experiments::SpreadingGeometry;
use arrival::{DetectorWindow, GaussianPacket, WaveState};

pub fn packet(x0: f64, k: f64, sigma: f64) -> GaussianPacket {
    GaussianPacket::new(x0, k, sigma).unwrap()
}

pub fn single(x0: f64, k: f64, sigma: f64) -> WaveState {
    WaveState::single(packet(x0, k, sigma))
}

/// `(g₁, g₂)` at `±4`, `k = 0`, `σ = 1`.
pub fn counterexample_pair() -> (WaveState, WaveState) {
    (single(4.0, 0.0, 1.0), single(-4.0, 0.0, 1.0))
}

pub fn counterexample_window() -> DetectorWindow {
    SpreadingGeometry::scaled(1.0).window(1.0, 0.0).unwrap()
}

/// Kolmogorov–Smirnov distance of `samples` against the `|ψ_t|²` law.
pub fn ks_distance(state: &WaveState, t: f64, samples: &[f64]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let norm = state.norm_sqr(t);
    let n = xs.len() as f64;
    let mut cdf = state.probability_between(f64::NEG_INFINITY, xs[0], t) / norm;
    let mut d: f64 = 0.0;
    for i in 0..xs.len() {
        if i > 0 {
            cdf += state.probability_between(xs[i - 1], xs[i], t) / norm;
        }
        d = d.max(cdf - i as f64 / n).max((i + 1) as f64 / n - cdf);
    }
    d
}

/// Midpoint Riemann sum of `max(-j, 0)` on `n` cells, plus the smallest sample.
pub fn riemann_negative(state: &WaveState, window: &DetectorWindow, n: usize) -> (f64, f64) {
    let h = window.t_end / n as f64;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    for i in 0..n {
        let j = arrival::current(state, window.position, (i as f64 + 0.5) * h);
        min = min.min(j);
        if j < 0.0 {
            sum -= j;
        }
    }
    (sum * h, min)
}

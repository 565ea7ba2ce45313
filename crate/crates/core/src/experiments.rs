//! Two-packet parameter studies of the negative detector current.
//!
//! * Spreading: two packets of equal momentum `k` placed symmetrically at
//!   `±a`; `N` of both superpositions `g₁ ± g₂` as a function of `k`, and the
//!   threshold `k_σ` above which both vanish.
//! * Velocity mismatch: a fast packet at the origin and a second packet placed
//!   so that the two maxima meet at `D + σ_t`; the indicator-weighted sum
//!   `M = (N₊ + N₋) · χ₀` as a function of `k₂ / k₁`.
//!
//! Packets in these studies carry the plane wave `e^{ikx}` measured from the
//! common origin, i.e. coefficient `e^{i k x₀}` on top of the per-packet
//! phase convention of [`GaussianPacket`].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flux::{self, DetectorWindow, ProfileOptions};
use crate::numerics;
use crate::wavepacket::{spread_width, GaussianPacket, WaveState};

/// Hand-tuned velocity offset in the window rule.
pub const WINDOW_VELOCITY_OFFSET: f64 = 5.0 / 12.0;

/// Window length `T = (d − 3σ) / (k₂ + 5/12)` where `d` is the initial
/// distance between the detector and the furthest packet and `k₂` is that
/// packet's mean momentum.
pub fn window_t(x2_distance: f64, sigma: f64, k2: f64) -> Result<f64> {
    let span = x2_distance - 3.0 * sigma;
    let speed = k2 + WINDOW_VELOCITY_OFFSET;
    if !(span > 0.0) {
        return Err(Error::InvalidConfiguration(format!(
            "furthest packet at distance {x2_distance} is within 3σ = {} of the detector",
            3.0 * sigma
        )));
    }
    if !(speed > 0.0) {
        return Err(Error::InvalidConfiguration(format!(
            "window speed k2 + 5/12 = {speed} is not positive"
        )));
    }
    Ok(span / speed)
}

/// A packet whose plane-wave phase is referenced to the origin.
fn origin_phased(x0: f64, k: f64, sigma: f64, coeff: Complex64) -> Result<GaussianPacket> {
    GaussianPacket::with_coeff(x0, k, sigma, coeff * Complex64::from_polar(1.0, k * x0))
}

/// Placement of the equal-momentum pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadingGeometry {
    /// Packets start at `±half_separation`.
    pub half_separation: f64,
    pub detector: f64,
    /// Common factor applied to both superpositions.
    pub amplitude: Complex64,
}

impl SpreadingGeometry {
    /// Packets at `±4σ`, detector at `10σ`. For `σ = 1` this is the
    /// configuration of the two-packet counterexample.
    pub fn scaled(sigma: f64) -> Self {
        Self {
            half_separation: 4.0 * sigma,
            detector: 10.0 * sigma,
            amplitude: Complex64::new(1.0, 0.0),
        }
    }

    pub fn with_amplitude(self, amplitude: Complex64) -> Self {
        Self { amplitude, ..self }
    }

    /// `(g₁ + g₂, g₁ − g₂)` for momentum `k`; `g₁` sits at `+half_separation`.
    pub fn states(&self, sigma: f64, k: f64) -> Result<(WaveState, WaveState)> {
        let a = self.half_separation;
        let g1 = origin_phased(a, k, sigma, self.amplitude)?;
        let g2 = origin_phased(-a, k, sigma, self.amplitude)?;
        let g2m = origin_phased(-a, k, sigma, -self.amplitude)?;
        Ok((
            WaveState::new(vec![g1, g2])?,
            WaveState::new(vec![g1, g2m])?,
        ))
    }

    pub fn window(&self, sigma: f64, k: f64) -> Result<DetectorWindow> {
        let t = window_t(self.detector + self.half_separation, sigma, k)?;
        DetectorWindow::new(self.detector, t)
    }
}

/// `(N₊, N₋)` for the equal-momentum pair at momentum `k`.
pub fn spreading_point(
    sigma: f64,
    k: f64,
    geometry: &SpreadingGeometry,
    opts: &ProfileOptions,
) -> Result<(f64, f64)> {
    let (plus, minus) = geometry.states(sigma, k)?;
    let window = geometry.window(sigma, k)?;
    let n_plus = flux::negative_current_integral(&plus, &window, opts)?;
    let n_minus = flux::negative_current_integral(&minus, &window, opts)?;
    Ok((n_plus, n_minus))
}

/// Momentum interval containing `k_σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdBracket {
    pub lower: f64,
    pub upper: f64,
}

impl ThresholdBracket {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingSweep {
    pub sigma: f64,
    pub geometry: SpreadingGeometry,
    pub k_values: Vec<f64>,
    pub n_plus: Vec<f64>,
    pub n_minus: Vec<f64>,
    /// Grid bracket of the threshold; `None` when negative current persists
    /// up to the last grid point.
    pub threshold: Option<ThresholdBracket>,
}

impl SpreadingSweep {
    pub fn both_zero(&self, i: usize) -> bool {
        self.n_plus[i] == 0.0 && self.n_minus[i] == 0.0
    }

    pub fn bracket(&self) -> Result<ThresholdBracket> {
        self.threshold.ok_or_else(|| {
            Error::Unbracketed(format!(
                "negative current at the last grid point k = {} (sigma = {})",
                self.k_values.last().copied().unwrap_or(f64::NAN),
                self.sigma
            ))
        })
    }
}

/// Default momentum grid: step 0.05 on `[0, 3/σ]`.
pub fn default_k_grid(sigma: f64) -> Vec<f64> {
    let k_max = 3.0 / sigma;
    let n = (k_max / 0.05).round() as usize;
    numerics::linspace(0.0, k_max, n)
}

/// `N₊` and `N₋` on a momentum grid, with the grid bracket of the threshold.
///
/// The bracket is `[k_i, k_{i+1}]` where `k_i` is the last grid point with
/// any negative current. When no grid point has negative current the
/// threshold sits at the first grid point.
pub fn spreading_sweep(
    sigma: f64,
    k_grid: &[f64],
    geometry: &SpreadingGeometry,
    opts: &ProfileOptions,
) -> Result<SpreadingSweep> {
    if k_grid.is_empty() {
        return Err(Error::InvalidConfiguration("empty momentum grid".into()));
    }
    let values = k_grid
        .par_iter()
        .map(|&k| spreading_point(sigma, k, geometry, opts))
        .collect::<Result<Vec<_>>>()?;
    let (n_plus, n_minus): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();

    let last_negative = (0..k_grid.len())
        .rev()
        .find(|&i| n_plus[i] > 0.0 || n_minus[i] > 0.0);
    let threshold = match last_negative {
        None => Some(ThresholdBracket {
            lower: k_grid[0],
            upper: k_grid[0],
        }),
        Some(i) if i + 1 < k_grid.len() => Some(ThresholdBracket {
            lower: k_grid[i],
            upper: k_grid[i + 1],
        }),
        Some(_) => None,
    };
    Ok(SpreadingSweep {
        sigma,
        geometry: *geometry,
        k_values: k_grid.to_vec(),
        n_plus,
        n_minus,
        threshold,
    })
}

/// Refines a grid bracket by bisection on "both `N` vanish" to width `≤ tol`.
pub fn refine_threshold(
    sigma: f64,
    bracket: ThresholdBracket,
    tol: f64,
    geometry: &SpreadingGeometry,
    opts: &ProfileOptions,
) -> Result<ThresholdBracket> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfiguration(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let (mut lo, mut hi) = (bracket.lower, bracket.upper);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (np, nm) = spreading_point(sigma, mid, geometry, opts)?;
        if np == 0.0 && nm == 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdBracket {
        lower: lo,
        upper: hi,
    })
}

/// `k_σ` on the default grid and scaled geometry, refined to width `≤ tol`.
pub fn threshold_k_sigma(sigma: f64, tol: f64, opts: &ProfileOptions) -> Result<ThresholdBracket> {
    threshold_k_sigma_on_grid(
        sigma,
        &default_k_grid(sigma),
        tol,
        &SpreadingGeometry::scaled(sigma),
        opts,
    )
}

pub fn threshold_k_sigma_on_grid(
    sigma: f64,
    k_grid: &[f64],
    tol: f64,
    geometry: &SpreadingGeometry,
    opts: &ProfileOptions,
) -> Result<ThresholdBracket> {
    let sweep = spreading_sweep(sigma, k_grid, geometry, opts)?;
    refine_threshold(sigma, sweep.bracket()?, tol, geometry, opts)
}

/// Initial position of the second packet and the meeting time of the maxima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub x2: f64,
    pub t_meet: f64,
}

/// Places the second packet so that both maxima are at `D + σ_t` at the same
/// time, with the first packet starting at `x1`.
///
/// The meeting time solves `x1 + k₁ t = D + σ_t(t)` by damped fixed-point
/// iteration; then `x₂ = D + σ_t − k₂ t`.
pub fn place_x2(k1: f64, k2: f64, sigma: f64, detector: f64, x1: f64) -> Result<Placement> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidWidth(sigma));
    }
    if !(k1 > 0.0) {
        return Err(Error::InvalidConfiguration(format!(
            "first packet momentum k1 = {k1} never reaches the detector"
        )));
    }
    if (k2 - k1).abs() <= 1e-12 * k1 {
        return Err(Error::InvalidConfiguration(
            "equal momenta: the maxima move in parallel and never meet".into(),
        ));
    }
    let g = |t: f64| (detector + spread_width(sigma, t) - x1) / k1;
    let mut t = g(0.0);
    if !(t > 0.0) {
        return Err(Error::InvalidConfiguration(format!(
            "no positive meeting time: x1 = {x1} is already past D + sigma"
        )));
    }
    let mut converged = false;
    for _ in 0..500 {
        let next = 0.5 * t + 0.5 * g(t);
        if (next - t).abs() <= 1e-15 * t.max(1.0) {
            t = next;
            converged = true;
            break;
        }
        t = next;
    }
    if !converged || !(t > 0.0) {
        return Err(Error::InvalidConfiguration(
            "meeting time iteration did not converge".into(),
        ));
    }
    let meet = detector + spread_width(sigma, t);
    Ok(Placement {
        x2: meet - k2 * t,
        t_meet: t,
    })
}

/// One grid point of the velocity-mismatch study.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityPoint {
    pub ratio: f64,
    pub k2: f64,
    pub placement: Option<Placement>,
    pub t_end: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    pub m: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySweep {
    pub k1: f64,
    pub sigma: f64,
    pub detector: f64,
    pub points: Vec<VelocityPoint>,
    /// Maximal runs of consecutive ratios with `M > 0`.
    pub support: Vec<(f64, f64)>,
    pub max_m: f64,
}

impl VelocitySweep {
    pub fn ratio_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ratio).collect()
    }

    pub fn m_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.m).collect()
    }

    /// Span of ratios with `M > 0`, i.e. the support width relative to `k₁`.
    pub fn support_width(&self) -> f64 {
        match (self.support.first(), self.support.last()) {
            (Some(a), Some(b)) => b.1 - a.0,
            _ => 0.0,
        }
    }
}

/// `χ₀ = 1` exactly when one of the two integrals vanishes and the other does not.
pub fn chi_zero(n_plus: f64, n_minus: f64) -> f64 {
    if (n_plus == 0.0) != (n_minus == 0.0) {
        1.0
    } else {
        0.0
    }
}

/// Default ratio grid: step 0.005 on `[0.5, 1.5]`.
pub fn default_ratio_grid() -> Vec<f64> {
    numerics::linspace(0.5, 1.5, 200)
}

/// Velocity studies resolve faster fringes than the default profile grid.
pub fn velocity_profile_options() -> ProfileOptions {
    ProfileOptions::default().with_n_coarse(4096)
}

fn velocity_point(
    k1: f64,
    ratio: f64,
    sigma: f64,
    detector: f64,
    opts: &ProfileOptions,
) -> VelocityPoint {
    let k2 = ratio * k1;
    let mut point = VelocityPoint {
        ratio,
        k2,
        placement: None,
        t_end: f64::NAN,
        n_plus: f64::NAN,
        n_minus: f64::NAN,
        m: 0.0,
        error: None,
    };
    let run = |point: &mut VelocityPoint| -> Result<()> {
        let placement = place_x2(k1, k2, sigma, detector, 0.0)?;
        point.placement = Some(placement);
        // The window spans twice the meeting time so that the meeting near
        // the detector lies inside it.
        let window = DetectorWindow::new(detector, 2.0 * placement.t_meet)?;
        point.t_end = window.t_end;
        let g1 = origin_phased(0.0, k1, sigma, Complex64::new(1.0, 0.0))?;
        let g2 = origin_phased(placement.x2, k2, sigma, Complex64::new(1.0, 0.0))?;
        let g2m = origin_phased(placement.x2, k2, sigma, Complex64::new(-1.0, 0.0))?;
        let plus = WaveState::new(vec![g1, g2])?;
        let minus = WaveState::new(vec![g1, g2m])?;
        point.n_plus = flux::negative_current_integral(&plus, &window, opts)?;
        point.n_minus = flux::negative_current_integral(&minus, &window, opts)?;
        point.m = (point.n_plus + point.n_minus) * chi_zero(point.n_plus, point.n_minus);
        Ok(())
    };
    if let Err(e) = run(&mut point) {
        point.error = Some(e.to_string());
        point.m = 0.0;
    }
    point
}

/// `M(k₂/k₁)` on a ratio grid. Grid points where placement or the window
/// fail are kept with their error and left out of the support.
pub fn velocity_sweep(
    k1: f64,
    ratio_grid: &[f64],
    sigma: f64,
    detector: f64,
    opts: &ProfileOptions,
) -> Result<VelocitySweep> {
    if !(k1 > 0.0) {
        return Err(Error::InvalidConfiguration(format!(
            "k1 = {k1} must be positive"
        )));
    }
    if ratio_grid.is_empty() {
        return Err(Error::InvalidConfiguration("empty ratio grid".into()));
    }
    let points: Vec<VelocityPoint> = ratio_grid
        .par_iter()
        .map(|&r| velocity_point(k1, r, sigma, detector, opts))
        .collect();

    let mut support = Vec::new();
    let mut run: Option<(f64, f64)> = None;
    for p in &points {
        if p.error.is_none() && p.m > 0.0 {
            run = Some(match run {
                Some((a, _)) => (a, p.ratio),
                None => (p.ratio, p.ratio),
            });
        } else if let Some(r) = run.take() {
            support.push(r);
        }
    }
    support.extend(run);
    let max_m = points.iter().map(|p| p.m).fold(0.0_f64, f64::max);
    Ok(VelocitySweep {
        k1,
        sigma,
        detector,
        points,
        support,
        max_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_formula() {
        let t = window_t(14.0, 1.0, 0.0).unwrap();
        assert!((t - 26.4).abs() < 1e-12);
        assert!(window_t(3.0, 1.0, 2.0).is_err());
        assert!(window_t(2.0, 1.0, 2.0).is_err());
        assert!(window_t(14.0, 1.0, -1.0).is_err());
        let mut prev = f64::INFINITY;
        for &k in &[1.0, 10.0, 1e3, 1e6] {
            let t = window_t(14.0, 1.0, k).unwrap();
            assert!(t > 0.0 && t < prev);
            prev = t;
        }
        assert!(window_t(14.0, 1.0, 1e12).unwrap() < 1e-10);
    }

    #[test]
    fn chi_zero_semantics() {
        assert_eq!(chi_zero(0.0, 0.0), 0.0);
        assert_eq!(chi_zero(1e-3, 2e-3), 0.0);
        assert_eq!(chi_zero(0.0, 2e-3), 1.0);
        assert_eq!(chi_zero(1e-3, 0.0), 1.0);
    }

    #[test]
    fn placement_rejects_parallel_and_receding() {
        assert!(place_x2(20.0, 20.0, 1.0, 40.0, 0.0).is_err());
        assert!(place_x2(0.0, 5.0, 1.0, 40.0, 0.0).is_err());
        assert!(place_x2(-1.0, 5.0, 1.0, 40.0, 0.0).is_err());
        assert!(place_x2(20.0, 25.0, 1.0, 40.0, 50.0).is_err());
    }

    #[test]
    fn placement_meets_both_equations() {
        for &(k1, k2) in &[(20.0, 30.0), (40.0, 21.0), (60.0, 89.5)] {
            let p = place_x2(k1, k2, 1.0, 40.0, 0.0).unwrap();
            let meet = 40.0 + spread_width(1.0, p.t_meet);
            assert!((k1 * p.t_meet - meet).abs() < 1e-8);
            assert!((p.x2 + k2 * p.t_meet - meet).abs() < 1e-8);
        }
    }

    #[test]
    fn default_grids() {
        let k = default_k_grid(1.0);
        assert_eq!(k.len(), 61);
        assert_eq!(k[0], 0.0);
        assert!((k[1] - 0.05).abs() < 1e-15);
        assert_eq!(*k.last().unwrap(), 3.0);
        let r = default_ratio_grid();
        assert_eq!(r.len(), 201);
        assert!((r[100] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equal_ratio_point_is_recorded_as_error() {
        let opts = velocity_profile_options();
        let s = velocity_sweep(20.0, &[1.0], 1.0, 40.0, &opts).unwrap();
        assert!(s.points[0].error.is_some());
        assert_eq!(s.points[0].m, 0.0);
        assert!(s.support.is_empty());
    }
}

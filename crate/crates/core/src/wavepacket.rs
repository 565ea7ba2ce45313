//! Free Gaussian wave packets and their finite superpositions, in units with
//! `m = ħ = 1`.
//!
//! A packet with initial mean position `x0`, mean momentum `k` and position
//! standard deviation `sigma` starts as
//!
//! ```text
//! ψ₀(x) = (2πσ²)^(-1/4) · exp(-(x - x0)² / (4σ²) + i k (x - x0))
//! ```
//!
//! and evolves in closed form through the complex width `σ² (1 + i t / 2σ²)`.
//! Every quantity below (amplitude, gradient, momentum amplitude) is exact;
//! no PDE is solved.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics;

/// Half-width, in units of the current spread, of the interval that carries
/// all of a packet's probability for quadrature purposes.
pub const SUPPORT_HALF_WIDTH: f64 = 12.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One free Gaussian packet with a complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub x0: f64,
    pub k: f64,
    pub sigma: f64,
    pub coeff: Complex64,
}

impl GaussianPacket {
    /// A normalized packet (coefficient 1).
    pub fn new(x0: f64, k: f64, sigma: f64) -> Result<Self> {
        Self::with_coeff(x0, k, sigma, Complex64::new(1.0, 0.0))
    }

    pub fn with_coeff(x0: f64, k: f64, sigma: f64, coeff: Complex64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidWidth(sigma));
        }
        if !(x0.is_finite() && k.is_finite() && coeff.re.is_finite() && coeff.im.is_finite()) {
            return Err(Error::InvalidConfiguration(format!(
                "non-finite packet parameter (x0 = {x0}, k = {k}, coeff = {coeff})"
            )));
        }
        Ok(Self {
            x0,
            k,
            sigma,
            coeff,
        })
    }

    /// Position of the density maximum at time `t`.
    #[inline]
    pub fn center(&self, t: f64) -> f64 {
        self.x0 + self.k * t
    }

    /// Position standard deviation at time `t`.
    #[inline]
    pub fn spread(&self, t: f64) -> f64 {
        spread_width(self.sigma, t)
    }

    /// Amplitude and its spatial derivative at `(x, t)`, coefficient included.
    #[inline]
    pub fn amplitude_and_gradient(&self, x: f64, t: f64) -> (Complex64, Complex64) {
        let s2 = self.sigma * self.sigma;
        let z = Complex64::new(1.0, t / (2.0 * s2));
        let u = x - self.x0 - self.k * t;
        let norm = (2.0 * PI * s2).powf(-0.25);
        // Re z = 1, so the principal root is continuous in t.
        let prefactor = self.coeff * norm / z.sqrt();
        let exponent =
            -(u * u) / (4.0 * s2 * z) + I * (self.k * (x - self.x0) - 0.5 * self.k * self.k * t);
        let psi = prefactor * exponent.exp();
        let dlog = -u / (2.0 * s2 * z) + I * self.k;
        (psi, psi * dlog)
    }

    #[inline]
    pub fn amplitude(&self, x: f64, t: f64) -> Complex64 {
        self.amplitude_and_gradient(x, t).0
    }

    /// Fourier transform of the initial amplitude, `(2π)^(-1/2) ∫ ψ₀(x) e^{-ipx} dx`.
    #[inline]
    pub fn momentum_amplitude(&self, p: f64) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        let norm = (2.0 * s2 / PI).powf(0.25);
        let dp = p - self.k;
        self.coeff * norm * Complex64::new(-s2 * dp * dp, -p * self.x0).exp()
    }
}

/// Position standard deviation of a free Gaussian at time `t`:
/// `σ_t² = σ² + t² / (4σ²)`.
#[inline]
pub fn spread_width(sigma: f64, t: f64) -> f64 {
    (sigma * sigma + t * t / (4.0 * sigma * sigma)).sqrt()
}

/// A finite complex-linear combination of Gaussian packets.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    terms: Vec<GaussianPacket>,
}

impl WaveState {
    pub fn new(terms: Vec<GaussianPacket>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyState);
        }
        Ok(Self { terms })
    }

    pub fn single(packet: GaussianPacket) -> Self {
        Self {
            terms: vec![packet],
        }
    }

    pub fn terms(&self) -> &[GaussianPacket] {
        &self.terms
    }

    /// Multiply every coefficient by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|p| GaussianPacket {
                    coeff: p.coeff * c,
                    ..*p
                })
                .collect(),
        }
    }

    pub fn evaluate(&self, x: f64, t: f64) -> Complex64 {
        self.terms.iter().map(|p| p.amplitude(x, t)).sum()
    }

    pub fn gradient(&self, x: f64, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|p| p.amplitude_and_gradient(x, t).1)
            .sum()
    }

    /// `(ψ, ∂ₓψ)` in a single pass over the packets.
    pub fn evaluate_with_gradient(&self, x: f64, t: f64) -> (Complex64, Complex64) {
        self.terms.iter().fold(
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
            |(a, g), p| {
                let (pa, pg) = p.amplitude_and_gradient(x, t);
                (a + pa, g + pg)
            },
        )
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        self.evaluate(x, t).norm_sqr()
    }

    pub fn momentum_amplitude(&self, p: f64) -> Complex64 {
        self.terms.iter().map(|g| g.momentum_amplitude(p)).sum()
    }

    /// Merged intervals that carry the probability of every packet at time `t`.
    pub fn support(&self, t: f64) -> Vec<(f64, f64)> {
        let mut spans: Vec<(f64, f64)> = self
            .terms
            .iter()
            .filter(|p| p.coeff.norm_sqr() > 0.0)
            .map(|p| {
                let c = p.center(t);
                let w = SUPPORT_HALF_WIDTH * p.spread(t);
                (c - w, c + w)
            })
            .collect();
        if spans.is_empty() {
            let p = &self.terms[0];
            let w = SUPPORT_HALF_WIDTH * p.spread(t);
            spans.push((p.center(t) - w, p.center(t) + w));
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
        for (lo, hi) in spans {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        merged
    }

    fn min_spread(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|p| p.spread(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// `∫ |ψ(x, t)|² dx` by adaptive Simpson over the merged support.
    pub fn norm_sqr(&self, t: f64) -> f64 {
        self.probability_between(f64::NEG_INFINITY, f64::INFINITY, t)
    }

    /// `∫_a^b |ψ(x, t)|² dx`, with the range clipped to the state's support.
    pub fn probability_between(&self, a: f64, b: f64, t: f64) -> f64 {
        let panel = 0.5 * self.min_spread(t);
        let f = |x: f64| self.density(x, t);
        self.support(t)
            .into_iter()
            .filter_map(|(lo, hi)| {
                let lo = lo.max(a);
                let hi = hi.min(b);
                (hi > lo).then(|| numerics::adaptive_simpson_panels(&f, lo, hi, panel, 1e-14))
            })
            .sum()
    }

    /// The same state rescaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr(0.0);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidConfiguration(format!(
                "cannot normalize a state of norm² {n}"
            )));
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }
}

impl Add for &WaveState {
    type Output = WaveState;

    fn add(self, rhs: &WaveState) -> WaveState {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&rhs.terms);
        WaveState { terms }
    }
}

impl Sub for &WaveState {
    type Output = WaveState;

    fn sub(self, rhs: &WaveState) -> WaveState {
        self + &(-rhs)
    }
}

impl Neg for &WaveState {
    type Output = WaveState;

    fn neg(self) -> WaveState {
        self.scaled(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<Complex64> for &WaveState {
    type Output = WaveState;

    fn mul(self, c: Complex64) -> WaveState {
        self.scaled(c)
    }
}

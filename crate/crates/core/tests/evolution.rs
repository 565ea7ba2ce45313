mod common;

use arrival::numerics::adaptive_simpson_panels;
use arrival::wavepacket::spread_width;
use arrival::{GaussianPacket, WaveState};
use common::{packet, single};
use num_complex::Complex64;
use proptest::prelude::*;

/// Crank–Nicolson for `i ψ_t = -ψ_xx / 2` on `[-L, L]` with zero boundaries.
fn crank_nicolson(psi0: &[Complex64], dx: f64, dt: f64, steps: usize) -> Vec<Complex64> {
    let n = psi0.len();
    let r = Complex64::new(0.0, dt / (4.0 * dx * dx));
    let diag = Complex64::new(1.0, 0.0) + 2.0 * r;
    let off = -r;
    // Forward-eliminated coefficients are the same at every step.
    let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
    let mut denom = vec![Complex64::new(0.0, 0.0); n];
    denom[0] = diag;
    c_prime[0] = off / diag;
    for i in 1..n {
        denom[i] = diag - off * c_prime[i - 1];
        c_prime[i] = off / denom[i];
    }
    let mut psi = psi0.to_vec();
    let mut rhs = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..steps {
        for i in 0..n {
            let left = if i > 0 {
                psi[i - 1]
            } else {
                Complex64::new(0.0, 0.0)
            };
            let right = if i + 1 < n {
                psi[i + 1]
            } else {
                Complex64::new(0.0, 0.0)
            };
            rhs[i] = psi[i] * (Complex64::new(1.0, 0.0) - 2.0 * r) + r * (left + right);
        }
        let mut d_prime = vec![Complex64::new(0.0, 0.0); n];
        d_prime[0] = rhs[0] / denom[0];
        for i in 1..n {
            d_prime[i] = (rhs[i] - off * d_prime[i - 1]) / denom[i];
        }
        psi[n - 1] = d_prime[n - 1];
        for i in (0..n - 1).rev() {
            psi[i] = d_prime[i] - c_prime[i] * psi[i + 1];
        }
    }
    psi
}

fn grid(dx: f64, half: f64) -> Vec<f64> {
    let n = (2.0 * half / dx).round() as usize;
    (0..=n).map(|i| -half + i as f64 * dx).collect()
}

#[test]
fn closed_form_matches_crank_nicolson() {
    let s = single(0.0, 1.0, 1.0);
    let t: f64 = 2.0;
    let (half, dx, dt): (f64, f64, f64) = (40.0, 0.02, 0.004);
    let steps = (t / dt).round() as usize;
    let coarse_x = grid(dx, half);
    let fine_x = grid(dx / 2.0, half);
    let init = |xs: &[f64]| xs.iter().map(|&x| s.evaluate(x, 0.0)).collect::<Vec<_>>();
    let coarse = crank_nicolson(&init(&coarse_x), dx, dt, steps);
    let fine = crank_nicolson(&init(&fine_x), dx / 2.0, dt / 2.0, 2 * steps);
    // Richardson extrapolation removes the second-order error of both runs.
    let peak = coarse_x
        .iter()
        .map(|&x| s.evaluate(x, t).norm())
        .fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    let mut at_peak = 0.0;
    let mut peak_seen = 0.0;
    for (i, &x) in coarse_x.iter().enumerate() {
        let extrapolated = (4.0 * fine[2 * i] - coarse[i]) / 3.0;
        let exact = s.evaluate(x, t);
        let err = (extrapolated - exact).norm() / peak;
        worst = worst.max(err);
        if exact.norm() > peak_seen {
            peak_seen = exact.norm();
            at_peak = err;
        }
    }
    assert!(at_peak < 1e-6, "relative error at the peak {at_peak}");
    assert!(worst < 1e-6, "worst relative error {worst}");
}

#[test]
fn schrodinger_residual_is_small() {
    let s = WaveState::new(vec![
        GaussianPacket::with_coeff(-3.0, 1.5, 0.8, Complex64::new(0.3, 0.7)).unwrap(),
        packet(2.0, -0.5, 1.3),
    ])
    .unwrap();
    let h = 1e-3;
    for &(x, t) in &[(0.0, 0.5), (1.2, 2.0), (-2.5, 1.0), (4.0, 3.7)] {
        let psi_t = (s.evaluate(x, t + h) - s.evaluate(x, t - h)) / (2.0 * h);
        let psi_xx =
            (s.evaluate(x + h, t) - 2.0 * s.evaluate(x, t) + s.evaluate(x - h, t)) / (h * h);
        let residual = Complex64::new(0.0, 1.0) * psi_t + 0.5 * psi_xx;
        assert!(
            residual.norm() < 1e-5 * psi_xx.norm().max(psi_t.norm()),
            "({x}, {t}): {residual}"
        );
        // Gradient against central differences.
        let fd = (s.evaluate(x + h, t) - s.evaluate(x - h, t)) / (2.0 * h);
        assert!((fd - s.gradient(x, t)).norm() < 1e-6 * fd.norm().max(1e-3));
    }
}

/// `⟨g_a | g_b⟩` for equal widths.
fn overlap(a: &GaussianPacket, b: &GaussianPacket) -> Complex64 {
    let s2 = a.sigma * a.sigma;
    let d = a.x0 - b.x0;
    let dk = b.k - a.k;
    let m = 0.5 * (a.x0 + b.x0);
    let re = -d * d / (8.0 * s2) - s2 * dk * dk / 2.0;
    let im = dk * m + a.k * a.x0 - b.k * b.x0;
    a.coeff.conj() * b.coeff * Complex64::new(re, im).exp()
}

#[test]
fn norm_matches_closed_form_overlap() {
    let terms = vec![
        GaussianPacket::with_coeff(1.0, 0.5, 1.0, Complex64::new(0.4, -0.2)).unwrap(),
        GaussianPacket::with_coeff(-0.5, 1.5, 1.0, Complex64::new(-1.1, 0.3)).unwrap(),
        GaussianPacket::with_coeff(2.5, -0.7, 1.0, Complex64::new(0.0, 0.9)).unwrap(),
    ];
    let s = WaveState::new(terms.clone()).unwrap();
    let mut expected = 0.0;
    for a in &terms {
        for b in &terms {
            expected += overlap(a, b).re;
        }
    }
    for &t in &[0.0, 1.0, 5.0] {
        let got = s.norm_sqr(t);
        assert!(
            (got - expected).abs() < 1e-9 * expected,
            "t = {t}: {got} vs {expected}"
        );
    }
}

#[test]
fn variance_follows_spread_law() {
    for &(sigma, k) in &[(1.0, 0.0), (0.5, 2.0), (2.0, -1.0)] {
        let s = single(1.0, k, sigma);
        for &t in &[0.0, 1.0, 4.0] {
            let mean_x = 1.0 + k * t;
            let st = spread_width(sigma, t);
            let var = adaptive_simpson_panels(
                &|x: f64| (x - mean_x).powi(2) * s.density(x, t),
                mean_x - 14.0 * st,
                mean_x + 14.0 * st,
                0.25 * st,
                1e-13,
            );
            let law = sigma * sigma + t * t / (4.0 * sigma * sigma);
            assert!(
                (var - law).abs() < 1e-8 * law,
                "σ={sigma} t={t}: {var} vs {law}"
            );
        }
    }
}

#[test]
fn parseval_for_counterexample_superposition() {
    let s = WaveState::new(vec![packet(4.0, 0.0, 1.0), packet(-4.0, 0.0, 1.0)]).unwrap();
    let p_norm = adaptive_simpson_panels(
        &|p: f64| s.momentum_amplitude(p).norm_sqr(),
        -14.0,
        14.0,
        0.05,
        1e-13,
    );
    let x_norm = s.norm_sqr(0.0);
    assert!((p_norm - x_norm).abs() < 1e-8, "{p_norm} vs {x_norm}");
}

fn arb_packet() -> impl Strategy<Value = GaussianPacket> {
    (
        -5.0..5.0f64,
        -3.0..3.0f64,
        0.3..2.0f64,
        -2.0..2.0f64,
        -2.0..2.0f64,
    )
        .prop_map(|(x0, k, s, re, im)| {
            GaussianPacket::with_coeff(x0, k, s, Complex64::new(re, im)).unwrap()
        })
}

proptest! {
    #[test]
    fn evaluation_is_linear(a in arb_packet(), b in arb_packet(), re in -2.0..2.0f64, im in -2.0..2.0f64,
                            x in -10.0..10.0f64, t in 0.0..10.0f64) {
        let c = Complex64::new(re, im);
        let psi = WaveState::single(a);
        let phi = WaveState::single(b);
        let combined = &(&psi * c) + &phi;
        let lhs = combined.evaluate(x, t);
        let rhs = c * psi.evaluate(x, t) + phi.evaluate(x, t);
        prop_assert!((lhs - rhs).norm() <= 1e-13 * (1.0 + rhs.norm()));
        let g = combined.gradient(x, t);
        let g_rhs = c * psi.gradient(x, t) + phi.gradient(x, t);
        prop_assert!((g - g_rhs).norm() <= 1e-13 * (1.0 + g_rhs.norm()));
    }

    #[test]
    fn density_and_current_scale_with_modulus_squared(a in arb_packet(), b in arb_packet(),
                                                      re in -2.0..2.0f64, im in -2.0..2.0f64,
                                                      x in -10.0..10.0f64, t in 0.0..10.0f64) {
        let c = Complex64::new(re, im);
        let s = WaveState::new(vec![a, b]).unwrap();
        let scaled = s.scaled(c);
        let m = c.norm_sqr();
        let j = arrival::current(&s, x, t);
        prop_assert!((scaled.density(x, t) - m * s.density(x, t)).abs() <= 1e-12 * (m * s.density(x, t)) + 1e-300);
        prop_assert!((arrival::current(&scaled, x, t) - m * j).abs() <= 1e-12 * m * j.abs() + 1e-15 * m * s.density(x, t).max(1e-300));
    }
}

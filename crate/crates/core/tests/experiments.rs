use arrival::experiments::{
    default_k_grid, place_x2, spreading_point, spreading_sweep, threshold_k_sigma,
    threshold_k_sigma_on_grid, velocity_profile_options, velocity_sweep, window_t,
    SpreadingGeometry,
};
use arrival::numerics::linspace;
use arrival::ProfileOptions;
use num_complex::Complex64;

#[test]
fn counterexample_window_length() {
    let g = SpreadingGeometry::scaled(1.0);
    assert!((g.window(1.0, 0.0).unwrap().t_end - 26.4).abs() < 1e-12);
    assert!((window_t(14.0, 1.0, 0.0).unwrap() - 26.4).abs() < 1e-12);
}

#[test]
fn placement_spans_the_reported_range() {
    // Catching-up second packets: k₂ from 1.5 k₁ to 2.9 k₁.
    let low = place_x2(20.0, 30.0, 1.0, 40.0, 0.0).unwrap();
    let high = place_x2(20.0, 58.0, 1.0, 40.0, 0.0).unwrap();
    assert!((low.x2 + 20.0).abs() < 1.5, "{}", low.x2);
    assert!((high.x2 + 80.0).abs() < 2.0, "{}", high.x2);
    let mut prev = f64::INFINITY;
    for k2 in linspace(30.0, 58.0, 28) {
        let p = place_x2(20.0, k2, 1.0, 40.0, 0.0).unwrap();
        assert!(p.x2 < prev);
        assert!((p.t_meet - low.t_meet).abs() < 1e-12);
        prev = p.x2;
    }
}

#[test]
fn spreading_at_rest_has_negative_current() {
    let (np, nm) = spreading_point(
        1.0,
        0.0,
        &SpreadingGeometry::scaled(1.0),
        &ProfileOptions::default(),
    )
    .unwrap();
    assert!(np > 0.0 || nm > 0.0);
    assert_eq!(nm, 0.0);
}

#[test]
fn threshold_near_one_for_unit_width() {
    let b = threshold_k_sigma(1.0, 0.01, &ProfileOptions::default()).unwrap();
    assert!(b.width() <= 0.01);
    assert!(b.lower >= 0.85 && b.upper <= 1.15, "{b:?}");
    let (np, nm) = spreading_point(
        1.0,
        b.upper,
        &SpreadingGeometry::scaled(1.0),
        &ProfileOptions::default(),
    )
    .unwrap();
    assert_eq!((np, nm), (0.0, 0.0));
    let (np, nm) = spreading_point(
        1.0,
        b.lower,
        &SpreadingGeometry::scaled(1.0),
        &ProfileOptions::default(),
    )
    .unwrap();
    assert!(np > 0.0 || nm > 0.0);
}

#[test]
fn threshold_ignores_overall_amplitude_and_grid_doubling() {
    let opts = ProfileOptions::default();
    let g = SpreadingGeometry::scaled(1.0);
    let half = g.with_amplitude(Complex64::new(0.5, 0.0));
    let grid = default_k_grid(1.0);
    let a = threshold_k_sigma_on_grid(1.0, &grid, 0.005, &g, &opts).unwrap();
    let b = threshold_k_sigma_on_grid(1.0, &grid, 0.005, &half, &opts).unwrap();
    assert_eq!(a, b);
    let doubled = linspace(0.0, 3.0, 120);
    let c = threshold_k_sigma_on_grid(1.0, &doubled, 0.005, &g, &opts).unwrap();
    assert!((a.estimate() - c.estimate()).abs() <= 0.005);

    let s1 = spreading_sweep(1.0, &grid[..10], &g, &opts).unwrap();
    let s2 = spreading_sweep(1.0, &grid[..10], &half, &opts).unwrap();
    for i in 0..10 {
        assert!((s2.n_plus[i] - 0.25 * s1.n_plus[i]).abs() <= 1e-9 * s1.n_plus[i].max(1e-12));
    }
}

#[test]
fn spreading_curve_is_continuous_under_refinement() {
    let opts = ProfileOptions::default();
    let g = SpreadingGeometry::scaled(1.0);
    let coarse = spreading_sweep(1.0, &linspace(0.0, 1.2, 24), &g, &opts).unwrap();
    let fine = spreading_sweep(1.0, &linspace(0.0, 1.2, 48), &g, &opts).unwrap();
    let jump = |v: &[f64]| {
        v.windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    };
    assert!(jump(&fine.n_plus) < jump(&coarse.n_plus));
    assert_eq!(
        coarse,
        spreading_sweep(1.0, &linspace(0.0, 1.2, 24), &g, &opts).unwrap()
    );
}

#[test]
fn wide_packets_have_no_negative_current_on_the_grid() {
    let opts = ProfileOptions::default();
    let s = spreading_sweep(
        2.0,
        &default_k_grid(2.0),
        &SpreadingGeometry::scaled(2.0),
        &opts,
    )
    .unwrap();
    assert!((0..s.k_values.len()).all(|i| s.both_zero(i)));
    let b = s.threshold.unwrap();
    assert_eq!((b.lower, b.upper), (0.0, 0.0));
}

#[test]
fn velocity_mismatch_far_from_one_leaves_both_combinations_negative() {
    let s = velocity_sweep(20.0, &[0.5, 1.5], 1.0, 40.0, &velocity_profile_options()).unwrap();
    for p in &s.points {
        assert!(p.error.is_none());
        assert!(p.n_plus > 0.0 && p.n_minus > 0.0, "{p:?}");
        assert_eq!(p.m, 0.0);
    }
}

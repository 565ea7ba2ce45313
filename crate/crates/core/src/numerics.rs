//! Scalar numerical kernels shared by the physics modules: adaptive Simpson
//! quadrature, golden-section minimization and bracketed root bisection.

const MAX_SIMPSON_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Uses the Richardson-corrected estimate `S2 + (S2 - S1) / 15` on accepted
/// panels. The integrand must be smooth on `[a, b]`; callers split at known
/// kinks or sign changes before calling.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, MAX_SIMPSON_DEPTH)
}

/// Adaptive Simpson over `[a, b]` after cutting it into panels no wider than
/// `max_panel`, so narrow features cannot fall between the first samples.
pub fn adaptive_simpson_panels<F>(f: &F, a: f64, b: f64, max_panel: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    if a == b {
        return 0.0;
    }
    let n = (((b - a).abs() / max_panel).ceil() as usize).max(1);
    let h = (b - a) / n as f64;
    let panel_tol = tol / n as f64;
    (0..n)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == n {
                b
            } else {
                a + h * (i + 1) as f64
            };
            adaptive_simpson(f, lo, hi, panel_tol)
        })
        .sum()
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || (m - a).abs() < 1e-15 * a.abs().max(1.0) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Golden-section search for a minimum of `f` on `[a, b]`, stopping once the
/// bracket is narrower than `tol`. Returns `(t_min, f(t_min))`.
///
/// Also compares against the bracket ends, so a minimum sitting on the
/// boundary of `[a, b]` is reported correctly.
pub fn golden_section_min<F>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64 + ?Sized,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let f_a = f(lo);
    let f_b = f(hi);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut best = (mid, f(mid));
    for cand in [(c, fc), (d, fd), (a.min(b), f_a), (a.max(b), f_b)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

/// Bisection for a root of `f` in `[a, b]` where `f(a)` and `f(b)` differ in
/// sign (zero counts as either). Iterates until the bracket is below `tol`.
pub fn bisect_root<F>(f: &F, a: f64, b: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64 + ?Sized,
{
    let (mut lo, mut hi) = (a, b);
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `n + 1` equally spaced points covering `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return vec![a];
    }
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|i| if i == n { b } else { a + h * i as f64 })
        .collect()
}

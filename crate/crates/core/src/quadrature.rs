//! Adaptive Simpson quadrature.
//!
//! Integrands in this crate are piecewise smooth with known kinks (support
//! endpoints, atoms, budget levels), so callers pass those as breakpoints and
//! each smooth piece is integrated separately.

const MAX_DEPTH: u32 = 48;

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol || (b - a) <= f64::EPSILON * a.abs().max(1.0) {
        return left + right + delta / 15.0;
    }
    recurse(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1)
        + recurse(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(&f, a, fa, b, fb);
    // Seed with one forced split so integrands that vanish at a, m and b
    // are not mistaken for zero.
    recurse(&f, a, fa, m, fm, b, fb, whole, tol, 0)
}

/// Integrates `f` over `[a, b]`, splitting at every breakpoint strictly inside.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breakpoints: &[f64], tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite() && *x > a && *x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let pieces = cuts.len() + 1;
    let piece_tol = tol / pieces as f64;
    let mut lo = a;
    let mut total = 0.0;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        // Evaluate strictly inside each piece so one-sided limits are used at the cuts.
        let span = hi - lo;
        let nudge = span * 1e-15;
        total += adaptive_simpson(&f, lo + nudge, hi - nudge, piece_tol);
        lo = hi;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((v - 0.0).abs() < 1e-12);
        let v = adaptive_simpson(|x| x * (1.0 - x), 0.0, 1.0, 1e-12);
        assert!((v - 1.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn reciprocal_converges() {
        let v = adaptive_simpson(|x| 1.0 / x, 0.01, 0.2, 1e-12);
        assert!((v - 20f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn kinked_integrand_with_breakpoint() {
        let w = 0.15;
        let f = |r: f64| r.min(w) * (1.0 - r);
        let v = integrate_pieces(f, 0.0, 1.0, &[w], 1e-12);
        let exact = (w * w / 2.0 - w * w * w / 3.0) + w * (1.0 - w) * (1.0 - w) / 2.0;
        assert!((v - exact).abs() < 1e-11, "{v} vs {exact}");
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-9), 0.0);
        assert_eq!(integrate_pieces(|x| x, 2.0, 1.0, &[], 1e-9), 0.0);
    }
}

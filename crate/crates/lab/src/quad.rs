//! Adaptive Simpson quadrature — the independent oracle for the handful of
//! scalar integrals the experiments compare against (kept free of the
//! matrix/evolution code paths it certifies).

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = adaptive_simpson(&|x| x * x * x, 0.0, 1.0, 1e-14);
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn oscillatory() {
        let v = adaptive_simpson(&|x| (10.0 * x).sin(), 0.0, 1.0, 1e-13);
        let expect = (1.0 - (10.0f64).cos()) / 10.0;
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn rotating_lower_bound_integral() {
        // I0 = ∫₀^{1/4} τ cos²(2πτ) dτ = 1/64 - 1/(16π²)
        let v = adaptive_simpson(
            &|t| t * (2.0 * std::f64::consts::PI * t).cos().powi(2),
            0.0,
            0.25,
            1e-14,
        );
        let exact = 1.0 / 64.0 - 1.0 / (16.0 * std::f64::consts::PI.powi(2));
        assert!((v - exact).abs() < 1e-12, "I0 = {v}, exact {exact}");
    }
}

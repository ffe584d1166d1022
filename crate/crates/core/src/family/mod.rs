//! Time-dependent operator and projection families on `[0, 1]`.
//!
//! An [`OperatorFamily`] is an evaluable map `t ↦ A(t)` together with its
//! derivative `t ↦ A'(t)` and optional metadata (eigenvalue curve λ(t),
//! nilpotent-scale curve α(t), twist generator C, base family A₀). The
//! gallery of registered examples ([`examples`]) is built from the standard
//! similarity structure
//!
//! ```text
//! A(t) = R(t)⁻¹ A₀(t) R(t),   R(t) = e^{C t},
//! ```
//!
//! for which both `A'(t) = R(t)⁻¹ (A₀'(t) + [A₀(t), C]) R(t)` and the
//! projections `P(t) = R(t)⁻¹ P₀ R(t)` with `P'(t) = [P(t), C]` are exact.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::mat::{c64, CMat, C64};

pub mod examples;

pub use examples::{
    build_standard_example, registered_dims, registered_labels, BuiltExample, Params,
};

type MatFn = Arc<dyn Fn(f64) -> CMat + Send + Sync>;
type CurveFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;
type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scalar curve `t ↦ z(t)` on `[0,1]`.
#[derive(Clone)]
pub struct Curve {
    f: CurveFn,
}

impl Curve {
    pub fn new(f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Curve { f: Arc::new(f) }
    }

    pub fn constant(z: C64) -> Self {
        Curve::new(move |_| z)
    }

    pub fn real(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Curve::new(move |t| c64(f(t), 0.0))
    }

    #[inline]
    pub fn eval(&self, t: f64) -> C64 {
        (self.f)(t)
    }
}

/// Real nonnegative curve (nilpotent scales α(t)).
#[derive(Clone)]
pub struct RealCurve {
    f: RealFn,
}

impl RealCurve {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RealCurve { f: Arc::new(f) }
    }
    pub fn constant(x: f64) -> Self {
        RealCurve::new(move |_| x)
    }
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }
}

/// Optional metadata carried by a family (used by builders and the harness).
#[derive(Clone, Default)]
pub struct FamilyMeta {
    pub label: String,
    /// Eigenvalue curve of the distinguished spectral subset σ(t) = {λ(t)}.
    pub lambda: Option<Curve>,
    /// Nilpotent-scale curve α(t) of the distinguished block.
    pub alpha: Option<RealCurve>,
    /// Ray angle curve θ(t) for gap-free resolvent estimates.
    pub theta: Option<Curve>,
    /// Twist generator C of the similarity structure, when applicable.
    pub twist: Option<CMat>,
    /// Base family A₀(t) evaluator, when applicable.
    pub base: Option<MatFn>,
    /// Set when A₀ is constant in t (enables exact rotating-frame
    /// propagation, see `evolution::closed_form`).
    pub constant_base: Option<CMat>,
    /// Cheap rotation closure `t ↦ (R(t), R(t)⁻¹)` of the similarity
    /// structure, when one exists.
    pub rot: Option<Arc<dyn Fn(f64) -> (CMat, CMat) + Send + Sync>>,
    /// Nilpotence order m₀ of (A-λ) on range P for the registered σ(t).
    pub m0: Option<usize>,
    /// Registered end of the time interval (1.0 unless an example's claim is
    /// local, e.g. the rotating positive 2×2 family uses t_end = 1/4).
    pub t_end: f64,
}

/// A map `t ↦ A(t)` on `[0,1]` with an evaluable derivative.
#[derive(Clone)]
pub struct OperatorFamily {
    dim: usize,
    eval: MatFn,
    deriv: Option<MatFn>,
    kinks: Vec<f64>,
    pub meta: FamilyMeta,
}

impl OperatorFamily {
    pub fn new(
        dim: usize,
        eval: impl Fn(f64) -> CMat + Send + Sync + 'static,
        deriv: Option<MatFn>,
        kinks: Vec<f64>,
    ) -> Self {
        OperatorFamily {
            dim,
            eval: Arc::new(eval),
            deriv,
            kinks,
            meta: FamilyMeta { t_end: 1.0, ..FamilyMeta::default() },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> CMat {
        (self.eval)(t)
    }

    pub fn eval_fn(&self) -> MatFn {
        self.eval.clone()
    }

    /// Analytic derivative when registered, Richardson differencing otherwise.
    pub fn deriv(&self, t: f64) -> CMat {
        match &self.deriv {
            Some(d) => d(t),
            None => family_derivative(self, t, 1e-4).matrix,
        }
    }

    pub fn has_analytic_deriv(&self) -> bool {
        self.deriv.is_some()
    }

    /// Registered kink locations (points where curves are Lipschitz but not
    /// C¹); integrators split steps here.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn with_meta(mut self, meta: FamilyMeta) -> Self {
        self.meta = meta;
        self
    }

    /// The similarity-built family `t ↦ R(t)⁻¹ A₀(t) R(t)` with exact
    /// derivative, given closures for A₀, A₀' and `R(t), R(t)⁻¹`.
    pub fn similarity(
        dim: usize,
        base: MatFn,
        base_deriv: MatFn,
        rot: Arc<dyn Fn(f64) -> (CMat, CMat) + Send + Sync>,
        twist: CMat,
        kinks: Vec<f64>,
    ) -> Self {
        let base2 = base.clone();
        let rot2 = rot.clone();
        let twist2 = twist.clone();
        let eval = move |t: f64| {
            let (r, rinv) = rot2(t);
            &(&rinv * &base2(t)) * &r
        };
        let rot3 = rot.clone();
        let deriv = move |t: f64| {
            let (r, rinv) = rot3(t);
            let a0 = base(t);
            let inner = &base_deriv(t) + &CMat::commutator(&a0, &twist2);
            &(&rinv * &inner) * &r
        };
        let mut fam = OperatorFamily::new(dim, eval, Some(Arc::new(deriv)), kinks);
        fam.meta.twist = Some(twist);
        fam
    }
}

/// Provenance of a projection family's values and derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// `P(t) = R(t)⁻¹ P₀ R(t)` with exact derivative `[P(t), C]`.
    AnalyticSimilarity,
    /// Derivative by Richardson differencing of the evaluation path.
    NumericDiff,
    /// Values from Riesz contour quadrature along t.
    RieszPath,
}

/// A map `t ↦ P(t)` of bounded projections with derivative `t ↦ P'(t)`.
#[derive(Clone)]
pub struct ProjectionFamily {
    dim: usize,
    eval: MatFn,
    deriv: MatFn,
    pub provenance: Provenance,
}

impl ProjectionFamily {
    pub fn new(
        dim: usize,
        eval: impl Fn(f64) -> CMat + Send + Sync + 'static,
        deriv: impl Fn(f64) -> CMat + Send + Sync + 'static,
        provenance: Provenance,
    ) -> Self {
        ProjectionFamily { dim, eval: Arc::new(eval), deriv: Arc::new(deriv), provenance }
    }

    pub fn from_fns(dim: usize, eval: MatFn, deriv: MatFn, provenance: Provenance) -> Self {
        ProjectionFamily { dim, eval, deriv, provenance }
    }

    /// Similarity-built projection `P(t) = R(t)⁻¹ P₀ R(t)`, `P'(t) = [P(t), C]`.
    pub fn similarity(
        dim: usize,
        p0: CMat,
        rot: Arc<dyn Fn(f64) -> (CMat, CMat) + Send + Sync>,
        twist: CMat,
    ) -> Self {
        let rot2 = rot.clone();
        let p0b = p0.clone();
        let eval = move |t: f64| {
            let (r, rinv) = rot2(t);
            &(&rinv * &p0b) * &r
        };
        let eval_arc: MatFn = Arc::new(eval);
        let eval_for_deriv = eval_arc.clone();
        let deriv = move |t: f64| {
            let p = eval_for_deriv(t);
            CMat::commutator(&p, &twist)
        };
        ProjectionFamily {
            dim,
            eval: eval_arc,
            deriv: Arc::new(deriv),
            provenance: Provenance::AnalyticSimilarity,
        }
    }

    /// Constant projection family (P' = 0).
    pub fn constant(p0: CMat) -> Self {
        let dim = p0.dim();
        let z = CMat::zeros(dim);
        ProjectionFamily::new(
            dim,
            move |_| p0.clone(),
            move |_| z.clone(),
            Provenance::AnalyticSimilarity,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, t: f64) -> CMat {
        (self.eval)(t)
    }

    pub fn deriv(&self, t: f64) -> CMat {
        (self.deriv)(t)
    }

    pub fn eval_fn(&self) -> MatFn {
        self.eval.clone()
    }

    pub fn deriv_fn(&self) -> MatFn {
        self.deriv.clone()
    }

    /// Idempotency and `P P' P = 0` residuals over a grid (both must be small
    /// for a valid projection family).
    pub fn validate(&self, grid: &[f64]) -> (f64, f64) {
        let mut idem = 0.0f64;
        let mut ppp = 0.0f64;
        for &t in grid {
            let p = self.eval(t);
            let dp = self.deriv(t);
            idem = idem.max((&(&p * &p) - &p).norm());
            ppp = ppp.max((&(&p * &dp) * &p).norm());
        }
        (idem, ppp)
    }
}

/// Result of numeric differentiation of a family.
pub struct FamilyDerivative {
    pub matrix: CMat,
    /// True when the centered stencil did not fit inside [0,1] and a
    /// one-sided second-order stencil was used instead.
    pub one_sided: bool,
}

/// Richardson-extrapolated central difference of order h⁴; falls back to a
/// one-sided second-order stencil near the interval ends (flagged).
pub fn family_derivative(f: &OperatorFamily, t: f64, h: f64) -> FamilyDerivative {
    derivative_of(|s| f.eval(s), t, h)
}

/// Same stencil logic for an arbitrary matrix path.
pub fn derivative_of(f: impl Fn(f64) -> CMat, t: f64, h: f64) -> FamilyDerivative {
    let lo = 0.0;
    let hi = 1.0;
    if t - h >= lo && t + h <= hi {
        // D(h) and D(h/2) central differences, Richardson combined
        let d = |hh: f64| {
            let a = f(t + hh);
            let b = f(t - hh);
            (&a - &b).scale_re(0.5 / hh)
        };
        let dh = d(h);
        let dh2 = d(0.5 * h);
        let matrix = &dh2.scale_re(4.0 / 3.0) - &dh.scale_re(1.0 / 3.0);
        FamilyDerivative { matrix, one_sided: false }
    } else if t + 2.0 * h <= hi {
        // forward second order: (-3 f(t) + 4 f(t+h) - f(t+2h)) / 2h
        let f0 = f(t);
        let f1 = f(t + h);
        let f2 = f(t + 2.0 * h);
        let matrix = &(&f1.scale_re(4.0) - &f0.scale_re(3.0)) - &f2;
        FamilyDerivative { matrix: matrix.scale_re(0.5 / h), one_sided: true }
    } else {
        // backward second order
        let f0 = f(t);
        let f1 = f(t - h);
        let f2 = f(t - 2.0 * h);
        let matrix = &(&f0.scale_re(3.0) - &f1.scale_re(4.0)) + &f2;
        FamilyDerivative { matrix: matrix.scale_re(0.5 / h), one_sided: true }
    }
}

/// Outcome of the (M,0)-stability characterization for block families
/// `λ(t) + α(t) N`: stable iff `Re λ(t) ≤ 0` and `|Re λ(t)| ≥ r₀ α(t)`
/// for some r₀ > 0 at every grid point.
#[derive(Clone, Copy, Debug)]
pub struct M0Stability {
    pub stable: bool,
    /// Largest admissible r₀ (infimum of |Re λ|/α over points with α > 0;
    /// +∞ when α ≡ 0 on the grid).
    pub r0: f64,
}

pub fn check_m0_stability(lambda: &Curve, alpha: &RealCurve, grid: &[f64]) -> M0Stability {
    let mut r0 = f64::INFINITY;
    let mut stable = true;
    for &t in grid {
        let re = lambda.eval(t).re;
        let a = alpha.eval(t);
        if re > 1e-12 {
            stable = false;
        }
        if a > 0.0 {
            r0 = r0.min(re.abs() / a);
        }
    }
    if r0 <= 0.0 {
        stable = false;
    }
    M0Stability { stable, r0 }
}

/// Uniform grid of `n` points on `[a, b]` inclusive.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (b - a) / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    // pin the endpoints exactly
    g[0] = a;
    *g.last_mut().unwrap() = b;
    g
}

/// The default 257-point output grid on `[0, t_end]`; sup_t metrics are
/// maxima over this grid.
pub fn output_grid(t_end: f64) -> Vec<f64> {
    uniform_grid(0.0, t_end, 257)
}

/// Rotation factory for a constant twist generator: `t ↦ (e^{Ct}, e^{-Ct})`
/// by the generic matrix exponential. Builders with special structure
/// (plane rotations, shifts) provide cheaper closures instead.
pub fn generic_rotation(c: CMat) -> Arc<dyn Fn(f64) -> (CMat, CMat) + Send + Sync> {
    Arc::new(move |t: f64| {
        let r = crate::mat::mat_exp(&c.scale_re(t)).expect("finite twist exponential");
        let rinv = crate::mat::mat_exp(&c.scale_re(-t)).expect("finite twist exponential");
        (r, rinv)
    })
}

/// Validation helper: max over a grid of the central-difference consistency
/// defect ‖(A(t+h)-A(t-h))/2h - A'(t)‖ (smooth families only).
pub fn derivative_consistency(f: &OperatorFamily, grid: &[f64], h: f64) -> f64 {
    let mut worst = 0.0f64;
    for &t in grid {
        if t - h < 0.0 || t + h > 1.0 {
            continue;
        }
        let cd = (&f.eval(t + h) - &f.eval(t - h)).scale_re(0.5 / h);
        worst = worst.max((&cd - &f.deriv(t)).norm());
    }
    worst
}

/// Error helper shared by the registry builders.
pub(crate) fn require(cond: bool, what: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(what))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::mat_exp;

    #[test]
    fn linear_family_derivative_exact() {
        let m = CMat::from_rows(&[
            &[c64(1.0, 2.0), c64(0.0, -1.0)],
            &[c64(3.0, 0.0), c64(-2.0, 0.5)],
        ]);
        let m2 = m.clone();
        let fam = OperatorFamily::new(2, move |t| m2.scale_re(t), None, vec![]);
        let d = family_derivative(&fam, 0.37, 1e-3);
        assert!(!d.one_sided);
        assert!((&d.matrix - &m).max_abs() < 1e-12);
    }

    #[test]
    fn exp_family_derivative_matches_analytic() {
        // F(t) = e^{Ct}: F'(t) = C e^{Ct}, checked at t = 0.5 with h = 1e-3
        let c = CMat::from_rows(&[
            &[c64(0.0, 1.0), c64(1.0, 0.0)],
            &[c64(-1.0, 0.0), c64(0.0, -0.5)],
        ]);
        let c2 = c.clone();
        let fam = OperatorFamily::new(
            2,
            move |t| mat_exp(&c2.scale_re(t)).unwrap(),
            None,
            vec![],
        );
        let d = family_derivative(&fam, 0.5, 1e-3);
        let expect = &c * &mat_exp(&c.scale_re(0.5)).unwrap();
        assert!(
            (&d.matrix - &expect).norm() < 1e-9,
            "defect {}",
            (&d.matrix - &expect).norm()
        );
    }

    #[test]
    fn constant_family_derivative_zero() {
        let m = CMat::identity(3);
        let fam = OperatorFamily::new(3, move |_| m.clone(), None, vec![]);
        let d = family_derivative(&fam, 0.5, 1e-3);
        assert!(d.matrix.max_abs() < 1e-12);
    }

    #[test]
    fn one_sided_fallback_near_boundary() {
        let m = CMat::identity(2);
        let fam = OperatorFamily::new(2, move |t| m.scale_re(t * t), None, vec![]);
        let d = family_derivative(&fam, 0.0, 1e-3);
        assert!(d.one_sided);
        assert!(d.matrix.max_abs() < 1e-6); // d/dt t² at 0 is 0
    }

    #[test]
    fn m0_stability_paper_block_example() {
        // λ(t) = -t/3, α(t) = t²: stable with r0 = 1/3 (attained at t = 1)
        let lam = Curve::real(|t| -t / 3.0);
        let alp = RealCurve::new(|t| t * t);
        let grid = uniform_grid(0.0, 1.0, 101);
        let s = check_m0_stability(&lam, &alp, &grid);
        assert!(s.stable);
        assert!((s.r0 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn m0_stability_zero_real_part_fails() {
        let lam = Curve::real(|_| 0.0);
        let alp = RealCurve::constant(1.0);
        let s = check_m0_stability(&lam, &alp, &uniform_grid(0.0, 1.0, 11));
        assert!(!s.stable);
    }

    #[test]
    fn m0_stability_no_nilpotent_part() {
        let lam = Curve::real(|_| -1.0);
        let alp = RealCurve::constant(0.0);
        let s = check_m0_stability(&lam, &alp, &uniform_grid(0.0, 1.0, 11));
        assert!(s.stable);
        assert!(s.r0.is_infinite());
    }

    #[test]
    fn similarity_projection_derivative_is_commutator() {
        // P' = [P, C] for P(t) = e^{-Ct} P0 e^{Ct}
        let c = CMat::from_rows(&[
            &[c64(0.0, 0.0), c64(1.0, 0.0)],
            &[c64(-1.0, 0.0), c64(0.0, 0.0)],
        ]);
        let p0 = CMat::diag(&[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let proj = ProjectionFamily::similarity(2, p0, generic_rotation(c.clone()), c.clone());
        // numeric check of the analytic derivative
        let t = 0.3;
        let h = 1e-5;
        let num = (&proj.eval(t + h) - &proj.eval(t - h)).scale_re(0.5 / h);
        assert!((&num - &proj.deriv(t)).norm() < 1e-8);
        // and the P P' P = 0 identity
        let (idem, ppp) = proj.validate(&uniform_grid(0.0, 1.0, 33));
        assert!(idem < 1e-12);
        assert!(ppp < 1e-12);
    }
}

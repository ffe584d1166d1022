//! Adiabatic constructions: the Kato intertwiner `K = [P', P]`, the
//! comparison evolutions `V_ε` (generator `(1/ε)A + K`) and `V₀ε`
//! (generator `(1/ε)AP + K`), the reduced-resolvent commutator solver
//! `B(t)` with `B A - A B = [P', P]`, and transition-amplitude metrics.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::evolution::{propagate, GeneratorFamily, PropagateOpts, Propagator};
use crate::family::{Curve, OperatorFamily, ProjectionFamily};
use crate::mat::{sigma_min_est, CMat, Lu, C64};
use crate::spectral::ContourCycle;

mod superad;

pub use superad::{superadiabatic_iterate, SuperadiabaticState, SuperadiabaticOpts};

/// Kato's bounded correction `K(t) = [P'(t), P(t)]`; adding it to `(1/ε)A`
/// produces an evolution exactly mapping range P(s) to range P(t).
pub fn kato_generator(p: &ProjectionFamily) -> GeneratorFamily {
    let pe = p.eval_fn();
    let pd = p.deriv_fn();
    GeneratorFamily::new(p.dim(), move |t| CMat::commutator(&pd(t), &pe(t)))
}

/// Post-hoc intertwining certificate threshold.
const INTERTWINING_TOL: f64 = 1e-7;

/// Max over grid nodes of `‖P(t) V(t) - V(t) P(0)‖`.
pub fn intertwining_residual(v: &Propagator, p: &ProjectionFamily) -> f64 {
    let p0 = p.eval(v.grid()[0]);
    let mut worst = 0.0f64;
    v.scan(|_, t, u| {
        let pt = p.eval(t);
        let r = (&(&pt * u) - &(u * &p0)).norm();
        if r > worst {
            worst = r;
        }
    });
    worst
}

/// The comparison evolution `V_ε` for `(1/ε) A + [P', P]`, with the
/// intertwining identity certified on the output grid after propagation.
pub fn adiabatic_evolution(
    a: &OperatorFamily,
    p: &ProjectionFamily,
    eps: f64,
    tol_step: f64,
    opts: &PropagateOpts,
) -> Result<Propagator> {
    let g = GeneratorFamily::sum(
        &GeneratorFamily::scaled_operator(a, 1.0 / eps),
        &kato_generator(p),
    );
    let t_end = a.meta.t_end;
    let v = propagate(&g, eps, 0.0, t_end, tol_step, opts)?;
    let residual = intertwining_residual(&v, p);
    if residual > INTERTWINING_TOL {
        return Err(Error::AdiabaticityViolation { residual });
    }
    Ok(v)
}

/// The projected comparison evolution `V₀ε` for `(1/ε) A P + [P', P]`.
/// Precondition `P(t)X ⊆ ker(A(t) - λ(t))^{m0}` is verified on coarse
/// samples before propagating.
pub fn projected_evolution(
    a: &OperatorFamily,
    p: &ProjectionFamily,
    lambda: &Curve,
    m0: usize,
    eps: f64,
    tol_step: f64,
    opts: &PropagateOpts,
) -> Result<Propagator> {
    let t_end = a.meta.t_end;
    for k in 0..=4 {
        let t = t_end * k as f64 / 4.0;
        let am = a.eval(t);
        let pm = p.eval(t);
        let shifted = am.shift(-lambda.eval(t));
        let mut pow = &shifted * &pm;
        for _ in 1..m0 {
            pow = &shifted * &pow;
        }
        let scale = (1.0 + am.norm()).powi(m0 as i32);
        let residual = pow.norm() / scale;
        if residual > 1e-7 {
            return Err(Error::KernelInclusionViolation { t, residual });
        }
    }
    let ae = a.eval_fn();
    let pe = p.eval_fn();
    let ap = GeneratorFamily::new(a.dim(), move |t| &ae(t) * &pe(t))
        .with_kinks(a.kinks().to_vec());
    let g = GeneratorFamily::sum(
        &GeneratorFamily::scaled_operator_from(&ap, 1.0 / eps),
        &kato_generator(p),
    );
    propagate(&g, eps, 0.0, t_end, tol_step, opts)
}

/// Transition amplitudes of a propagated evolution against a projection
/// family: the quantities every adiabatic theorem drives to zero.
#[derive(Clone, Copy, Debug)]
pub struct TransitionReport {
    /// `sup_t ‖(1-P(t)) U(t) P(0)‖`
    pub escape: f64,
    /// `sup_t ‖P(t) U(t) (1-P(0))‖`
    pub capture: f64,
}

pub fn transition_amplitude(u: &Propagator, p: &ProjectionFamily) -> TransitionReport {
    let id = CMat::identity(u.dim());
    let p0 = p.eval(u.grid()[0]);
    let q0 = &id - &p0;
    let mut escape = 0.0f64;
    let mut capture = 0.0f64;
    u.scan(|_, t, cum| {
        let pt = p.eval(t);
        let qt = &id - &pt;
        escape = escape.max((&(&qt * cum) * &p0).norm());
        capture = capture.max((&(&pt * cum) * &q0).norm());
    });
    TransitionReport { escape, capture }
}

/// Reduced resolvent `R̄(λ) = (λ - A|_{(1-P)X})⁻¹ (1-P)`, realized as
/// `(λ - A + κP)⁻¹ (1-P)` with a shift κ that regularizes the nilpotent
/// P-block (P must commute with A).
fn reduced_resolvent(a: &CMat, lambda: C64, p: &CMat) -> Result<CMat> {
    let n = a.dim();
    let one = CMat::identity(n);
    let pbar = &one - p;
    let kappa = 1.0 + a.one_norm() + lambda.norm();
    let reg = &(&one.scale(lambda) - a) + &p.scale_re(kappa);
    let lu = Lu::new(&reg)?;
    let smin = sigma_min_est(&reg, &lu);
    if smin <= 1e-10 * kappa {
        // λ lies in the spectrum of the complementary part
        return Err(Error::GapViolation { t: f64::NAN });
    }
    Ok(&lu.inverse()? * &pbar)
}

/// Solution `B` of the commutator equation `B A - A B = [P', P]` for an
/// isolated eigenvalue λ with projection P of nilpotence order m₀:
///
/// ```text
/// B = Σ_{k<m₀} R̄^{k+1} P' (A-λ)^k P  +  Σ_{k<m₀} (λ-A)^k P P' R̄^{k+1}
/// ```
pub fn commutator_solution_b(
    a: &CMat,
    lambda: C64,
    p: &CMat,
    p_prime: &CMat,
    m0: usize,
) -> Result<CMat> {
    if m0 == 0 {
        return Err(Error::InvalidInput("m0 must be at least 1"));
    }
    let n = a.dim();
    let rbar = reduced_resolvent(a, lambda, p)?;
    let a_minus = a.shift(-lambda); // A - λ
    let minus = &CMat::zeros(n) - &a_minus; // λ - A
    let mut b = CMat::zeros(n);
    let mut rpow = rbar.clone(); // R̄^{k+1}
    let mut left_pow = CMat::identity(n); // (A-λ)^k
    let mut right_pow = CMat::identity(n); // (λ-A)^k
    for k in 0..m0 {
        if k > 0 {
            rpow = &rpow * &rbar;
            left_pow = &left_pow * &a_minus;
            right_pow = &right_pow * &minus;
        }
        let term1 = &(&rpow * p_prime) * &(&left_pow * p);
        let term2 = &(&(&right_pow * p) * p_prime) * &rpow;
        b += &term1;
        b += &term2;
    }
    Ok(b)
}

/// Contour form of the commutator solution,
/// `B = (1/2πi) ∮ (z-A)⁻¹ P' (z-A)⁻¹ dz`, with node doubling until the
/// quadrature settles. Cross-check oracle for [`commutator_solution_b`].
pub fn commutator_solution_b_contour(
    a: &CMat,
    cycle: &ContourCycle,
    p_prime: &CMat,
) -> Result<CMat> {
    let mut n = cycle.n_nodes.max(32);
    let mut prev: Option<CMat> = None;
    while n <= (1 << 14) {
        let c = ContourCycle { n_nodes: n, ..cycle.clone() };
        let mut b = CMat::zeros(a.dim());
        for (z, w) in c.nodes() {
            let r = crate::mat::resolvent(a, z)?;
            b += &(&(&r * p_prime) * &r).scale(w);
        }
        if let Some(pb) = prev {
            let defect = (&b - &pb).norm();
            if defect <= 1e-11 * (1.0 + b.norm()) {
                return Ok(b);
            }
        }
        prev = Some(b);
        n *= 2;
    }
    Err(Error::QuadratureFailure { residual: f64::NAN })
}

/// Residual of the commutator equation, `‖BA - AB - [P',P]‖`.
pub fn commutator_residual(b: &CMat, a: &CMat, p: &CMat, p_prime: &CMat) -> f64 {
    let lhs = &(b * a) - &(a * b);
    let rhs = CMat::commutator(p_prime, p);
    (&lhs - &rhs).norm()
}

/// Samples of intertwining over (s, t) node pairs (s on a coarse subgrid),
/// `max ‖P(t) V(t,s) - V(t,s) P(s)‖`.
pub fn intertwining_residual_two_times(
    v: &Propagator,
    p: &ProjectionFamily,
    s_count: usize,
) -> f64 {
    let n = v.grid().len();
    let mut worst = 0.0f64;
    let stride = (n / s_count.max(1)).max(1);
    let mut s_idx = 0;
    while s_idx < n {
        let ps = p.eval(v.grid()[s_idx]);
        let mut cum = CMat::identity(v.dim());
        for j in s_idx..n {
            if j > s_idx {
                cum = v.step(j - 1) * &cum;
            }
            let pt = p.eval(v.grid()[j]);
            let r = (&(&pt * &cum) - &(&cum * &ps)).norm();
            if r > worst {
                worst = r;
            }
        }
        s_idx += stride;
    }
    worst
}

/// Scalar-factor form of `V₀ε(s)P(0)` in the weakly 1-associated case:
/// `e^{(1/ε)∫₀^s λ} · W(s) P(0)` with `W` the ε-independent evolution for
/// `[P', P]`. Returns the dense matrix for comparison tests.
pub fn scalar_factor_projected_evolution(
    p: &ProjectionFamily,
    lambda: &Curve,
    eps: f64,
    s: f64,
    tol_step: f64,
) -> Result<CMat> {
    // ∫₀^s λ(τ)dτ by composite Simpson on a fine grid
    let n = 2048usize;
    let h = s / n as f64;
    let mut integral = C64::new(0.0, 0.0);
    for k in 0..n {
        let a = k as f64 * h;
        let f0 = lambda.eval(a);
        let fm = lambda.eval(a + 0.5 * h);
        let f1 = lambda.eval(a + h);
        integral += (f0 + fm * C64::new(4.0, 0.0) + f1) * C64::new(h / 6.0, 0.0);
    }
    let phase = (integral * C64::new(1.0 / eps, 0.0)).exp();
    let w = propagate(
        &kato_generator(p),
        1.0,
        0.0,
        s,
        tol_step,
        &PropagateOpts::default(),
    )?;
    let wm = w.transfer(0, w.grid().len() - 1);
    let p0 = p.eval(0.0);
    Ok((&wm * &p0).scale(phase))
}

/// Vec of sampled node triples (r, s, t) spanning a propagator grid, for
/// evolution-law checks.
pub fn law_sample_triples(u: &Propagator) -> Vec<(usize, usize, usize)> {
    let n = u.grid().len() - 1;
    alloc::vec![
        (0, 0, 0),
        (0, n / 4, n / 2),
        (n / 4, n / 2, 3 * n / 4),
        (0, n / 2, n),
        (n / 8, 3 * n / 8, 7 * n / 8),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{build_standard_example, Params, Provenance};
    use crate::mat::c64;

    #[test]
    fn kato_generator_zero_for_constant_projection() {
        let p = ProjectionFamily::constant(CMat::diag(&[c64(1.0, 0.0), c64(0.0, 0.0)]));
        let k = kato_generator(&p);
        assert!(k.eval(0.3).max_abs() < 1e-15);
    }

    #[test]
    fn kato_generator_similarity_formula() {
        // P(t) = e^{-Ct} P0 e^{Ct}: K(t) = [[P,C],P]
        let ex = build_standard_example("ex3-1u", &Params::new()).unwrap();
        let k = kato_generator(&ex.projection);
        let c = ex.family.meta.twist.clone().unwrap();
        for &t in &[0.2, 0.7] {
            let p = ex.projection.eval(t);
            let expect = CMat::commutator(&CMat::commutator(&p, &c), &p);
            assert!((&k.eval(t) - &expect).norm() < 1e-12);
        }
    }

    #[test]
    fn kato_generator_rank_one_rotation_is_skew() {
        // rotating rank-1 projection in 2D: K is skew-Hermitian
        let ex = build_standard_example("ex3-3", &Params::new()).unwrap();
        let k = kato_generator(&ex.projection);
        for &t in &[0.05, 0.15, 0.22] {
            let km = k.eval(t);
            let skew_defect = (&km.adjoint() + &km).norm();
            assert!(skew_defect < 1e-12, "skew defect {skew_defect}");
        }
    }

    #[test]
    fn commutator_solver_two_by_two_hand_oracle() {
        // A = diag(0, -2), P = e1 e1ᵀ, P' = [[0,a],[b,0]]:
        // hand algebra gives B = [[0, a/2], [b/2, 0]]
        let a = CMat::diag(&[c64(0.0, 0.0), c64(-2.0, 0.0)]);
        let p = CMat::diag(&[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let pp = CMat::from_rows(&[
            &[c64(0.0, 0.0), c64(0.7, 0.2)],
            &[c64(-0.3, 0.5), c64(0.0, 0.0)],
        ]);
        let b = commutator_solution_b(&a, c64(0.0, 0.0), &p, &pp, 1).unwrap();
        let expect = CMat::from_rows(&[
            &[c64(0.0, 0.0), c64(0.35, 0.1)],
            &[c64(-0.15, 0.25), c64(0.0, 0.0)],
        ]);
        assert!((&b - &expect).max_abs() < 1e-12);
        assert!(commutator_residual(&b, &a, &p, &pp) < 1e-12);
    }

    #[test]
    fn commutator_solver_zero_derivative() {
        let a = CMat::diag(&[c64(0.0, 0.0), c64(-2.0, 0.0)]);
        let p = CMat::diag(&[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let b = commutator_solution_b(&a, c64(0.0, 0.0), &p, &CMat::zeros(2), 1).unwrap();
        assert!(b.max_abs() < 1e-14);
    }

    #[test]
    fn commutator_solver_matches_contour_form() {
        // on a gapped nontrivial example with a Jordan block (m0 = 2)
        let ex = build_standard_example("ex3-1u", &Params::new()).unwrap();
        let t = 0.4;
        let a = ex.family.eval(t);
        let p = ex.projection.eval(t);
        let pp = ex.projection.deriv(t);
        let lam = ex.lambda.eval(t);
        let b = commutator_solution_b(&a, lam, &p, &pp, 2).unwrap();
        assert!(
            commutator_residual(&b, &a, &p, &pp) < 1e-8,
            "wegweiser residual {}",
            commutator_residual(&b, &a, &p, &pp)
        );
        let cyc = ContourCycle::circle(lam, 0.45, 64);
        let b2 = commutator_solution_b_contour(&a, &cyc, &pp).unwrap();
        assert!(
            (&b - &b2).norm() < 1e-8,
            "wegweiser vs contour {}",
            (&b - &b2).norm()
        );
    }

    #[test]
    fn gap_violation_detected_by_reduced_resolvent() {
        // λ = 0 also in the complementary spectrum
        let a = CMat::diag(&[c64(0.0, 0.0), c64(0.0, 0.0)]);
        let p = CMat::diag(&[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let pp = CMat::from_rows(&[
            &[c64(0.0, 0.0), c64(1.0, 0.0)],
            &[c64(1.0, 0.0), c64(0.0, 0.0)],
        ]);
        assert!(matches!(
            commutator_solution_b(&a, c64(0.0, 0.0), &p, &pp, 1),
            Err(Error::GapViolation { .. })
        ));
    }

    #[test]
    fn adiabatic_evolution_intertwines_exactly() {
        let ex = build_standard_example("ex3-1u", &Params::new()).unwrap();
        let eps = 0.1;
        let v = adiabatic_evolution(&ex.family, &ex.projection, eps, 1e-10, &PropagateOpts::default())
            .unwrap();
        let res = intertwining_residual(&v, &ex.projection);
        assert!(res < 1e-7, "intertwining residual {res}");
        // while U_eps does not intertwine
        let u = propagate(
            &GeneratorFamily::scaled_operator(&ex.family, 1.0 / eps),
            eps,
            0.0,
            1.0,
            1e-10,
            &PropagateOpts::default(),
        )
        .unwrap();
        let res_u = intertwining_residual(&u, &ex.projection);
        assert!(res_u > 1e-3, "U_eps should not intertwine, residual {res_u}");
    }

    #[test]
    fn constant_projection_makes_v_equal_u() {
        // P constant and commuting with A: K = 0, V_eps = U_eps
        let mut params = Params::new();
        params.set("twist", 0.0);
        let ex = build_standard_example("ex3-1", &params).unwrap();
        let eps = 0.2;
        let v = adiabatic_evolution(&ex.family, &ex.projection, eps, 1e-10, &PropagateOpts::default())
            .unwrap();
        let u = propagate(
            &GeneratorFamily::scaled_operator(&ex.family, 1.0 / eps),
            eps,
            0.0,
            1.0,
            1e-10,
            &PropagateOpts::default(),
        )
        .unwrap();
        let vm = v.transfer(0, v.grid().len() - 1);
        let um = u.transfer(0, u.grid().len() - 1);
        assert!((&vm - &um).norm() < 1e-12);
        let tr = transition_amplitude(&u, &ex.projection);
        assert!(tr.escape < 1e-9 && tr.capture < 1e-9);
    }

    #[test]
    fn skew_hermitian_adiabatic_evolution_is_unitary() {
        // A(t) = Rᵀ diag(i, -i, 2i) R with real orthogonal R: skew-Hermitian;
        // V_eps = exp-type propagation of skew generators stays unitary
        let a0 = CMat::diag(&[c64(0.0, 1.0), c64(0.0, -1.0), c64(0.0, 2.0)]);
        let c = CMat::from_rows(&[
            &[c64(0.0, 0.0), c64(0.8, 0.0), c64(0.0, 0.0)],
            &[c64(-0.8, 0.0), c64(0.0, 0.0), c64(0.5, 0.0)],
            &[c64(0.0, 0.0), c64(-0.5, 0.0), c64(0.0, 0.0)],
        ]);
        let rot = crate::family::generic_rotation(c.clone());
        let base = alloc::sync::Arc::new(move |_t: f64| a0.clone());
        let base_deriv = alloc::sync::Arc::new(move |_t: f64| CMat::zeros(3));
        let fam = OperatorFamily::similarity(3, base, base_deriv, rot.clone(), c.clone(), alloc::vec![]);
        let p0 = CMat::diag(&[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
        let proj = ProjectionFamily::similarity(3, p0, rot, c);
        let eps = 0.25;
        let v = adiabatic_evolution(&fam, &proj, eps, 1e-11, &PropagateOpts::default()).unwrap();
        let vm = v.transfer(0, v.grid().len() - 1);
        let defect = (&(&vm.adjoint() * &vm) - &CMat::identity(3)).norm();
        assert!(defect < 1e-9, "unitarity defect {defect}");
        assert_eq!(proj.provenance, Provenance::AnalyticSimilarity);
    }

    #[test]
    fn projected_evolution_scalar_factor_oracle() {
        // weakly 1-associated case: V0_eps(s)P(0) = e^{(1/ε)∫λ} W(s) P(0)
        let ex = build_standard_example("ex-hoelder", &Params::from_pairs(&[("d", 8.0)])).unwrap();
        let eps = 0.3;
        let s_time = 0.5;
        let v0 = projected_evolution(
            &ex.family,
            &ex.projection,
            &ex.lambda,
            1,
            eps,
            1e-11,
            &PropagateOpts::default(),
        )
        .unwrap();
        // index of s on the grid
        let idx = v0
            .grid()
            .iter()
            .position(|&t| (t - s_time).abs() < 1e-12)
            .expect("s on output grid");
        let got = &v0.transfer(0, idx) * &ex.projection.eval(0.0);
        let expect =
            scalar_factor_projected_evolution(&ex.projection, &ex.lambda, eps, s_time, 1e-11)
                .unwrap();
        let defect = (&got - &expect).norm();
        assert!(defect < 1e-7, "scalar-factor defect {defect}");
    }

    #[test]
    fn projected_evolution_rejects_wrong_kernel() {
        // P that does not project into ker(A - λ): precondition must trip
        let ex = build_standard_example("ex3-1u", &Params::new()).unwrap();
        let wrong = ProjectionFamily::constant(CMat::diag(&[
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            c64(1.0, 0.0),
        ]));
        let err = projected_evolution(
            &ex.family,
            &wrong,
            &ex.lambda,
            1,
            0.25,
            1e-10,
            &PropagateOpts::default(),
        );
        assert!(matches!(err, Err(Error::KernelInclusionViolation { .. })));
    }
}

//! Property-based invariants of the dense kernel: exponential inverse law,
//! first resolvent identity, null-space guarantees, Riesz/weak-projection
//! agreement on matrices with constructed isolated eigenvalues.

use adiab_core::mat::{
    c64, mat_exp, null_space, orthonormality_defect, resolvent, spectral_norm, vec_norm, CMat,
    C64, Lu,
};
use adiab_core::spectral::{
    riesz_projection, weakly_associated_projection, weakly_associated_projection_rangefirst,
    ContourCycle,
};
use proptest::prelude::*;

fn complex_entry() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| c64(re, im))
}

fn matrix(max_dim: usize) -> impl Strategy<Value = CMat> {
    (1..=max_dim).prop_flat_map(move |n| {
        proptest::collection::vec(complex_entry(), n * n).prop_map(move |v| {
            CMat::from_fn(n, |i, j| v[i * n + j])
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exp_times_exp_of_negation_is_identity(m in matrix(6), scale in 0.1f64..3.0) {
        // keep ‖M‖ ≤ 10 per the kernel contract
        let m = m.scale_re(scale);
        prop_assume!(m.one_norm() <= 10.0);
        let e = mat_exp(&m).unwrap();
        let einv = mat_exp(&m.scale_re(-1.0)).unwrap();
        let defect = spectral_norm(&(&(&e * &einv) - &CMat::identity(m.dim())));
        prop_assert!(defect < 1e-9, "defect {defect}");
    }

    #[test]
    fn first_resolvent_identity(m in matrix(5)) {
        // pick two shifts comfortably outside the numerical range
        let r = 2.0 + m.one_norm();
        let z1 = c64(r, 0.7 * r);
        let z2 = c64(-0.3 * r, -r);
        let r1 = resolvent(&m, z1).unwrap();
        let r2 = resolvent(&m, z2).unwrap();
        let lhs = &(&r1 - &r2) - &(&r1 * &r2).scale(z2 - z1);
        prop_assert!(spectral_norm(&lhs) < 1e-9, "residual {}", spectral_norm(&lhs));
    }

    #[test]
    fn null_space_orthonormal_and_annihilated(m in matrix(6), rank_drop in 0usize..3) {
        // force a known kernel by zeroing trailing columns of a factor
        let n = m.dim();
        let drop = rank_drop.min(n - 1);
        let mut f = m.clone();
        for j in n - drop..n {
            for i in 0..n {
                f[(i, j)] = c64(0.0, 0.0);
            }
        }
        let prod = &f * &f.adjoint(); // rank ≤ n - drop
        let basis = null_space(&prod, 1e-9);
        prop_assert!(basis.len() >= drop);
        prop_assert!(orthonormality_defect(&basis) < 1e-12);
        let smax = spectral_norm(&prod).max(1e-300);
        for v in &basis {
            prop_assert!(vec_norm(&prod.matvec(v)) <= 1e-9 * smax * 1.01);
        }
    }
}

/// Deterministic construction: S (J_m(0) ⊕ D) S⁻¹ with an isolated zero
/// eigenvalue; weak and Riesz projections must agree, and the two splitting
/// routes must return the same projection.
#[test]
fn weak_equals_riesz_on_constructed_matrices() {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ad1a);
    let mut worst_pair = 0.0f64;
    let mut worst_unique = 0.0f64;
    for case in 0..60 {
        let n = rng.gen_range(2..=8usize);
        let m_jordan = rng.gen_range(1..=2usize.min(n));
        // J block at 0, rest of spectrum at distance ≥ 1
        let mut j = CMat::zeros(n);
        for i in 0..m_jordan - 1 {
            j[(i, i + 1)] = c64(1.0, 0.0);
        }
        for i in m_jordan..n {
            let angle = rng.gen_range(0.0..core::f64::consts::TAU);
            let radius = rng.gen_range(1.0..3.0);
            j[(i, i)] = c64(radius * angle.cos(), radius * angle.sin());
        }
        // well-conditioned similarity: identity plus a small perturbation
        let mut s = CMat::identity(n);
        for i in 0..n {
            for k in 0..n {
                if i != k {
                    s[(i, k)] = c64(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
                }
            }
        }
        let sinv = Lu::new(&s).unwrap().inverse().unwrap();
        let a = &(&s * &j) * &sinv;

        let w = weakly_associated_projection(&a, c64(0.0, 0.0), 1e-9).unwrap();
        assert_eq!(w.m, m_jordan, "case {case}: wrong nilpotence order");
        let cyc = ContourCycle::around_eigenvalue(&a, c64(0.0, 0.0), 1e-6).unwrap();
        let p_riesz = riesz_projection(&a, &cyc).unwrap();
        let with_riesz = (&w.projection - &p_riesz).norm();
        worst_pair = worst_pair.max(with_riesz);
        assert!(with_riesz < 1e-8, "case {case}: weak vs riesz {with_riesz}");

        let w2 = weakly_associated_projection_rangefirst(&a, c64(0.0, 0.0), 1e-9).unwrap();
        let unique = (&w.projection - &w2.projection).norm();
        worst_unique = worst_unique.max(unique);
        assert!(unique < 1e-8, "case {case}: kernel-first vs range-first {unique}");
    }
    println!("worst weak/riesz defect {worst_pair:.3e}, worst uniqueness defect {worst_unique:.3e}");
}

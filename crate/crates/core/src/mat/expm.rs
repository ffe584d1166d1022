//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (orders 3/5/7/9/13 selected from the 1-norm, after Higham's
//! 2005 algorithm with exact 1-norms instead of norm estimates).

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::{Float, One, Zero};

use super::{CMat, Lu, C64};
use crate::error::{Error, Result};

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn is_diagonal(m: &CMat) -> bool {
    let n = m.dim();
    for i in 0..n {
        for j in 0..n {
            if i != j && !m[(i, j)].is_zero() {
                return false;
            }
        }
    }
    true
}

/// Evaluate the [m/m] Padé approximant given the even powers of A.
/// `powers[k]` is A^{2k} (powers[0] = I). Returns (U, V) with
/// p(A) = U + V, q(A) = -U + V.
fn pade_uv(a: &CMat, powers: &[&CMat], b: &[f64]) -> (CMat, CMat) {
    let n = a.dim();
    let mut u_inner = CMat::zeros(n);
    let mut v = CMat::zeros(n);
    for (k, p) in powers.iter().enumerate() {
        let cu = b[2 * k + 1];
        let cv = b[2 * k];
        u_inner += &p.scale_re(cu);
        v += &p.scale_re(cv);
    }
    (a * &u_inner, v)
}

fn pade_13(a: &CMat, a2: &CMat, a4: &CMat, a6: &CMat) -> (CMat, CMat) {
    let b = &B13;
    let n = a.dim();
    let id = CMat::identity(n);
    // U = A [ A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I ]
    let mut w1 = a6.scale_re(b[13]);
    w1 += &a4.scale_re(b[11]);
    w1 += &a2.scale_re(b[9]);
    let mut w = a6 * &w1;
    w += &a6.scale_re(b[7]);
    w += &a4.scale_re(b[5]);
    w += &a2.scale_re(b[3]);
    w += &id.scale_re(b[1]);
    let u = a * &w;
    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let mut z1 = a6.scale_re(b[12]);
    z1 += &a4.scale_re(b[10]);
    z1 += &a2.scale_re(b[8]);
    let mut v = a6 * &z1;
    v += &a6.scale_re(b[6]);
    v += &a4.scale_re(b[4]);
    v += &a2.scale_re(b[2]);
    v += &id.scale_re(b[0]);
    (u, v)
}

/// `e^M` to within kernel tolerance (≈1e-12 relative in spectral norm for
/// the moderate norms arising in the examples).
pub fn mat_exp(m: &CMat) -> Result<CMat> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("mat_exp of a non-finite matrix"));
    }
    let n = m.dim();
    if n == 1 {
        let mut out = CMat::zeros(1);
        out[(0, 0)] = m[(0, 0)].exp();
        return Ok(out);
    }
    if is_diagonal(m) {
        let d: Vec<C64> = (0..n).map(|i| m[(i, i)].exp()).collect();
        return Ok(CMat::diag(&d));
    }

    let norm1 = m.one_norm();
    let id = CMat::identity(n);

    let solve_ratio = |u: CMat, v: CMat| -> Result<CMat> {
        // r = (V - U)^{-1} (V + U)
        let num = &v + &u;
        let den = &v - &u;
        Lu::new(&den)?.solve_mat(&num)
    };

    if norm1 <= THETA_13 {
        let a2 = m * m;
        if norm1 <= THETA_3 {
            let (u, v) = pade_uv(m, &[&id, &a2], &B3);
            return solve_ratio(u, v);
        }
        let a4 = &a2 * &a2;
        if norm1 <= THETA_5 {
            let (u, v) = pade_uv(m, &[&id, &a2, &a4], &B5);
            return solve_ratio(u, v);
        }
        let a6 = &a4 * &a2;
        if norm1 <= THETA_7 {
            let (u, v) = pade_uv(m, &[&id, &a2, &a4, &a6], &B7);
            return solve_ratio(u, v);
        }
        if norm1 <= THETA_9 {
            let a8 = &a4 * &a4;
            let (u, v) = pade_uv(m, &[&id, &a2, &a4, &a6, &a8], &B9);
            return solve_ratio(u, v);
        }
        let (u, v) = pade_13(m, &a2, &a4, &a6);
        return solve_ratio(u, v);
    }

    // scaling and squaring
    let s = ((norm1 / THETA_13).log2()).ceil().max(0.0) as u32;
    let scaled = m.scale_re(0.5f64.powi(s as i32));
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let (u, v) = pade_13(&scaled, &a2, &a4, &a6);
    let mut r = solve_ratio(u, v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::InvalidInput("mat_exp overflowed"));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{c64, spectral_norm};

    #[test]
    fn exp_of_zero_is_identity() {
        let z = CMat::zeros(2);
        let e = mat_exp(&z).unwrap();
        assert!((&e - &CMat::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn exp_of_diagonal() {
        // exp(diag(iπ, 0)) = diag(-1, 1)
        let m = CMat::diag(&[c64(0.0, core::f64::consts::PI), c64(0.0, 0.0)]);
        let e = mat_exp(&m).unwrap();
        assert!((e[(0, 0)] - c64(-1.0, 0.0)).norm() < 1e-14);
        assert!((e[(1, 1)] - c64(1.0, 0.0)).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15 && e[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn exp_of_nilpotent_terminates() {
        // N upper Jordan: exp(N) = I + N
        let mut nm = CMat::zeros(2);
        nm[(0, 1)] = c64(1.0, 0.0);
        let e = mat_exp(&nm).unwrap();
        let expect = &CMat::identity(2) + &nm;
        assert!((&e - &expect).max_abs() < 1e-14);
    }

    #[test]
    fn exp_rotation_block() {
        // C = θ [[0,1],[-1,0]] -> e^C = [[cos θ, sin θ],[-sin θ, cos θ]]
        let th = 1.3f64;
        let c = CMat::from_rows(&[
            &[c64(0.0, 0.0), c64(th, 0.0)],
            &[c64(-th, 0.0), c64(0.0, 0.0)],
        ]);
        let e = mat_exp(&c).unwrap();
        assert!((e[(0, 0)].re - th.cos()).abs() < 1e-13);
        assert!((e[(0, 1)].re - th.sin()).abs() < 1e-13);
        assert!((e[(1, 0)].re + th.sin()).abs() < 1e-13);
    }

    #[test]
    fn exp_inverse_property_large_norm() {
        // forces the scaling-and-squaring path
        let m = CMat::from_rows(&[
            &[c64(3.0, 7.0), c64(2.0, -1.0), c64(0.0, 4.0)],
            &[c64(-1.0, 0.0), c64(0.0, -6.0), c64(1.0, 1.0)],
            &[c64(2.0, 2.0), c64(0.5, 0.0), c64(-4.0, 3.0)],
        ]);
        let e = mat_exp(&m).unwrap();
        let einv = mat_exp(&(-&m)).unwrap();
        let err = spectral_norm(&(&(&e * &einv) - &CMat::identity(3)));
        assert!(err < 1e-9, "‖e^M e^-M - I‖ = {err}");
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = CMat::zeros(2);
        m[(0, 0)] = c64(f64::NAN, 0.0);
        assert!(matches!(mat_exp(&m), Err(Error::InvalidInput(_))));
    }
}

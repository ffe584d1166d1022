//! LU factorization with partial pivoting for complex matrices.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::{Float, Zero};

use super::{CMat, C64};
use crate::error::{Error, Result};

/// LU factorization `P A = L U` with partial (row) pivoting.
pub struct Lu {
    lu: CMat,
    piv: Vec<usize>,
    min_pivot: f64,
    max_pivot: f64,
}

impl Lu {
    pub fn new(a: &CMat) -> Result<Lu> {
        if !a.is_finite() {
            return Err(Error::InvalidInput("LU of a non-finite matrix"));
        }
        let n = a.dim();
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot = 0.0f64;
        for k in 0..n {
            // pivot search
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                piv.swap(k, p);
            }
            let pivot = lu[(k, k)];
            let pn = pivot.norm();
            min_pivot = min_pivot.min(pn);
            max_pivot = max_pivot.max(pn);
            if pn == 0.0 {
                continue; // exactly singular; solves will report it
            }
            for i in k + 1..n {
                let m = lu[(i, k)] / pivot;
                lu[(i, k)] = m;
                if m.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= m * u;
                }
            }
        }
        Ok(Lu { lu, piv, min_pivot, max_pivot })
    }

    pub fn is_singular(&self) -> bool {
        self.min_pivot == 0.0
    }

    /// Smallest |U_kk| over the factorization; a crude singularity indicator.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn max_pivot(&self) -> f64 {
        self.max_pivot
    }

    pub fn solve_vec(&self, b: &[C64]) -> Result<Vec<C64>> {
        if self.is_singular() {
            return Err(Error::NearSingular { gap_estimate: 0.0 });
        }
        let n = self.lu.dim();
        let mut x: Vec<C64> = self.piv.iter().map(|&p| b[p]).collect();
        // forward: L y = Pb
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        // back: U x = y
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Solve with the adjoint: `Aᴴ x = b`.
    pub fn solve_adjoint_vec(&self, b: &[C64]) -> Result<Vec<C64>> {
        if self.is_singular() {
            return Err(Error::NearSingular { gap_estimate: 0.0 });
        }
        let n = self.lu.dim();
        // Aᴴ = (Pᵀ L U)ᴴ = Uᴴ Lᴴ P
        let mut x: Vec<C64> = b.to_vec();
        // Uᴴ y = b (forward, Uᴴ lower)
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(j, i)].conj() * x[j];
            }
            x[i] = acc / self.lu[(i, i)].conj();
        }
        // Lᴴ z = y (backward, unit diagonal)
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(j, i)].conj() * x[j];
            }
            x[i] = acc;
        }
        // x = Pᵀ z: row p of A was moved to position k, so x[piv[k]] = z[k]
        let mut out = vec![C64::zero(); n];
        for k in 0..n {
            out[self.piv[k]] = x[k];
        }
        Ok(out)
    }

    pub fn solve_mat(&self, b: &CMat) -> Result<CMat> {
        let n = self.lu.dim();
        let mut out = CMat::zeros(n);
        for j in 0..n {
            let col = self.solve_vec(&b.column(j))?;
            out.set_column(j, &col);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<CMat> {
        self.solve_mat(&CMat::identity(self.lu.dim()))
    }
}

const RESOLVENT_TOL_EIG: f64 = 1e-12;

/// `(z - A)⁻¹`. Errors with [`Error::NearSingular`] (carrying a distance
/// estimate to the spectrum) when z is within the conditioning threshold of
/// an eigenvalue.
pub fn resolvent(a: &CMat, z: C64) -> Result<CMat> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("resolvent of a non-finite matrix"));
    }
    let shifted = &CMat::identity(a.dim()).scale(z) - a;
    let lu = Lu::new(&shifted)?;
    let scale = shifted.one_norm().max(1.0);
    if lu.is_singular() {
        return Err(Error::NearSingular { gap_estimate: 0.0 });
    }
    let smin = sigma_min_est(&shifted, &lu);
    if smin <= RESOLVENT_TOL_EIG * scale {
        return Err(Error::NearSingular { gap_estimate: smin });
    }
    lu.inverse()
}

/// Smallest-singular-value estimate of `a` by inverse power iteration on the
/// LU factors. Returns 0.0 for exactly singular input.
pub fn sigma_min_est(a: &CMat, lu: &Lu) -> f64 {
    if lu.is_singular() {
        return 0.0;
    }
    let n = a.dim();
    let mut v: Vec<C64> = (0..n)
        .map(|j| C64::new(1.0 + 0.3 * ((j + 1) as f64).sin(), 0.1 * ((2 * j) as f64).cos()))
        .collect();
    normalize(&mut v);
    let mut rho = 0.0f64;
    for _ in 0..40 {
        // w = A^{-1} v, u = A^{-ᴴ} w: power iteration on (AᴴA)^{-1}
        let w = match lu.solve_vec(&v) {
            Ok(w) => w,
            Err(_) => return 0.0,
        };
        let mut u = match lu.solve_adjoint_vec(&w) {
            Ok(u) => u,
            Err(_) => return 0.0,
        };
        let nu = vec_norm2(&u);
        if nu == 0.0 || !nu.is_finite() {
            return 0.0;
        }
        let rho_new = nu.sqrt(); // ≈ 1/σ_min after convergence (of ‖(AᴴA)^{-1}‖^{1/2})
        for x in u.iter_mut() {
            *x /= C64::new(nu, 0.0);
        }
        v = u;
        if (rho_new - rho).abs() <= 1e-10 * rho_new {
            rho = rho_new;
            break;
        }
        rho = rho_new;
    }
    if rho == 0.0 {
        0.0
    } else {
        1.0 / rho
    }
}

fn vec_norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [C64]) {
    let n = vec_norm2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= C64::new(n, 0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::c64;

    #[test]
    fn solve_roundtrip() {
        let a = CMat::from_rows(&[
            &[c64(2.0, 1.0), c64(0.0, -1.0), c64(0.5, 0.0)],
            &[c64(1.0, 0.0), c64(3.0, 0.0), c64(0.0, 2.0)],
            &[c64(0.0, 0.5), c64(-1.0, 1.0), c64(4.0, -1.0)],
        ]);
        let lu = Lu::new(&a).unwrap();
        let b = [c64(1.0, 0.0), c64(0.0, 1.0), c64(2.0, -1.0)];
        let x = lu.solve_vec(&b).unwrap();
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(b.iter()) {
            assert!((ri - bi).norm() < 1e-12);
        }
        // adjoint solve
        let y = lu.solve_adjoint_vec(&b).unwrap();
        let r2 = a.adjoint().matvec(&y);
        for (ri, bi) in r2.iter().zip(b.iter()) {
            assert!((ri - bi).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_matches_identity() {
        let a = CMat::from_rows(&[
            &[c64(1.0, 1.0), c64(2.0, 0.0)],
            &[c64(0.0, -1.0), c64(1.0, 0.5)],
        ]);
        let inv = Lu::new(&a).unwrap().inverse().unwrap();
        let err = (&(&a * &inv) - &CMat::identity(2)).max_abs();
        assert!(err < 1e-13);
    }

    #[test]
    fn sigma_min_of_diagonal() {
        let a = CMat::diag(&[c64(5.0, 0.0), c64(0.01, 0.0), c64(1.0, 0.0)]);
        let lu = Lu::new(&a).unwrap();
        let s = sigma_min_est(&a, &lu);
        assert!((s - 0.01).abs() < 1e-6, "sigma_min {s}");
    }
}

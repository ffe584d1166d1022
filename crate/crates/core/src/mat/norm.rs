//! Spectral norm (largest singular value) by power iteration on `AᴴA`.
//!
//! The iterate converges to σ_max from below with ratio (σ₂/σ₁)²; for
//! residual-style checks and log-log slope fits a relative accuracy of
//! ~1e-10 is ample, and two deterministic starting vectors guard against an
//! unlucky orthogonal start.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{CMat, C64};

/// Matrix-free operator for norm estimation: `apply` is `x ↦ M x`,
/// `apply_adjoint` is `x ↦ Mᴴ x`.
pub trait OpNorm {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64>;
}

impl OpNorm for CMat {
    fn dim(&self) -> usize {
        CMat::dim(self)
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matvec(x)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.adjoint_matvec(x)
    }
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn start_vector(n: usize, flavor: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n)
        .map(|j| {
            let x = (j + 1) as f64;
            match flavor {
                0 => C64::new(1.0 + 0.25 * x.sin(), 0.25 * (1.7 * x).cos()),
                _ => C64::new((0.9 * x).cos(), 1.0 + 0.25 * (2.3 * x).sin()),
            }
        })
        .collect();
    let s = norm2(&v);
    for z in v.iter_mut() {
        *z /= C64::new(s, 0.0);
    }
    v
}

fn power_iterate(op: &dyn OpNorm, flavor: usize, max_it: usize) -> f64 {
    let n = op.dim();
    let mut v = start_vector(n, flavor);
    let mut sigma = 0.0f64;
    for _ in 0..max_it {
        let w = op.apply(&v);
        let s = norm2(&w);
        if s == 0.0 || !s.is_finite() {
            return s;
        }
        let mut u = op.apply_adjoint(&w);
        let nu = norm2(&u);
        if nu == 0.0 {
            return s;
        }
        for z in u.iter_mut() {
            *z /= C64::new(nu, 0.0);
        }
        v = u;
        if (s - sigma).abs() <= 1e-12 * s {
            return s;
        }
        sigma = s;
    }
    sigma
}

/// Largest singular value of a matrix-free operator.
pub fn op_norm_est(op: &dyn OpNorm) -> f64 {
    let a = power_iterate(op, 0, 120);
    if !a.is_finite() {
        return a;
    }
    let b = power_iterate(op, 1, 60);
    a.max(b)
}

/// Largest singular value of a dense matrix.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.dim() == 1 {
        return m[(0, 0)].norm();
    }
    op_norm_est(m)
}

//! Exact propagation for similarity families with constant base.
//!
//! For `A(t) = R(t)⁻¹ A₀ R(t)` with `R(t) = e^{Ct}` and constant `A₀`, the
//! substitution `y = R(t) x` turns `x' = [(1/ε) A(t) + K(t)] x` into a
//! constant-coefficient system whenever `R K R⁻¹` is constant (true for the
//! Kato term `K = [P', P]` of a similarity projection):
//!
//! ```text
//! U(t,s) = e^{-Ct} · e^{(t-s) M} · e^{Cs},    M = (1/ε) A₀ + C + R K R⁻¹.
//! ```
//!
//! One eigendecomposition of `M` then gives the transfer matrix at any
//! (t, s) in two multiplications — this is what makes the dimension-256
//! spectral-density model affordable. Small dimensions skip the
//! eigendecomposition and exponentiate `(t-s) M` directly.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Result;
use crate::mat::{eigendecomposition, mat_exp, op_norm_est, EigDecomp, Lu, OpNorm, C64, CMat};

type RotFn = Arc<dyn Fn(f64) -> (CMat, CMat) + Send + Sync>;

/// Exact evolution `U(t,s) = R(t)⁻¹ e^{(t-s)M} R(s)` for a constant
/// rotated-frame generator `M`.
pub struct RotatingFrame {
    rot: RotFn,
    m: CMat,
    eig: Option<FrameEig>,
}

struct FrameEig {
    values: Vec<C64>,
    vectors: CMat,
    inverse: CMat,
}

const EIG_DIM_THRESHOLD: usize = 16;

impl RotatingFrame {
    /// `m_rotated` is the constant generator in the rotated frame; `rot`
    /// yields `(R(t), R(t)⁻¹)`.
    pub fn new(m_rotated: CMat, rot: RotFn) -> Result<Self> {
        let eig = if m_rotated.dim() > EIG_DIM_THRESHOLD {
            let EigDecomp { values, vectors, residual } = eigendecomposition(&m_rotated)?;
            let scale = m_rotated.norm().max(1.0);
            if residual > 1e-8 * scale {
                // defective or ill-conditioned: fall back to per-call expm
                None
            } else {
                let inverse = Lu::new(&vectors)?.inverse()?;
                Some(FrameEig { values, vectors, inverse })
            }
        } else {
            None
        };
        Ok(RotatingFrame { rot, m: m_rotated, eig })
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// `e^{dt · M}` in the rotated frame.
    pub fn frame_exp(&self, dt: f64) -> Result<CMat> {
        match &self.eig {
            Some(e) => {
                let d: Vec<C64> =
                    e.values.iter().map(|&l| (l * C64::new(dt, 0.0)).exp()).collect();
                let mut sd = e.vectors.clone();
                for i in 0..sd.dim() {
                    for j in 0..sd.dim() {
                        sd[(i, j)] *= d[j];
                    }
                }
                Ok(&sd * &e.inverse)
            }
            None => mat_exp(&self.m.scale_re(dt)),
        }
    }

    /// Dense transfer matrix `U(t, s)`.
    pub fn transfer(&self, t: f64, s: f64) -> Result<CMat> {
        let (_, rinv_t) = (self.rot)(t);
        let (r_s, _) = (self.rot)(s);
        Ok(&(&rinv_t * &self.frame_exp(t - s)?) * &r_s)
    }

    /// Matrix-free handle on `U(t,s)` for norm estimation without forming
    /// the dense product.
    pub fn op(&self, t: f64, s: f64) -> Result<FrameOp<'_>> {
        let (_, rinv_t) = (self.rot)(t);
        let (r_s, _) = (self.rot)(s);
        Ok(FrameOp { frame: self, e: self.frame_exp(t - s)?, rinv_t, r_s, negate: false })
    }
}

/// `x ↦ R(t)⁻¹ E R(s) x` as a matrix-free operator.
pub struct FrameOp<'a> {
    frame: &'a RotatingFrame,
    e: CMat,
    rinv_t: CMat,
    r_s: CMat,
    negate: bool,
}

impl OpNorm for FrameOp<'_> {
    fn dim(&self) -> usize {
        self.frame.dim()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = self.rinv_t.matvec(&self.e.matvec(&self.r_s.matvec(x)));
        if self.negate {
            for z in y.iter_mut() {
                *z = -*z;
            }
        }
        y
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        let mut y = self
            .r_s
            .adjoint_matvec(&self.e.adjoint_matvec(&self.rinv_t.adjoint_matvec(x)));
        if self.negate {
            for z in y.iter_mut() {
                *z = -*z;
            }
        }
        y
    }
}

struct DiffOp<'a> {
    a: FrameOp<'a>,
    b: FrameOp<'a>,
}

impl OpNorm for DiffOp<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let ya = self.a.apply(x);
        let yb = self.b.apply(x);
        ya.iter().zip(yb.iter()).map(|(p, q)| p - q).collect()
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        let ya = self.a.apply_adjoint(x);
        let yb = self.b.apply_adjoint(x);
        ya.iter().zip(yb.iter()).map(|(p, q)| p - q).collect()
    }
}

/// `‖U(t,s) - V(t,s)‖` for two rotating-frame evolutions sharing the frame,
/// estimated matrix-free.
pub fn transfer_difference_norm(
    u: &RotatingFrame,
    v: &RotatingFrame,
    t: f64,
    s: f64,
) -> Result<f64> {
    let op = DiffOp { a: u.op(t, s)?, b: v.op(t, s)? };
    Ok(op_norm_est(&op))
}

//! Dense complex square matrices and the factorizations used throughout the
//! crate: LU with partial pivoting, Householder QR (optionally column
//! pivoted), Hessenberg-QR eigenvalues/Schur form, the scaling-and-squaring
//! matrix exponential, power-iteration spectral norms and rank-revealing
//! null spaces.
//!
//! Everything is plain `Vec`-backed row-major storage. Matrices are small
//! (dimension ≤ a few hundred), so the factorizations favour clarity and
//! numerical robustness over blocking.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::{Float, One, Zero};

use crate::error::{Error, Result};

mod eig;
mod expm;
mod lu;
mod norm;
mod qr;

pub use eig::{eigendecomposition, eigenvalues, schur, EigDecomp, Schur};
pub use expm::mat_exp;
pub use lu::{resolvent, sigma_min_est, Lu};
pub use norm::{op_norm_est, spectral_norm, OpNorm};
pub use qr::{null_space, null_space_abs, orthonormality_defect, range_basis, range_basis_abs, vec_norm, PivotedQr};

/// Complex scalar used everywhere.
pub type C64 = Complex<f64>;

/// Convenience constructor for a complex scalar.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    n: usize,
    a: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix dimension must be >= 1");
        CMat { n, a: vec![C64::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from row slices; all rows must have length n.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        let mut m = CMat::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "row length mismatch");
            m.a[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    pub fn diag(d: &[C64]) -> Self {
        let mut m = CMat::zeros(d.len());
        for (i, &z) in d.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Block-diagonal assembly.
    pub fn block_diag(blocks: &[&CMat]) -> Self {
        let n: usize = blocks.iter().map(|b| b.n).sum();
        let mut m = CMat::zeros(n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.n {
                for j in 0..b.n {
                    m[(off + i, off + j)] = b[(i, j)];
                }
            }
            off += b.n;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.a[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for i in 0..self.n {
            self[(i, j)] = v[i];
        }
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, z: C64) -> CMat {
        CMat { n: self.n, a: self.a.iter().map(|&w| w * z).collect() }
    }

    pub fn scale_re(&self, x: f64) -> CMat {
        self.scale(c64(x, 0.0))
    }

    /// `self + z * I`
    pub fn shift(&self, z: C64) -> CMat {
        let mut m = self.clone();
        for i in 0..self.n {
            m[(i, i)] += z;
        }
        m
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.n);
        let mut out = vec![C64::zero(); self.n];
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = C64::zero();
            for (a, x) in row.iter().zip(v.iter()) {
                acc += a * x;
            }
            out[i] = acc;
        }
        out
    }

    pub fn adjoint_matvec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.n);
        let mut out = vec![C64::zero(); self.n];
        for i in 0..self.n {
            let vi = v[i].conj();
            for (o, a) in out.iter_mut().zip(self.row(i).iter()) {
                *o += (a * vi).conj();
            }
        }
        out
    }

    /// Max absolute entry (used for cheap finiteness/size checks).
    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut sums = vec![0.0f64; self.n];
        for i in 0..self.n {
            for (s, z) in sums.iter_mut().zip(self.row(i).iter()) {
                *s += z.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn fro_norm(&self) -> f64 {
        self.a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Spectral norm (largest singular value). All operator norms in this
    /// crate are this norm; the examples are exercised in the Hilbert case.
    pub fn norm(&self) -> f64 {
        spectral_norm(self)
    }

    /// `a*b - b*a`
    pub fn commutator(a: &CMat, b: &CMat) -> CMat {
        &(a * b) - &(b * a)
    }

    pub fn checked(self, what: &'static str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::InvalidInput(what))
        }
    }
}

impl core::fmt::Debug for CMat {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(f, "CMat {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                let z = self[(i, j)];
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.a[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.a[i * self.n + j]
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.n, rhs.n);
        CMat {
            n: self.n,
            a: self.a.iter().zip(rhs.a.iter()).map(|(x, y)| x + y).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.n, rhs.n);
        CMat {
            n: self.n,
            a: self.a.iter().zip(rhs.a.iter()).map(|(x, y)| x - y).collect(),
        }
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        CMat { n: self.n, a: self.a.iter().map(|x| -x).collect() }
    }
}

impl AddAssign<&CMat> for CMat {
    fn add_assign(&mut self, rhs: &CMat) {
        assert_eq!(self.n, rhs.n);
        for (x, y) in self.a.iter_mut().zip(rhs.a.iter()) {
            *x += y;
        }
    }
}

impl SubAssign<&CMat> for CMat {
    fn sub_assign(&mut self, rhs: &CMat) {
        assert_eq!(self.n, rhs.n);
        for (x, y) in self.a.iter_mut().zip(rhs.a.iter()) {
            *x -= y;
        }
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = CMat::zeros(n);
        // ikj order: stream rows of rhs and out.
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                if aik.is_zero() {
                    continue;
                }
                let brow = &rhs.a[k * n..(k + 1) * n];
                let orow = &mut out.a[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow.iter()) {
                    *o += aik * b;
                }
            }
        }
        out
    }
}

impl Mul<C64> for &CMat {
    type Output = CMat;
    fn mul(self, z: C64) -> CMat {
        self.scale(z)
    }
}

/// Dot product `⟨u, v⟩ = Σ ū_i v_i` (conjugate-linear in the first slot).
pub fn vec_dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

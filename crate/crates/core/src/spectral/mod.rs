//! Spectral projections and diagnostics: Riesz projections by contour
//! quadrature, weakly associated projections by generalized kernel /
//! closed-range splitting, spectral-gap and crossing detection, and the
//! resolvent ray bound of the gap-free hypotheses.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::family::{Curve, OperatorFamily, ProjectionFamily};
use crate::mat::{
    c64, eigenvalues, null_space_abs, range_basis, range_basis_abs, sigma_min_est,
    spectral_norm, CMat, Lu, C64,
};

/// A closed quadrature contour in ℂ (trapezoidal rule on a circle) enclosing
/// a selected spectral subset.
///
/// Trapezoid nodes on a closed analytic curve converge geometrically, so the
/// node count is doubled from 32 until the projection residuals settle.
#[derive(Clone, Debug)]
pub struct ContourCycle {
    pub center: C64,
    pub radius: f64,
    pub n_nodes: usize,
    /// Declared enclosed eigenvalues (as located by the caller).
    pub enclosed: Vec<C64>,
    /// Min distance from quadrature nodes to σ(A); positive after a
    /// successful [`ContourCycle::certify`].
    pub certificate: f64,
}

impl ContourCycle {
    pub fn circle(center: C64, radius: f64, n_nodes: usize) -> Self {
        ContourCycle { center, radius, n_nodes, enclosed: Vec::new(), certificate: f64::NAN }
    }

    /// Quadrature nodes and weights: `∮ f(z) dz / 2πi ≈ Σ w_j f(z_j)`.
    pub fn nodes(&self) -> Vec<(C64, C64)> {
        let n = self.n_nodes;
        (0..n)
            .map(|j| {
                let th = 2.0 * core::f64::consts::PI * j as f64 / n as f64;
                let e = c64(th.cos(), th.sin());
                let z = self.center + e * c64(self.radius, 0.0);
                let w = e * c64(self.radius / n as f64, 0.0);
                (z, w)
            })
            .collect()
    }

    /// Winding number around `w` by the argument principle evaluated with
    /// the cycle's own quadrature: `n(γ, w) = (1/2πi) ∮ dz/(z-w)`.
    pub fn winding(&self, w: C64) -> f64 {
        self.nodes()
            .iter()
            .map(|&(z, wt)| wt / (z - w))
            .sum::<C64>()
            .re
    }

    /// Certify the enclosure against a spectrum: winding 1 around every
    /// enclosed eigenvalue, 0 around every excluded one, and a positive
    /// distance from the nodes to the spectrum.
    pub fn certify(&mut self, spectrum: &[C64]) -> Result<()> {
        let mut cert = f64::INFINITY;
        let mut enclosed = Vec::new();
        for &s in spectrum {
            let d = (s - self.center).norm();
            for (z, _) in self.nodes() {
                cert = cert.min((z - s).norm());
            }
            let wind = self.winding(s);
            let inside = d < self.radius;
            let expect = if inside { 1.0 } else { 0.0 };
            if (wind - expect).abs() > 0.1 {
                return Err(Error::GapViolation { t: f64::NAN });
            }
            if inside {
                enclosed.push(s);
            }
        }
        if !(cert > 0.0) || cert < 1e-12 * self.radius.max(1.0) {
            return Err(Error::GapViolation { t: f64::NAN });
        }
        self.certificate = cert;
        self.enclosed = enclosed;
        Ok(())
    }

    /// Cycle for an isolated eigenvalue of `a`: circle centered at `lambda`
    /// with radius 0.45 × the gap to the rest of the spectrum (eigenvalues
    /// within `cluster_radius` of `lambda` count as the enclosed subset).
    pub fn around_eigenvalue(a: &CMat, lambda: C64, cluster_radius: f64) -> Result<ContourCycle> {
        let spec = eigenvalues(a)?;
        let mut gap = f64::INFINITY;
        for &s in &spec {
            let d = (s - lambda).norm();
            if d > cluster_radius {
                gap = gap.min(d);
            }
        }
        if !gap.is_finite() {
            // whole spectrum clusters at lambda; any radius beyond it works
            gap = 2.0 * cluster_radius.max(1.0);
        }
        if gap <= cluster_radius {
            return Err(Error::GapViolation { t: f64::NAN });
        }
        let mut cyc = ContourCycle::circle(lambda, 0.45 * gap, 32);
        cyc.certify(&spec)?;
        Ok(cyc)
    }
}

const RIESZ_TOL: f64 = 1e-10;
const NODE_CAP: usize = 1 << 14;

/// Riesz projection `P = (1/2πi) ∮ (z-A)⁻¹ dz` along the cycle, with node
/// doubling until `‖P² - P‖ ≤ 1e-10` and `‖[P,A]‖ ≤ 1e-10 (1 + ‖A‖)`.
pub fn riesz_projection(a: &CMat, cycle: &ContourCycle) -> Result<CMat> {
    riesz_projection_with_tol(a, cycle, RIESZ_TOL)
}

/// Riesz projection at a caller-chosen residual tolerance (the
/// superadiabatic iteration differentiates these paths and needs the
/// quadrature noise well below the differencing step).
pub fn riesz_projection_with_tol(a: &CMat, cycle: &ContourCycle, tol: f64) -> Result<CMat> {
    let scale = 1.0 + a.one_norm();
    let mut n = cycle.n_nodes.max(32);
    let mut last_residual = f64::INFINITY;
    while n <= NODE_CAP {
        let c = ContourCycle { n_nodes: n, ..cycle.clone() };
        let mut p = CMat::zeros(a.dim());
        for (z, w) in c.nodes() {
            let minus_a_shifted = &CMat::identity(a.dim()).scale(z) - a;
            let r = Lu::new(&minus_a_shifted)?.inverse()?;
            p += &r.scale(w);
        }
        let idem = (&(&p * &p) - &p).norm();
        let comm = CMat::commutator(&p, a).norm();
        if idem <= tol && comm <= tol * scale {
            return Ok(p);
        }
        last_residual = idem.max(comm / scale);
        n *= 2;
    }
    Err(Error::QuadratureFailure { residual: last_residual })
}

/// Residuals certifying a weak association.
#[derive(Clone, Copy, Debug)]
pub struct WeakResiduals {
    pub idempotency: f64,
    pub commutation: f64,
    /// `‖((A-λ)P)^m‖` — nilpotency of order m on the range of P.
    pub nilpotency: f64,
    /// Smallest singular value of (A-λ) restricted to range(1-P).
    pub injectivity_margin: f64,
    /// Condition number of the kernel/range splitting basis.
    pub splitting_cond: f64,
}

/// A projection weakly associated with `A` and `λ`: `(A-λ)` nilpotent of
/// order `m` on range P, injective on range (1-P).
#[derive(Clone, Debug)]
pub struct WeakAssociation {
    pub projection: CMat,
    pub lambda: C64,
    pub m: usize,
    pub residuals: WeakResiduals,
}

const SPLITTING_COND_CAP: f64 = 1e12;

fn complement_basis(basis: &[Vec<C64>], dim: usize) -> Vec<Vec<C64>> {
    // orthogonal complement via the projector I - Σ v vᴴ
    let mut proj = CMat::identity(dim);
    for v in basis {
        for i in 0..dim {
            for j in 0..dim {
                proj[(i, j)] -= v[i] * v[j].conj();
            }
        }
    }
    range_basis(&proj, 1e-8)
}

fn assemble_from_splitting(
    a: &CMat,
    lambda: C64,
    m: usize,
    kernel: &[Vec<C64>],
    range: &[Vec<C64>],
) -> Result<WeakAssociation> {
    let n = a.dim();
    let k = kernel.len();
    if k + range.len() != n {
        return Err(Error::NoWeakAssociation { condition: f64::INFINITY });
    }
    let mut s = CMat::zeros(n);
    for (j, v) in kernel.iter().chain(range.iter()).enumerate() {
        s.set_column(j, v);
    }
    let lu = Lu::new(&s)?;
    let smin = sigma_min_est(&s, &lu);
    let cond = if smin > 0.0 { spectral_norm(&s) / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > SPLITTING_COND_CAP {
        // the finite-dimensional analogue of "no weakly associated
        // projection exists": kernel and range nearly intersect
        return Err(Error::NoWeakAssociation { condition: cond });
    }
    // P = [K | 0] S⁻¹ projects onto span(kernel) along span(range)
    let mut ke = CMat::zeros(n);
    for (j, v) in kernel.iter().enumerate() {
        ke.set_column(j, v);
    }
    let sinv = lu.inverse()?;
    let p = &ke * &sinv;

    let shifted = a.shift(-lambda);
    let idem = (&(&p * &p) - &p).norm();
    let comm = CMat::commutator(a, &p).norm();
    let mp = &shifted * &p;
    let mut pow = mp.clone();
    for _ in 1..m {
        pow = &pow * &mp;
    }
    let nilpotency = pow.norm();
    // injectivity margin: σ_min of (A-λ) on the range splitting directions
    let r = range.len();
    let margin = if r == 0 {
        f64::INFINITY
    } else {
        let images: Vec<Vec<C64>> = range.iter().map(|v| shifted.matvec(v)).collect();
        let mut gram = CMat::zeros(r);
        for i in 0..r {
            for j in 0..r {
                gram[(i, j)] = crate::mat::vec_dot(&images[i], &images[j]);
            }
        }
        let evs = eigenvalues(&gram)?;
        let min_ev = evs.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        min_ev.max(0.0).sqrt()
    };
    Ok(WeakAssociation {
        projection: p,
        lambda,
        m,
        residuals: WeakResiduals {
            idempotency: idem,
            commutation: comm,
            nilpotency,
            injectivity_margin: margin,
            splitting_cond: cond,
        },
    })
}

fn kernel_dims(shifted: &CMat, tol: f64) -> (usize, Vec<usize>) {
    // dims of ker (A-λ)^k until stationary; thresholds are absolute at
    // tol · ‖A-λ‖^k so numerically nilpotent powers keep a meaningful scale
    let n = shifted.dim();
    let norm1 = spectral_norm(shifted).max(1e-300);
    let mut dims = Vec::new();
    let mut pow = shifted.clone();
    let mut scale = norm1;
    let mut prev = 0usize;
    for k in 1..=n {
        let d = null_space_abs(&pow, tol * scale).len();
        dims.push(d);
        if k >= 2 && d == prev {
            return (k - 1, dims);
        }
        if d == n {
            return (k, dims);
        }
        prev = d;
        pow = &pow * shifted;
        scale *= norm1;
    }
    (n, dims)
}

/// Weakly associated projection of `A` and `λ`, built kernel-first: `m` is
/// the smallest k with stationary `dim ker(A-λ)^k`, P projects onto
/// `ker(A-λ)^m` along `range((A-λ)^m)` (plain range — finite truncations
/// stand in for the closure).
pub fn weakly_associated_projection(a: &CMat, lambda: C64, tol: f64) -> Result<WeakAssociation> {
    let shifted = a.shift(-lambda);
    let (m, dims) = kernel_dims(&shifted, tol);
    if dims[0] == 0 {
        return Err(Error::InvalidInput("lambda is not an eigenvalue at the given tolerance"));
    }
    let norm1 = spectral_norm(&shifted).max(1e-300);
    let mut pow = shifted.clone();
    let mut scale = norm1;
    for _ in 1..m {
        pow = &pow * &shifted;
        scale *= norm1;
    }
    let kernel = null_space_abs(&pow, tol * scale);
    let range = range_basis_abs(&pow, tol * scale);
    assemble_from_splitting(a, lambda, m, &kernel, &range)
}

/// Same projection built range-first, from factorizations of `(Aᴴ-λ̄)^m`:
/// `range(A-λ)^m = ker(Aᴴ-λ̄)^m ⊥` and `ker(A-λ)^m = range(Aᴴ-λ̄)^m ⊥`.
/// An independent numerical route for the uniqueness check.
pub fn weakly_associated_projection_rangefirst(
    a: &CMat,
    lambda: C64,
    tol: f64,
) -> Result<WeakAssociation> {
    let n = a.dim();
    let shifted = a.shift(-lambda);
    let (m, dims) = kernel_dims(&shifted, tol);
    if dims[0] == 0 {
        return Err(Error::InvalidInput("lambda is not an eigenvalue at the given tolerance"));
    }
    let adj = a.adjoint().shift(-lambda.conj());
    let norm1 = spectral_norm(&adj).max(1e-300);
    let mut pow_adj = adj.clone();
    let mut scale = norm1;
    for _ in 1..m {
        pow_adj = &pow_adj * &adj;
        scale *= norm1;
    }
    let kernel = complement_basis(&range_basis_abs(&pow_adj, tol * scale), n);
    let range = complement_basis(&null_space_abs(&pow_adj, tol * scale), n);
    assemble_from_splitting(a, lambda, m, &kernel, &range)
}

/// Gap classification of a family along `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapClass {
    Uniform,
    NonUniform,
    Gapless,
}

#[derive(Clone, Debug)]
pub struct GapReport {
    /// (t, gap) samples: gap(t) = dist(λ(t), σ(A(t)) \ cluster(λ(t))).
    pub gaps: Vec<(f64, f64)>,
    pub min_gap: f64,
    /// Times where the refined gap fell below `tol_gap`.
    pub crossings: Vec<f64>,
    pub class: GapClass,
}

pub struct GapOptions {
    /// Eigenvalues within this distance of λ(t) count as σ(t) itself; must
    /// absorb the numerical scatter of defective eigenvalues
    /// (≈ ‖A‖ · macheps^{1/m} for a Jordan block of size m).
    pub cluster_radius: f64,
    /// Crossing threshold.
    pub tol_gap: f64,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions { cluster_radius: 1e-4, tol_gap: 1e-6 }
    }
}

/// Sorted distances from λ(t) to the spectrum of A(t), plus the count of
/// eigenvalues within the cluster radius (the numerical copies of λ itself,
/// including Jordan scatter).
fn eigen_distances(a: &OperatorFamily, lambda: &Curve, t: f64, cluster: f64) -> Result<(Vec<f64>, usize)> {
    let spec = eigenvalues(&a.eval(t))?;
    let l = lambda.eval(t);
    let mut d: Vec<f64> = spec.iter().map(|s| (s - l).norm()).collect();
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let in_cluster = d.iter().take_while(|&&x| x <= cluster).count();
    Ok((d, in_cluster))
}

/// Gap at `t` given the baseline multiplicity of the λ-cluster: the distance
/// to the first eigenvalue beyond the expected copies of λ. An eigenvalue
/// crossing into the cluster therefore shows up as a vanishing gap rather
/// than being silently absorbed.
fn gap_at(
    a: &OperatorFamily,
    lambda: &Curve,
    t: f64,
    cluster: f64,
    baseline: usize,
) -> Result<(f64, f64)> {
    let (d, _) = eigen_distances(a, lambda, t, cluster)?;
    let scale = d.last().copied().unwrap_or(0.0);
    let gap = d.get(baseline).copied().unwrap_or(f64::INFINITY);
    Ok((gap, scale))
}

/// Distance from the distinguished eigenvalue curve to the rest of the
/// spectrum along the grid, with one local refinement pass for crossings.
pub fn gap_analysis(
    a: &OperatorFamily,
    lambda: &Curve,
    grid: &[f64],
    opts: &GapOptions,
) -> Result<GapReport> {
    // baseline multiplicity of the λ-cluster: the minimal count over the
    // grid (nodes where an unrelated eigenvalue wanders into the cluster
    // then register as near-zero gaps instead of inflating the cluster)
    let mut baseline = usize::MAX;
    for &t in grid {
        let (_, count) = eigen_distances(a, lambda, t, opts.cluster_radius)?;
        baseline = baseline.min(count);
    }
    let mut gaps = Vec::with_capacity(grid.len());
    let mut scale: f64 = 0.0;
    for &t in grid {
        let (g, s) = gap_at(a, lambda, t, opts.cluster_radius, baseline)?;
        scale = scale.max(s);
        gaps.push((t, g));
    }
    let min_gap = gaps.iter().map(|&(_, g)| g).fold(f64::INFINITY, f64::min);

    // refine interior local minima by golden-section search
    let mut crossings = Vec::new();
    let low_threshold = (0.02 * scale).max(opts.tol_gap);
    for j in 1..gaps.len() - 1 {
        let (t, g) = gaps[j];
        if g <= gaps[j - 1].1 && g <= gaps[j + 1].1 && g < low_threshold {
            let (mut lo, mut hi) = (gaps[j - 1].0, gaps[j + 1].0);
            let mut best = (t, g);
            const INVPHI: f64 = 0.618_033_988_749_894_9;
            let mut x1 = hi - INVPHI * (hi - lo);
            let mut x2 = lo + INVPHI * (hi - lo);
            let mut f1 = gap_at(a, lambda, x1, opts.cluster_radius, baseline)?.0;
            let mut f2 = gap_at(a, lambda, x2, opts.cluster_radius, baseline)?.0;
            for _ in 0..48 {
                if f1 <= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - INVPHI * (hi - lo);
                    f1 = gap_at(a, lambda, x1, opts.cluster_radius, baseline)?.0;
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + INVPHI * (hi - lo);
                    f2 = gap_at(a, lambda, x2, opts.cluster_radius, baseline)?.0;
                }
                let (bx, bf) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
                if bf < best.1 {
                    best = (bx, bf);
                }
            }
            if best.1 < opts.tol_gap {
                crossings.push(best.0);
            }
        }
    }

    let frac_low = gaps.iter().filter(|&&(_, g)| g < 0.01 * scale).count() as f64
        / gaps.len() as f64;
    let class = if frac_low > 0.25 {
        GapClass::Gapless
    } else if !crossings.is_empty() || min_gap < 0.05 * scale {
        GapClass::NonUniform
    } else {
        GapClass::Uniform
    };
    Ok(GapReport { gaps, min_gap, crossings, class })
}

/// Result of sweeping the resolvent ray bound
/// `δ ‖(λ(t) + δ e^{iθ(t)} - A(t))⁻¹ (1-P(t))‖` over a (t, δ) grid.
#[derive(Clone, Debug)]
pub struct RayBound {
    /// Sup over the grid (the M₀ estimate of the gap-free hypothesis).
    pub m0: f64,
    /// Per-δ sup over t, in the order of the `deltas` argument.
    pub per_delta: Vec<(f64, f64)>,
    /// True when the per-δ sup keeps growing as δ → 0 (no saturation).
    pub unbounded_trend: bool,
}

pub fn resolvent_ray_bound(
    a: &OperatorFamily,
    lambda: &Curve,
    theta: &Curve,
    p: &ProjectionFamily,
    deltas: &[f64],
    t_grid: &[f64],
) -> Result<RayBound> {
    let mut per_delta = Vec::with_capacity(deltas.len());
    let mut m0: f64 = 0.0;
    for &delta in deltas {
        let mut sup: f64 = 0.0;
        for &t in t_grid {
            let am = a.eval(t);
            let th = theta.eval(t).re;
            let z = lambda.eval(t) + c64(delta * th.cos(), delta * th.sin());
            // The full resolvent may legitimately be ~δ^{-m0} for defective
            // λ(t) — the (1-P) factor removes that block — so only an
            // actual spectrum hit counts as failure here.
            let shifted = &CMat::identity(am.dim()).scale(z) - &am;
            let lu = Lu::new(&shifted)?;
            let scale = shifted.one_norm().max(1.0);
            if lu.is_singular() || sigma_min_est(&shifted, &lu) <= 100.0 * f64::EPSILON * scale {
                return Err(Error::RayHitsSpectrum { t, delta });
            }
            let r = lu.inverse()?;
            let comp = &CMat::identity(am.dim()) - &p.eval(t);
            let val = delta * (&r * &comp).norm();
            sup = sup.max(val);
        }
        per_delta.push((delta, sup));
        m0 = m0.max(sup);
    }
    // growth trend: sorted by decreasing δ, flag a persistent rise to the
    // smallest δ without saturation
    let mut sorted = per_delta.clone();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let rising = sorted.windows(2).filter(|w| w[1].1 > w[0].1 * 1.05).count();
    let unbounded_trend = rising + 1 >= sorted.len().max(2)
        && sorted.last().unwrap().1 > 2.0 * sorted.first().unwrap().1;
    Ok(RayBound { m0, per_delta, unbounded_trend })
}

/// Riesz-path projection family: `P(t)` by contour quadrature at each
/// evaluation time, `P'(t)` by Richardson differencing (h = 1e-4). The
/// enclosure is certified on `grid` before the family is returned.
pub fn projection_family_from_path(
    a: &OperatorFamily,
    center: Curve,
    radius: f64,
    grid: &[f64],
) -> Result<ProjectionFamily> {
    for &t in grid {
        let spec = eigenvalues(&a.eval(t))?;
        let mut cyc = ContourCycle::circle(center.eval(t), radius, 32);
        cyc.certify(&spec).map_err(|_| Error::GapViolation { t })?;
    }
    let a_eval = a.eval_fn();
    let a_eval2 = a.eval_fn();
    let center2 = center.clone();
    let dim = a.dim();
    let eval = move |t: f64| {
        let cyc = ContourCycle::circle(center.eval(t), radius, 32);
        riesz_projection(&a_eval(t), &cyc).expect("certified riesz path")
    };
    let deriv = move |t: f64| {
        let f = |s: f64| {
            let cyc = ContourCycle::circle(center2.eval(s), radius, 32);
            riesz_projection(&a_eval2(s), &cyc).expect("certified riesz path")
        };
        crate::family::derivative_of(f, t, 1e-4).matrix
    };
    Ok(ProjectionFamily::new(dim, eval, deriv, crate::family::Provenance::RieszPath))
}

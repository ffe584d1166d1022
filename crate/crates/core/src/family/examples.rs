//! Registry of the standard operator-family gallery.
//!
//! Every entry is of the similarity form `A(t) = R(t)⁻¹ A₀(t) R(t)` with
//! `R(t) = e^{Ct}` (except the plain multiplication family `ex4-7`). The
//! registry is addressable by string label; parameters arrive as key=value
//! pairs. Infinite-dimensional entries are realized as finite truncations
//! with a dimension parameter `d` and should be run at several values of `d`
//! (see [`registered_dims`]): truncation changes spectra — a truncated right
//! shift is nilpotent — so stability in `d` is the honest desk-scale proxy.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{generic_rotation, require, Curve, FamilyMeta, OperatorFamily, ProjectionFamily, RealCurve};
use crate::error::{Error, Result};
use crate::mat::{c64, CMat};

/// Key=value parameters for the registry builders.
#[derive(Clone, Debug, Default)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Params(BTreeMap::new())
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        let mut p = Params::new();
        for (k, v) in pairs {
            p.set(k, *v);
        }
        p
    }

    pub fn set(&mut self, key: &str, value: f64) -> &mut Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str, default: f64) -> f64 {
        self.0.get(key).copied().unwrap_or(default)
    }

    pub fn get_usize(&self, key: &str, default: usize) -> usize {
        self.0.get(key).map(|&v| v as usize).unwrap_or(default)
    }

    /// Parse a single `key=value` pair.
    pub fn parse_pair(&mut self, s: &str) -> Result<()> {
        let mut it = s.splitn(2, '=');
        let key = it.next().unwrap_or("");
        let val = it.next().ok_or(Error::InvalidInput("expected key=value"))?;
        let v: f64 = val.parse().map_err(|_| Error::InvalidInput("bad numeric value"))?;
        self.set(key, v);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.0.iter()
    }
}

/// A registered example: operator family, its distinguished projection
/// family, the eigenvalue curve of σ(t), and enough metadata to drive the
/// experiments.
pub struct BuiltExample {
    pub label: String,
    pub family: OperatorFamily,
    pub projection: ProjectionFamily,
    pub lambda: Curve,
    /// Suggested contour for Riesz/superadiabatic paths: center curve and
    /// radius (registered at 0.45 × the construction-time gap).
    pub cycle_center: Option<Curve>,
    pub cycle_radius: Option<f64>,
    /// One-line description of the example's claim.
    pub claim: &'static str,
}

pub fn registered_labels() -> &'static [&'static str] {
    &[
        "ex3-1", "ex3-1u", "ex3-2", "ex3-3", "ex-joye", "ex4-5", "ex4-6", "ex4-7",
        "ex-superad", "ex-hoelder",
    ]
}

/// Truncation dimensions at which a label's experiments are registered to
/// run (three values for truncated families, the fixed dimension otherwise).
pub fn registered_dims(label: &str) -> Result<Vec<usize>> {
    Ok(match label {
        "ex3-1" | "ex3-1u" | "ex-joye" | "ex-superad" => vec![3],
        "ex3-3" => vec![2],
        "ex3-2" => vec![6, 10, 14],
        "ex4-5" => vec![8, 16, 32],
        "ex4-6" => vec![8, 16, 24],
        "ex4-7" => vec![65, 101, 129],
        "ex-hoelder" => vec![64, 128, 256],
        _ => return Err(Error::UnknownExample),
    })
}

const MIN_TRUNCATION: usize = 4;

/// Golden-ratio Kronecker sequence in (-1, 0): a fixed, deterministic
/// low-discrepancy enumeration standing in for `[-1,0] ∩ ℚ` (only density
/// matters for the theorems; reproducibility needs a deterministic choice).
pub fn low_discrepancy_in_minus_one_zero(n: usize) -> Vec<f64> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    (1..=n)
        .map(|k| {
            let x = (k as f64) * PHI;
            -(x - x.floor())
        })
        .collect()
}

fn jordan_nilpotent(n: usize) -> CMat {
    let mut m = CMat::zeros(n);
    for i in 0..n - 1 {
        m[(i, i + 1)] = c64(1.0, 0.0);
    }
    m
}

/// Rotation closure for a rank-2 skew generator `C = rate (u vᵀ - v uᵀ)`
/// with real orthonormal u, v: `e^{Ct}` is the rotation by `rate·t` in the
/// plane span{u, v}. Returns `t ↦ (R(t), R(t)⁻¹)`.
fn plane_rotation(
    dim: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    rate: f64,
) -> Arc<dyn Fn(f64) -> (CMat, CMat) + Send + Sync> {
    Arc::new(move |t: f64| {
        let th = rate * t;
        let (s, c) = th.sin_cos();
        let build = |s: f64, c: f64| {
            CMat::from_fn(dim, |i, j| {
                let mut x = if i == j { 1.0 } else { 0.0 };
                x += s * (u[i] * v[j] - v[i] * u[j]);
                x += (c - 1.0) * (u[i] * u[j] + v[i] * v[j]);
                c64(x, 0.0)
            })
        };
        (build(s, c), build(-s, c))
    })
}

fn plane_rotation_generator(dim: usize, u: &[f64], v: &[f64], rate: f64) -> CMat {
    CMat::from_fn(dim, |i, j| c64(rate * (u[i] * v[j] - v[i] * u[j]), 0.0))
}

fn unit_vector(dim: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[k] = 1.0;
    e
}

/// `e^{Ct}` for the truncated right shift C (subdiagonal of ones):
/// entries t^{i-j}/(i-j)! below the diagonal.
fn shift_rotation(dim: usize) -> Arc<dyn Fn(f64) -> (CMat, CMat) + Send + Sync> {
    Arc::new(move |t: f64| {
        let build = |t: f64| {
            CMat::from_fn(dim, |i, j| {
                if i < j {
                    return c64(0.0, 0.0);
                }
                let k = i - j;
                let mut x = 1.0;
                for m in 1..=k {
                    x *= t / m as f64;
                }
                c64(x, 0.0)
            })
        };
        (build(t), build(-t))
    })
}

fn subdiagonal_shift(dim: usize) -> CMat {
    let mut c = CMat::zeros(dim);
    for i in 0..dim - 1 {
        c[(i + 1, i)] = c64(1.0, 0.0);
    }
    c
}

/// Shared assembly for similarity examples: family + projection + metadata.
#[allow(clippy::too_many_arguments)]
fn assemble(
    label: &str,
    dim: usize,
    base: Arc<dyn Fn(f64) -> CMat + Send + Sync>,
    base_deriv: Arc<dyn Fn(f64) -> CMat + Send + Sync>,
    rot: Arc<dyn Fn(f64) -> (CMat, CMat) + Send + Sync>,
    twist: CMat,
    p0: CMat,
    kinks: Vec<f64>,
    meta: FamilyMeta,
) -> (OperatorFamily, ProjectionFamily) {
    let mut fam = OperatorFamily::similarity(
        dim,
        base.clone(),
        base_deriv,
        rot.clone(),
        twist.clone(),
        kinks,
    );
    let mut m = meta;
    m.label = label.to_string();
    m.twist = Some(twist.clone());
    m.base = Some(base);
    m.rot = Some(rot.clone());
    fam.meta = m;
    let proj = ProjectionFamily::similarity(dim, p0, rot, twist);
    (fam, proj)
}

pub fn build_standard_example(label: &str, params: &Params) -> Result<BuiltExample> {
    match label {
        "ex3-1" => build_ex31(false, params),
        "ex3-1u" => build_ex31(true, params),
        "ex3-2" => build_ex32(params),
        "ex3-3" => build_ex33(params),
        "ex-joye" => build_joye(params),
        "ex4-5" => build_ex45(params),
        "ex4-6" => build_ex46(params),
        "ex4-7" => build_ex47(params),
        "ex-superad" => build_superad(params),
        "ex-hoelder" => build_hoelder(params),
        _ => Err(Error::UnknownExample),
    }
}

/// 3×3 block family diag(λ(t) + α(t)N, μ(t)) twisted by a rotation in the
/// coordinates 2,3. λ(t) = -t/3 and α(t) = t² (so the block family is
/// (M,0)-stable but not (1,0)-stable); the scalar branch is μ = λ - 1 in the
/// uniform-gap variant and μ = λ - |t - 1/2| (gap closing at t = 1/2)
/// otherwise. `twist=0` gives the constant-projection family.
fn build_ex31(uniform: bool, params: &Params) -> Result<BuiltExample> {
    let dim = 3;
    let kappa = params.get("twist", 1.0);
    let lam = |t: f64| -t / 3.0;
    let alp = |t: f64| t * t;
    let mu = move |t: f64| {
        if uniform {
            lam(t) - 1.0
        } else {
            lam(t) - (t - 0.5).abs()
        }
    };
    let nil = jordan_nilpotent(2);
    let nil2 = nil.clone();
    let base = Arc::new(move |t: f64| {
        let b1 = CMat::identity(2).scale_re(lam(t));
        let b1 = &b1 + &nil2.scale_re(alp(t));
        let mut m = CMat::block_diag(&[&b1, &CMat::diag(&[c64(mu(t), 0.0)])]);
        let _ = &mut m;
        m
    });
    let nil3 = nil.clone();
    let base_deriv = Arc::new(move |t: f64| {
        let dlam = -1.0 / 3.0;
        let dalp = 2.0 * t;
        let dmu = if uniform {
            dlam
        } else {
            dlam - if t >= 0.5 { 1.0 } else { -1.0 }
        };
        let b1 = &CMat::identity(2).scale_re(dlam) + &nil3.scale_re(dalp);
        CMat::block_diag(&[&b1, &CMat::diag(&[c64(dmu, 0.0)])])
    });
    let rot = plane_rotation(dim, unit_vector(dim, 1), unit_vector(dim, 2), kappa);
    let twist = plane_rotation_generator(dim, &unit_vector(dim, 1), &unit_vector(dim, 2), kappa);
    let p0 = CMat::diag(&[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
    let kinks = if uniform { vec![] } else { vec![0.5] };
    let meta = FamilyMeta {
        lambda: Some(Curve::real(lam)),
        alpha: Some(RealCurve::new(alp)),
        m0: Some(2),
        t_end: 1.0,
        ..FamilyMeta::default()
    };
    let (family, projection) =
        assemble(if uniform { "ex3-1u" } else { "ex3-1" }, dim, base, base_deriv, rot, twist, p0, kinks, meta);
    Ok(BuiltExample {
        label: if uniform { "ex3-1u" } else { "ex3-1" }.to_string(),
        family,
        projection,
        lambda: Curve::real(lam),
        cycle_center: Some(Curve::real(lam)),
        cycle_radius: Some(if uniform { 0.45 } else { 0.2 }),
        claim: if uniform {
            "uniform spectral gap: sup_t ||U_eps - V_eps|| = O(eps)"
        } else {
            "gap closes once at t = 1/2: sup_t ||U_eps - V_eps|| -> 0 without a rate"
        },
    })
}

/// Discretized Volterra example: diag(-V_d, a(t) + M_f) on a 2d-dimensional
/// space, block-rotated. V_d is the midpoint-rule discretization of
/// (Vf)(x) = ∫₀ˣ f — the 1/(2d) diagonal keeps -V_d dissipative like the
/// continuum operator, at the price of moving σ(-V_d) from {0} to
/// {-1/(2d)} (the registered λ-curve; it drifts to 0 as d grows). M_f
/// multiplies by d values filling [-1, 0] and a(t) = -|t - 1/2| closes the
/// gap near t = 1/2. In the continuum σ(t) = {0} is an essential
/// singularity of the resolvent.
fn build_ex32(params: &Params) -> Result<BuiltExample> {
    let d = params.get_usize("d", 10);
    require(d >= MIN_TRUNCATION, "truncation size below minimum (4)")?;
    let dim = 2 * d;
    let kappa = params.get("twist", 1.0);
    let lam_v = -0.5 / d as f64;
    let volterra = {
        let mut v = CMat::zeros(d);
        for i in 0..d {
            for j in 0..i {
                v[(i, j)] = c64(1.0 / d as f64, 0.0);
            }
            v[(i, i)] = c64(0.5 / d as f64, 0.0);
        }
        v
    };
    let fvals: Vec<f64> = (0..d).map(|j| -(j as f64) / (d as f64 - 1.0)).collect();
    let a_curve = |t: f64| -(t - 0.5).abs();
    let neg_v = volterra.scale_re(-1.0);
    let f_diag = CMat::diag(&fvals.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>());
    let f_diag2 = f_diag.clone();
    let base = Arc::new(move |t: f64| {
        let b2 = f_diag2.shift(c64(a_curve(t), 0.0));
        CMat::block_diag(&[&neg_v, &b2])
    });
    let base_deriv = Arc::new(move |t: f64| {
        let da = if t >= 0.5 { -1.0 } else { 1.0 };
        let b2 = CMat::identity(d).scale_re(da);
        CMat::block_diag(&[&CMat::zeros(d), &b2])
    });
    // block rotation mixing the two factors: u, v spread uniformly so every
    // coordinate participates
    let u: Vec<f64> = (0..dim).map(|i| if i < d { 1.0 / (d as f64).sqrt() } else { 0.0 }).collect();
    let v: Vec<f64> = (0..dim).map(|i| if i >= d { 1.0 / (d as f64).sqrt() } else { 0.0 }).collect();
    let rot = plane_rotation(dim, u.clone(), v.clone(), kappa);
    let twist = plane_rotation_generator(dim, &u, &v, kappa);
    let mut p0 = CMat::zeros(dim);
    for i in 0..d {
        p0[(i, i)] = c64(1.0, 0.0);
    }
    let meta = FamilyMeta {
        lambda: Some(Curve::constant(c64(lam_v, 0.0))),
        m0: Some(d),
        t_end: 1.0,
        ..FamilyMeta::default()
    };
    let (family, projection) =
        assemble("ex3-2", dim, base, base_deriv, rot, twist, p0, vec![0.5], meta);
    Ok(BuiltExample {
        label: "ex3-2".to_string(),
        family,
        projection,
        lambda: Curve::constant(c64(lam_v, 0.0)),
        cycle_center: Some(Curve::constant(c64(lam_v, 0.0))),
        cycle_radius: None,
        claim: "Volterra block, non-uniform gap: sup_t ||U_eps - V_eps|| -> 0",
    })
}

/// The rotating positive 2×2 family A(t) = λ(t) R(t)⁻¹ diag(1,0) R(t) with
/// R(t) the rotation by 2πt and λ(t) = t ≥ 0. Not (M,0)-stable — the
/// adiabatic theorem fails: ⟨e₁, U_ε(1/4) e₁⟩ ≥ 1 + (1/ε)∫₀^{1/4} λ cos²(2πτ) dτ.
fn build_ex33(params: &Params) -> Result<BuiltExample> {
    let dim = 2;
    let slope = params.get("lambda_slope", 1.0);
    let lam = move |t: f64| slope * t;
    let base = Arc::new(move |t: f64| CMat::diag(&[c64(lam(t), 0.0), c64(0.0, 0.0)]));
    let base_deriv = Arc::new(move |_t: f64| CMat::diag(&[c64(slope, 0.0), c64(0.0, 0.0)]));
    let rate = 2.0 * core::f64::consts::PI;
    let rot = plane_rotation(dim, unit_vector(dim, 0), unit_vector(dim, 1), rate);
    let twist = plane_rotation_generator(dim, &unit_vector(dim, 0), &unit_vector(dim, 1), rate);
    let p0 = CMat::diag(&[c64(1.0, 0.0), c64(0.0, 0.0)]);
    let meta = FamilyMeta {
        lambda: Some(Curve::real(lam)),
        alpha: Some(RealCurve::constant(0.0)),
        m0: Some(1),
        t_end: 0.25,
        ..FamilyMeta::default()
    };
    let (family, projection) =
        assemble("ex3-3", dim, base, base_deriv, rot, twist, p0, vec![], meta);
    Ok(BuiltExample {
        label: "ex3-3".to_string(),
        family,
        projection,
        lambda: Curve::real(lam),
        cycle_center: Some(Curve::real(lam)),
        cycle_radius: None,
        claim: "positive rotating family, not (M,0)-stable: transitions do not vanish",
    })
}

/// Joye's 3×3 example: A₀ = [[0,i,0],[0,0,0],[0,0,i]] (nilpotent Jordan part
/// at the eigenvalue 0 on the imaginary axis), C = [[0,0,0],[ik,0,k],[1,-1,0]]
/// for a parameter k < 0, P₀ the orthogonal projection onto span{e₁,e₂}.
/// The family is not (M,0)-stable and the adiabatic theorem fails.
fn build_joye(params: &Params) -> Result<BuiltExample> {
    let dim = 3;
    let k = params.get("k", -1.0);
    let a0 = CMat::from_rows(&[
        &[c64(0.0, 0.0), c64(0.0, 1.0), c64(0.0, 0.0)],
        &[c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)],
        &[c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 1.0)],
    ]);
    let twist = CMat::from_rows(&[
        &[c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)],
        &[c64(0.0, k), c64(0.0, 0.0), c64(k, 0.0)],
        &[c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 0.0)],
    ]);
    let a0c = a0.clone();
    let base = Arc::new(move |_t: f64| a0c.clone());
    let base_deriv = Arc::new(move |_t: f64| CMat::zeros(3));
    let rot = generic_rotation(twist.clone());
    let p0 = CMat::diag(&[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
    let meta = FamilyMeta {
        lambda: Some(Curve::constant(c64(0.0, 0.0))),
        m0: Some(2),
        t_end: 1.0,
        constant_base: Some(a0),
        ..FamilyMeta::default()
    };
    let (family, projection) =
        assemble("ex-joye", dim, base, base_deriv, rot, twist, p0, vec![], meta);
    Ok(BuiltExample {
        label: "ex-joye".to_string(),
        family,
        projection,
        lambda: Curve::constant(c64(0.0, 0.0)),
        cycle_center: Some(Curve::constant(c64(0.0, 0.0))),
        cycle_radius: Some(0.45),
        claim: "non-diagonalizable, not (M,0)-stable: transition amplitude stays bounded away from 0",
    })
}

/// Gap-free example with a non-semisimple eigenvalue: 2×2 Jordan block
/// λ(t) + α(t)N alongside a diagonal tail filling [-1,0] by a fixed
/// low-discrepancy sequence (truncation of the enumeration of [-1,0] ∩ ℚ),
/// twisted by the truncated right shift. λ(t) = -1/8 - t/4 sweeps through
/// the tail values; the probing ray points straight up (θ = π/2).
fn build_ex45(params: &Params) -> Result<BuiltExample> {
    let d = params.get_usize("d", 16);
    require(d >= MIN_TRUNCATION, "truncation size below minimum (4)")?;
    let dim = d;
    let lam = |t: f64| -0.125 - 0.25 * t;
    let alp = |t: f64| 0.5 * (1.0 + t);
    let tail = low_discrepancy_in_minus_one_zero(d - 2);
    let nil = jordan_nilpotent(2);
    let tail_diag = CMat::diag(&tail.iter().map(|&x| c64(x, 0.0)).collect::<Vec<_>>());
    let nil2 = nil.clone();
    let tail2 = tail_diag.clone();
    let base = Arc::new(move |t: f64| {
        let b1 = &CMat::identity(2).scale_re(lam(t)) + &nil2.scale_re(alp(t));
        CMat::block_diag(&[&b1, &tail2])
    });
    let nil3 = nil.clone();
    let base_deriv = Arc::new(move |_t: f64| {
        let b1 = &CMat::identity(2).scale_re(-0.25) + &nil3.scale_re(0.5);
        CMat::block_diag(&[&b1, &CMat::zeros(d - 2)])
    });
    let rot = shift_rotation(dim);
    let twist = subdiagonal_shift(dim);
    let mut p0 = CMat::zeros(dim);
    p0[(0, 0)] = c64(1.0, 0.0);
    p0[(1, 1)] = c64(1.0, 0.0);
    let meta = FamilyMeta {
        lambda: Some(Curve::real(lam)),
        alpha: Some(RealCurve::new(alp)),
        theta: Some(Curve::constant(c64(core::f64::consts::FRAC_PI_2, 0.0))),
        m0: Some(2),
        t_end: 1.0,
        ..FamilyMeta::default()
    };
    let (family, projection) =
        assemble("ex4-5", dim, base, base_deriv, rot, twist, p0, vec![], meta);
    Ok(BuiltExample {
        label: "ex4-5".to_string(),
        family,
        projection,
        lambda: Curve::real(lam),
        cycle_center: Some(Curve::real(lam)),
        cycle_radius: None,
        claim: "gap-free, weakly 2-associated eigenvalue: (U_eps - V0_eps)P(0) -> 0",
    })
}

/// Gap-free example on the boundary of the right-shift spectrum:
/// diag(λ(t) + α(t)N, S₊ - 1) with λ(t) = -1 + e^{iθ(t)} on ∂U₁(-1), the
/// twist rotating the last Jordan coordinate into the first shift
/// coordinate. The contraction resolvent gives the ray bound
/// ‖(λ+δe^{iθ}-A)⁻¹(1-P)‖ ≤ 1/δ. Works only for p ≠ 1 in the continuum;
/// the truncated shift is nilpotent, so the desk-scale model is gapped —
/// run across d and watch the drift.
fn build_ex46(params: &Params) -> Result<BuiltExample> {
    let d = params.get_usize("d", 16);
    require(d >= MIN_TRUNCATION, "truncation size below minimum (4)")?;
    let dim = 2 + d;
    let theta = |t: f64| core::f64::consts::FRAC_PI_2 + 0.5 * t;
    let lam = move |t: f64| {
        let th = theta(t);
        c64(-1.0 + th.cos(), th.sin())
    };
    let alp = |_t: f64| 1.0;
    let nil = jordan_nilpotent(2);
    let shift_minus_one = {
        let mut m = subdiagonal_shift(d);
        for i in 0..d {
            m[(i, i)] = c64(-1.0, 0.0);
        }
        m
    };
    let nil2 = nil.clone();
    let sm = shift_minus_one.clone();
    let base = Arc::new(move |t: f64| {
        let l = lam(t);
        let b1 = &CMat::diag(&[l, l]) + &nil2.scale_re(alp(t));
        CMat::block_diag(&[&b1, &sm])
    });
    let base_deriv = Arc::new(move |t: f64| {
        let th = theta(t);
        // dλ/dt = i θ'(t) e^{iθ} with θ' = 1/2
        let dl = c64(-0.5 * th.sin(), 0.5 * th.cos());
        let b1 = CMat::diag(&[dl, dl]);
        CMat::block_diag(&[&b1, &CMat::zeros(d)])
    });
    let rot = plane_rotation(dim, unit_vector(dim, 1), unit_vector(dim, 2), 1.0);
    let twist = plane_rotation_generator(dim, &unit_vector(dim, 1), &unit_vector(dim, 2), 1.0);
    let mut p0 = CMat::zeros(dim);
    p0[(0, 0)] = c64(1.0, 0.0);
    p0[(1, 1)] = c64(1.0, 0.0);
    let meta = FamilyMeta {
        lambda: Some(Curve::new(lam)),
        alpha: Some(RealCurve::new(alp)),
        theta: Some(Curve::real(theta)),
        m0: Some(2),
        t_end: 1.0,
        ..FamilyMeta::default()
    };
    let (family, projection) =
        assemble("ex4-6", dim, base, base_deriv, rot, twist, p0, vec![], meta);
    Ok(BuiltExample {
        label: "ex4-6".to_string(),
        family,
        projection,
        lambda: Curve::new(lam),
        cycle_center: Some(Curve::new(lam)),
        cycle_radius: None,
        claim: "spectral value on the shift boundary: (U_eps - V0_eps)P(0) -> 0, ray bound <= 1",
    })
}

/// Travelling multiplication family A(t) = M_{f₀(·+t)} with f₀ purely
/// imaginary and compactly supported, discretized on a grid over [-2, 2].
/// P(t) multiplies by the indicator of {f₀(·+t) = 0}; it is not
/// SOT-continuously differentiable and the adiabatic conclusion fails:
/// the combined transition norm equals ‖P(t)g - P(0)g‖ independently of ε.
fn build_ex47(params: &Params) -> Result<BuiltExample> {
    let d = params.get_usize("d", 101);
    require(d >= MIN_TRUNCATION, "truncation size below minimum (4)")?;
    let xs: Vec<f64> = (0..d).map(|j| -2.0 + 4.0 * j as f64 / (d - 1) as f64).collect();
    let bump = |x: f64| {
        if x.abs() < 1.0 {
            let w = 1.0 - x * x;
            w * w
        } else {
            0.0
        }
    };
    let bump_deriv = |x: f64| {
        if x.abs() < 1.0 {
            -4.0 * x * (1.0 - x * x)
        } else {
            0.0
        }
    };
    let xs2 = xs.clone();
    let eval = move |t: f64| {
        CMat::diag(&xs2.iter().map(|&x| c64(0.0, bump(x + t))).collect::<Vec<_>>())
    };
    let xs3 = xs.clone();
    let deriv = move |t: f64| {
        CMat::diag(&xs3.iter().map(|&x| c64(0.0, bump_deriv(x + t))).collect::<Vec<_>>())
    };
    // support edges crossing grid points are curvature kinks of t ↦ A(t)
    let mut kinks: Vec<f64> = Vec::new();
    for &x in &xs {
        for edge in [1.0 - x, -1.0 - x] {
            if edge > 0.0 && edge < 1.0 {
                kinks.push(edge);
            }
        }
    }
    kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    kinks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut family = OperatorFamily::new(d, eval, Some(Arc::new(deriv)), kinks);
    family.meta = FamilyMeta {
        label: "ex4-7".to_string(),
        lambda: Some(Curve::constant(c64(0.0, 0.0))),
        m0: Some(1),
        t_end: 1.0,
        ..FamilyMeta::default()
    };
    let xs4 = xs.clone();
    let proj_eval = move |t: f64| {
        CMat::diag(
            &xs4.iter()
                .map(|&x| if bump(x + t) == 0.0 { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
                .collect::<Vec<_>>(),
        )
    };
    let zero = CMat::zeros(d);
    let projection = ProjectionFamily::new(
        d,
        proj_eval,
        move |_t| zero.clone(),
        super::Provenance::NumericDiff,
    );
    Ok(BuiltExample {
        label: "ex4-7".to_string(),
        family,
        projection,
        lambda: Curve::constant(c64(0.0, 0.0)),
        cycle_center: None,
        cycle_radius: None,
        claim: "projection not SOT-C¹: transition norm is exactly ε-independent",
    })
}

/// Analytic, uniformly gapped 3×3 family for the superadiabatic iteration:
/// A₀ = diag(0, i, -i) (gap 1 between σ(t) = {0} and the rest), mildly
/// non-normal constant twist.
fn build_superad(params: &Params) -> Result<BuiltExample> {
    let dim = 3;
    let scale = params.get("twist", 1.0);
    let a0 = CMat::diag(&[c64(0.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0)]);
    // genuinely complex, mildly non-normal twist (no conjugation symmetry:
    // symmetric cases make even-order superadiabatic corrections
    // accidentally small, which masks the K-telescoping orders)
    let twist = CMat::from_rows(&[
        &[c64(0.0, 0.0), c64(0.7 * scale, 0.2 * scale), c64(0.5 * scale, -0.15 * scale)],
        &[c64(-0.7 * scale, 0.2 * scale), c64(0.0, 0.0), c64(0.6 * scale, 0.1 * scale)],
        &[c64(-0.2 * scale, 0.0), c64(-0.6 * scale, 0.1 * scale), c64(0.0, 0.0)],
    ]);
    let a0c = a0.clone();
    let base = Arc::new(move |_t: f64| a0c.clone());
    let base_deriv = Arc::new(move |_t: f64| CMat::zeros(3));
    let rot = generic_rotation(twist.clone());
    let p0 = CMat::diag(&[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)]);
    let meta = FamilyMeta {
        lambda: Some(Curve::constant(c64(0.0, 0.0))),
        m0: Some(1),
        t_end: 1.0,
        constant_base: Some(a0),
        ..FamilyMeta::default()
    };
    let (family, projection) =
        assemble("ex-superad", dim, base, base_deriv, rot, twist, p0, vec![], meta);
    Ok(BuiltExample {
        label: "ex-superad".to_string(),
        family,
        projection,
        lambda: Curve::constant(c64(0.0, 0.0)),
        cycle_center: Some(Curve::constant(c64(0.0, 0.0))),
        cycle_radius: Some(0.45),
        claim: "analytic gapped family: superadiabatic orders K_n - K_{n-1} = O(eps^n)",
    })
}

/// Diagonal model for the Hölder-continuous spectral measure bound:
/// A₀ = i·diag(0, μ₁, …, μ_{d-1}) with μ_j = -1 + (2j-1)/(d-1) filling
/// [-1, 1] at uniform density (Hölder exponent α = 1 near λ ≡ 0), the twist
/// rotating the eigenvector of 0 into the flat unit vector of the continuum
/// block. Probing ray points left (θ = π).
fn build_hoelder(params: &Params) -> Result<BuiltExample> {
    let d = params.get_usize("d", 64);
    require(d >= MIN_TRUNCATION, "truncation size below minimum (4)")?;
    require(d % 2 == 0, "hoelder model needs even d (keeps 0 out of the tail)")?;
    let dim = d;
    let rate = params.get("twist", core::f64::consts::FRAC_PI_4);
    let mut evs = vec![0.0f64];
    for j in 1..d {
        evs.push(-1.0 + (2.0 * j as f64 - 1.0) / (d as f64 - 1.0));
    }
    let a0 = CMat::diag(&evs.iter().map(|&x| c64(0.0, x)).collect::<Vec<_>>());
    let u = unit_vector(dim, 0);
    let w: Vec<f64> = (0..dim)
        .map(|i| if i == 0 { 0.0 } else { 1.0 / ((dim - 1) as f64).sqrt() })
        .collect();
    let rot = plane_rotation(dim, u.clone(), w.clone(), rate);
    let twist = plane_rotation_generator(dim, &u, &w, rate);
    let a0c = a0.clone();
    let base = Arc::new(move |_t: f64| a0c.clone());
    let base_deriv = Arc::new(move |_t: f64| CMat::zeros(dim));
    let mut p0 = CMat::zeros(dim);
    p0[(0, 0)] = c64(1.0, 0.0);
    let meta = FamilyMeta {
        lambda: Some(Curve::constant(c64(0.0, 0.0))),
        theta: Some(Curve::constant(c64(core::f64::consts::PI, 0.0))),
        m0: Some(1),
        t_end: 1.0,
        constant_base: Some(a0),
        ..FamilyMeta::default()
    };
    let (family, projection) =
        assemble("ex-hoelder", dim, base, base_deriv, rot, twist, p0, vec![], meta);
    Ok(BuiltExample {
        label: "ex-hoelder".to_string(),
        family,
        projection,
        lambda: Curve::constant(c64(0.0, 0.0)),
        cycle_center: None,
        cycle_radius: None,
        claim: "uniform spectral density at λ = 0 (α = 1): ||U_eps - V_eps|| <= c eps^{α/(2(1+α))}",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{derivative_consistency, uniform_grid};

    fn check_similarity_invariants(label: &str) {
        let ex = build_standard_example(label, &Params::new()).unwrap();
        let grid = uniform_grid(0.0, 1.0, 17);
        // projection family is idempotent with P P' P = 0
        let (idem, ppp) = ex.projection.validate(&grid);
        assert!(idem < 1e-8, "{label}: idempotency {idem}");
        assert!(ppp < 1e-7, "{label}: PP'P {ppp}");
        // A(t) commutes with P(t) (block-diagonal construction)
        for &t in &grid {
            let a = ex.family.eval(t);
            let p = ex.projection.eval(t);
            let comm = CMat::commutator(&a, &p).norm();
            assert!(comm < 1e-10, "{label}: [A,P] = {comm} at t = {t}");
        }
    }

    #[test]
    fn gallery_builds_and_commutes() {
        for label in registered_labels() {
            if *label == "ex4-7" {
                continue; // P is not similarity-built there
            }
            check_similarity_invariants(label);
        }
    }

    #[test]
    fn unknown_label_rejected() {
        assert!(matches!(
            build_standard_example("ex-nope", &Params::new()),
            Err(Error::UnknownExample)
        ));
    }

    #[test]
    fn truncation_minimum_enforced() {
        let mut p = Params::new();
        p.set("d", 2.0);
        assert!(matches!(
            build_standard_example("ex4-5", &p),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn ex33_matches_paper_closed_form() {
        // A(t) = λ(t) [[cos², cos·sin],[cos·sin, sin²]](2πt) with λ(t) = t
        let ex = build_standard_example("ex3-3", &Params::new()).unwrap();
        for &t in &[0.1, 0.2, 0.25] {
            let a = ex.family.eval(t);
            let th = 2.0 * core::f64::consts::PI * t;
            let (s, c) = th.sin_cos();
            let expect = CMat::from_rows(&[
                &[c64(t * c * c, 0.0), c64(t * c * s, 0.0)],
                &[c64(t * c * s, 0.0), c64(t * s * s, 0.0)],
            ]);
            assert!((&a - &expect).max_abs() < 1e-12, "t = {t}");
        }
        // 1 - P(1/4) equals P0 (the paper's pivot of the lower-bound argument)
        let p = ex.projection.eval(0.25);
        let one_minus_p = &CMat::identity(2) - &p;
        let p0 = CMat::diag(&[c64(1.0, 0.0), c64(0.0, 0.0)]);
        assert!((&one_minus_p - &p0).max_abs() < 1e-12);
    }

    #[test]
    fn ex31_zero_twist_has_constant_projection() {
        let mut p = Params::new();
        p.set("twist", 0.0);
        let ex = build_standard_example("ex3-1", &p).unwrap();
        let p0 = ex.projection.eval(0.0);
        for &t in &[0.3, 0.7, 1.0] {
            assert!((&ex.projection.eval(t) - &p0).max_abs() < 1e-14);
            assert!(ex.projection.deriv(t).max_abs() < 1e-14);
        }
    }

    #[test]
    fn joye_matches_paper_data() {
        let ex = build_standard_example("ex-joye", &Params::from_pairs(&[("k", -1.0)])).unwrap();
        let a0 = ex.family.meta.constant_base.clone().unwrap();
        assert_eq!(a0[(0, 1)], c64(0.0, 1.0));
        assert_eq!(a0[(2, 2)], c64(0.0, 1.0));
        let c = ex.family.meta.twist.clone().unwrap();
        assert_eq!(c[(1, 0)], c64(0.0, -1.0)); // ik with k = -1
        assert_eq!(c[(1, 2)], c64(-1.0, 0.0));
        assert_eq!(c[(2, 0)], c64(1.0, 0.0));
        assert_eq!(c[(2, 1)], c64(-1.0, 0.0));
    }

    #[test]
    fn analytic_derivatives_consistent() {
        for label in ["ex3-1u", "ex3-3", "ex-joye", "ex4-5", "ex4-6", "ex-superad"] {
            let ex = build_standard_example(label, &Params::new()).unwrap();
            let defect =
                derivative_consistency(&ex.family, &uniform_grid(0.05, 0.95, 7), 2e-5);
            assert!(defect < 1e-6, "{label}: derivative defect {defect}");
        }
    }

    #[test]
    fn shift_rotation_matches_expm() {
        let dim = 6;
        let c = subdiagonal_shift(dim);
        let rot = shift_rotation(dim);
        let (r, rinv) = rot(0.7);
        let e = crate::mat::mat_exp(&c.scale_re(0.7)).unwrap();
        assert!((&r - &e).max_abs() < 1e-13);
        assert!((&(&r * &rinv) - &CMat::identity(dim)).max_abs() < 1e-13);
    }

    #[test]
    fn low_discrepancy_values_in_range() {
        let v = low_discrepancy_in_minus_one_zero(50);
        assert_eq!(v.len(), 50);
        for &x in &v {
            assert!(x > -1.0 && x < 0.0);
        }
        // nested prefixes: first terms are independent of the requested length
        let w = low_discrepancy_in_minus_one_zero(10);
        for k in 0..10 {
            assert_eq!(v[k], w[k]);
        }
    }
}

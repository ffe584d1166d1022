//! ε sweeps: run a metric over a geometric ε grid, mask saturated points,
//! fit the log-log rate.
//!
//! Integrator tolerance per point follows
//! `tol_step = min(1e-10, 1e-3 · expected_metric)` (clamped below at 1e-13):
//! a first pass measures every point at 1e-10, then points whose value came
//! out below 1e-7 are re-run at the tightened tolerance so the floor never
//! contaminates the fit.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use adiab_core::adiabatic::{
    adiabatic_evolution, projected_evolution, superadiabatic_iterate, transition_amplitude,
    SuperadiabaticOpts,
};
use adiab_core::evolution::closed_form::{transfer_difference_norm, RotatingFrame};
use adiab_core::evolution::{propagate, GeneratorFamily, PropagateOpts, Propagator};
use adiab_core::family::{build_standard_example, BuiltExample, Params};
use adiab_core::mat::CMat;

use crate::report::{SweepReport, SCHEMA_VERSION};

/// Strictly decreasing geometric ε grid.
#[derive(Clone, Debug)]
pub struct EpsGrid(Vec<f64>);

impl EpsGrid {
    /// `2^hi` down to `2^lo` at ratio 2 (the default grid is `2^-3:2^-12`).
    pub fn two_pow_range(hi: i32, lo: i32) -> EpsGrid {
        assert!(hi >= lo);
        EpsGrid((lo..=hi).rev().map(|k| (2.0f64).powi(k)).collect())
    }

    /// Parse the CLI syntax `2^-3:2^-12`.
    pub fn parse(s: &str) -> Result<EpsGrid, String> {
        let parse_pow = |tok: &str| -> Result<i32, String> {
            tok.strip_prefix("2^")
                .ok_or_else(|| format!("expected 2^<exp>, got {tok}"))?
                .parse::<i32>()
                .map_err(|e| format!("bad exponent in {tok}: {e}"))
        };
        let mut it = s.split(':');
        let a = parse_pow(it.next().ok_or("empty eps spec")?)?;
        let b = parse_pow(it.next().ok_or("eps spec needs start:end")?)?;
        if it.next().is_some() {
            return Err("eps spec is start:end".into());
        }
        Ok(EpsGrid::two_pow_range(a.max(b), a.min(b)))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for EpsGrid {
    fn default() -> Self {
        EpsGrid::two_pow_range(-3, -12)
    }
}

/// Metrics the harness can sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// `sup_t ‖U_ε(t) - V_ε(t)‖`
    UvGap,
    /// `sup_t ‖(U_ε(t) - V₀ε(t)) P(0)‖`
    Uv0Gap,
    /// `sup_t ‖(1-P(t)) U_ε(t) P(0)‖`
    Transition,
    /// `sup_t ‖(1-P_{n,ε}(t)) U_ε(t) P_{n,ε}(0)‖`
    SuperadTransition(usize),
    /// `sup_t ‖K_{n,ε}(t) - K_{n-1,ε}(t)‖`
    KTelescope(usize),
    /// `sup_t ‖P_{n,ε}(t) - P(t)‖` (level n = 1)
    PEpsGap,
}

impl Metric {
    pub fn parse(s: &str) -> Result<Metric, String> {
        let level = |s: &str, prefix: &str| -> Result<usize, String> {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| format!("expected {prefix}(n)"))?
                .parse::<usize>()
                .map_err(|e| format!("bad level: {e}"))
        };
        match s {
            "uv-gap" => Ok(Metric::UvGap),
            "uv0-gap" => Ok(Metric::Uv0Gap),
            "transition" => Ok(Metric::Transition),
            "p-eps-gap" => Ok(Metric::PEpsGap),
            _ if s.starts_with("superad-transition") => {
                Ok(Metric::SuperadTransition(level(s, "superad-transition")?))
            }
            _ if s.starts_with("k-telescope") => Ok(Metric::KTelescope(level(s, "k-telescope")?)),
            _ => Err(format!("unknown metric {s}")),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Metric::UvGap => "uv-gap".into(),
            Metric::Uv0Gap => "uv0-gap".into(),
            Metric::Transition => "transition".into(),
            Metric::SuperadTransition(n) => format!("superad-transition({n})"),
            Metric::KTelescope(n) => format!("k-telescope({n})"),
            Metric::PEpsGap => "p-eps-gap".into(),
        }
    }
}

const TOL_CAP: f64 = 1e-10;
const TOL_MIN: f64 = 1e-13;
const SATURATION_FACTOR: f64 = 50.0;
/// Dimension above which constant-base families use the exact
/// rotating-frame propagator instead of the adaptive integrator.
const CLOSED_FORM_DIM: usize = 16;

fn spec_tolerance(expected_metric: f64) -> f64 {
    (1e-3 * expected_metric).min(TOL_CAP).max(TOL_MIN)
}

/// Result of one metric evaluation: (value, error floor).
type PointResult = Result<(f64, f64), String>;

fn lockstep_sup<F: FnMut(&CMat, &CMat, f64) -> f64>(
    u: &Propagator,
    v: &Propagator,
    mut f: F,
) -> f64 {
    assert_eq!(u.grid().len(), v.grid().len(), "propagator grids must agree");
    let mut cum_u = CMat::identity(u.dim());
    let mut cum_v = CMat::identity(v.dim());
    let mut sup = f(&cum_u, &cum_v, u.grid()[0]);
    for j in 0..u.grid().len() - 1 {
        cum_u = u.step(j) * &cum_u;
        cum_v = v.step(j) * &cum_v;
        sup = sup.max(f(&cum_u, &cum_v, u.grid()[j + 1]));
    }
    sup
}

fn uv_gap_closed_form(ex: &BuiltExample, eps: f64) -> PointResult {
    let a0 = ex.family.meta.constant_base.clone().expect("constant base");
    let c = ex.family.meta.twist.clone().expect("twist");
    let rot = ex.family.meta.rot.clone().expect("rotation closure");
    let p0 = ex.projection.eval(0.0);
    let k0 = CMat::commutator(&CMat::commutator(&p0, &c), &p0);
    let m_u = &a0.scale_re(1.0 / eps) + &c;
    let m_v = &m_u + &k0;
    let u = RotatingFrame::new(m_u, rot.clone()).map_err(|e| e.to_string())?;
    let v = RotatingFrame::new(m_v, rot).map_err(|e| e.to_string())?;
    let t_end = ex.family.meta.t_end;
    let grid = adiab_core::family::output_grid(t_end);
    let mut sup = 0.0f64;
    for &t in &grid {
        let d = transfer_difference_norm(&u, &v, t, 0.0).map_err(|e| e.to_string())?;
        sup = sup.max(d);
    }
    // exact propagation: floor is the eigendecomposition/rounding residue
    Ok((sup, 1e-11))
}

fn eval_point(ex: &BuiltExample, metric: Metric, eps: f64, tol_step: f64) -> PointResult {
    let opts = PropagateOpts::default();
    let t_end = ex.family.meta.t_end;
    let a = &ex.family;
    let p = &ex.projection;
    match metric {
        Metric::UvGap => {
            if a.meta.constant_base.is_some() && a.meta.rot.is_some() && a.dim() > CLOSED_FORM_DIM
            {
                return uv_gap_closed_form(ex, eps);
            }
            let u = propagate(
                &GeneratorFamily::scaled_operator(a, 1.0 / eps),
                eps,
                0.0,
                t_end,
                tol_step,
                &opts,
            )
            .map_err(|e| e.to_string())?;
            let v = adiabatic_evolution(a, p, eps, tol_step, &opts).map_err(|e| e.to_string())?;
            let sup = lockstep_sup(&u, &v, |cu, cv, _| (cu - cv).norm());
            let floor = u.global_error_estimate().max(v.global_error_estimate());
            Ok((sup, floor))
        }
        Metric::Uv0Gap => {
            let m0 = a.meta.m0.unwrap_or(1);
            let u = propagate(
                &GeneratorFamily::scaled_operator(a, 1.0 / eps),
                eps,
                0.0,
                t_end,
                tol_step,
                &opts,
            )
            .map_err(|e| e.to_string())?;
            let v0 = projected_evolution(a, p, &ex.lambda, m0, eps, tol_step, &opts)
                .map_err(|e| e.to_string())?;
            let p0 = p.eval(0.0);
            let sup = lockstep_sup(&u, &v0, |cu, cv, _| (&(cu - cv) * &p0).norm());
            let floor = u.global_error_estimate().max(v0.global_error_estimate());
            Ok((sup, floor))
        }
        Metric::Transition => {
            let u = propagate(
                &GeneratorFamily::scaled_operator(a, 1.0 / eps),
                eps,
                0.0,
                t_end,
                tol_step,
                &opts,
            )
            .map_err(|e| e.to_string())?;
            let tr = transition_amplitude(&u, p);
            let floor = u.global_error_estimate();
            Ok((tr.escape, floor))
        }
        Metric::SuperadTransition(n) => {
            let center = ex.cycle_center.clone().ok_or("example has no registered cycle")?;
            let radius = ex.cycle_radius.ok_or("example has no registered cycle radius")?;
            let state = superadiabatic_iterate(
                a,
                &center,
                radius,
                eps,
                n,
                &[0.5],
                &SuperadiabaticOpts::default(),
            )
            .map_err(|e| e.to_string())?;
            let u = propagate(
                &GeneratorFamily::scaled_operator(a, 1.0 / eps),
                eps,
                0.0,
                t_end,
                tol_step,
                &opts,
            )
            .map_err(|e| e.to_string())?;
            let pn0 = state.p_at(n, 0.0).map_err(|e| e.to_string())?;
            let id = CMat::identity(a.dim());
            let mut sup = 0.0f64;
            let mut err: Option<String> = None;
            u.scan(|_, t, cum| {
                if err.is_some() {
                    return;
                }
                match state.p_at(n, t) {
                    Ok(pnt) => {
                        let q = &id - &pnt;
                        sup = sup.max((&(&q * cum) * &pn0).norm());
                    }
                    Err(e) => err = Some(e.to_string()),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            // Riesz-path Richardson derivatives limit the projector accuracy
            let floor = u.global_error_estimate().max(1e-9);
            Ok((sup, floor))
        }
        Metric::KTelescope(n) => {
            let center = ex.cycle_center.clone().ok_or("example has no registered cycle")?;
            let radius = ex.cycle_radius.ok_or("example has no registered cycle radius")?;
            let grid = adiab_core::family::uniform_grid(0.0, t_end, 33);
            let state = superadiabatic_iterate(
                a,
                &center,
                radius,
                eps,
                n,
                &grid,
                &SuperadiabaticOpts::default(),
            )
            .map_err(|e| e.to_string())?;
            Ok((state.k_diffs[n - 1], 1e-8))
        }
        Metric::PEpsGap => {
            let center = ex.cycle_center.clone().ok_or("example has no registered cycle")?;
            let radius = ex.cycle_radius.ok_or("example has no registered cycle radius")?;
            let level = 1;
            let state = superadiabatic_iterate(
                a,
                &center,
                radius,
                eps,
                level,
                &[0.5],
                &SuperadiabaticOpts::default(),
            )
            .map_err(|e| e.to_string())?;
            let grid = adiab_core::family::output_grid(t_end);
            let mut sup = 0.0f64;
            for &t in &grid {
                let pe = state.p_at(level, t).map_err(|e| e.to_string())?;
                sup = sup.max((&pe - &p.eval(t)).norm());
            }
            Ok((sup, 1e-8))
        }
    }
}

/// Indices with `value < 50 × floor` (or failed runs): excluded from fits.
pub fn saturation_mask(values: &[f64], floors: &[f64]) -> Vec<usize> {
    values
        .iter()
        .zip(floors.iter())
        .enumerate()
        .filter(|(_, (v, f))| !v.is_finite() || **v < SATURATION_FACTOR * **f)
        .map(|(i, _)| i)
        .collect()
}

/// Run one metric sweep on a registered example.
pub fn run_sweep(
    label: &str,
    params: &Params,
    metric: Metric,
    eps_grid: &EpsGrid,
) -> Result<SweepReport, String> {
    let ex = build_standard_example(label, params).map_err(|e| e.to_string())?;
    let eps: Vec<f64> = eps_grid.values().to_vec();

    // first pass at the capped tolerance, then tighten where the metric is
    // small enough for the floor to matter
    let pool = crate::thread_pool();
    let first: Vec<(PointResult, u64)> = pool.install(|| {
        eps.par_iter()
            .map(|&e| {
                let t0 = Instant::now();
                let r = eval_point(&ex, metric, e, TOL_CAP);
                (r, t0.elapsed().as_millis() as u64)
            })
            .collect()
    });
    let results: Vec<(PointResult, u64)> = pool.install(|| {
        first
            .into_par_iter()
            .enumerate()
            .map(|(i, (r, ms))| match &r {
                Ok((v, _)) if *v < 1e-7 && *v > 0.0 => {
                    let tol = spec_tolerance(*v);
                    if tol < TOL_CAP {
                        let t0 = Instant::now();
                        let r2 = eval_point(&ex, metric, eps[i], tol);
                        (r2, ms + t0.elapsed().as_millis() as u64)
                    } else {
                        (r, ms)
                    }
                }
                _ => (r, ms),
            })
            .collect()
    });

    let mut value = Vec::with_capacity(eps.len());
    let mut floors = Vec::with_capacity(eps.len());
    let mut wallclock_ms = Vec::with_capacity(eps.len());
    let mut failures = Vec::new();
    for (i, (r, ms)) in results.into_iter().enumerate() {
        match r {
            Ok((v, f)) => {
                value.push(v);
                floors.push(f);
            }
            Err(msg) => {
                value.push(f64::NAN);
                floors.push(f64::INFINITY);
                failures.push((i, msg));
            }
        }
        wallclock_ms.push(ms);
    }
    let excluded = saturation_mask(&value, &floors);

    let mut tolerances = BTreeMap::new();
    tolerances.insert("tol_step_cap".to_string(), TOL_CAP);
    tolerances.insert("tol_step_min".to_string(), TOL_MIN);
    tolerances.insert("saturation_factor".to_string(), SATURATION_FACTOR);
    tolerances.insert("intertwining".to_string(), 1e-7);

    let mut report = SweepReport {
        schema_version: SCHEMA_VERSION,
        example: label.to_string(),
        params: params.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        metric: metric.name(),
        eps,
        value,
        slope: None,
        stderr: None,
        excluded,
        dims: vec![ex.family.dim()],
        tolerances,
        wallclock_ms,
        failures,
    };
    if let Ok(fit) = fit_rate(&report) {
        report.slope = Some(fit.slope);
        report.stderr = Some(fit.stderr);
    }
    Ok(report)
}

/// Least-squares line on (log ε, log metric).
#[derive(Clone, Copy, Debug)]
pub struct Fit {
    pub slope: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, thiserror::Error)]
#[error("rate fit rejected: {reason}")]
pub struct FitRejected {
    pub reason: String,
}

/// Fit the decay rate of a sweep over its unsaturated points. Rejects
/// saturated (< 4 points) or non-monotone data.
pub fn fit_rate(report: &SweepReport) -> Result<Fit, FitRejected> {
    let pts = report.unsaturated();
    if pts.len() < 4 {
        return Err(FitRejected {
            reason: format!("only {} unsaturated points (need 4)", pts.len()),
        });
    }
    // ε is decreasing: the metric of a convergent sweep should not rise
    let rises = pts
        .windows(2)
        .filter(|w| w[1].1 > w[0].1 * 1.05)
        .count();
    if 4 * rises > pts.len() {
        return Err(FitRejected {
            reason: format!("non-monotone data ({rises} rises over {} points)", pts.len()),
        });
    }
    let xs: Vec<f64> = pts.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys.iter()).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_res: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let stderr = if pts.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(Fit { slope, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_report(eps: Vec<f64>, value: Vec<f64>, floors: Vec<f64>) -> SweepReport {
        let excluded = saturation_mask(&value, &floors);
        SweepReport {
            schema_version: SCHEMA_VERSION,
            example: "synthetic".into(),
            params: BTreeMap::new(),
            metric: "uv-gap".into(),
            eps: eps.clone(),
            value,
            slope: None,
            stderr: None,
            excluded,
            dims: vec![2],
            tolerances: BTreeMap::new(),
            wallclock_ms: vec![0; eps.len()],
            failures: vec![],
        }
    }

    #[test]
    fn exact_power_law_slope_one() {
        let eps: Vec<f64> = (3..=12).map(|k| 2.0f64.powi(-k)).collect();
        let value = eps.clone();
        let floors = vec![1e-300; eps.len()];
        let rep = synthetic_report(eps, value, floors);
        let fit = fit_rate(&rep).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12, "slope {}", fit.slope);
        assert!(fit.stderr < 1e-12);
    }

    #[test]
    fn quadratic_with_floor_detected_after_exclusion() {
        let eps: Vec<f64> = (10..=24).map(|k| 2.0f64.powi(-k)).collect();
        let value: Vec<f64> = eps.iter().map(|e| e * e + 1e-14).collect();
        let floors = vec![2e-15; eps.len()];
        let rep = synthetic_report(eps, value, floors);
        assert!(!rep.excluded.is_empty(), "deep points must be floor-masked");
        let fit = fit_rate(&rep).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.01, "slope {}", fit.slope);
    }

    #[test]
    fn saturated_data_rejected() {
        let eps: Vec<f64> = (3..=12).map(|k| 2.0f64.powi(-k)).collect();
        let value = vec![1e-13; eps.len()];
        let floors = vec![1e-13; eps.len()];
        let rep = synthetic_report(eps, value, floors);
        assert!(fit_rate(&rep).is_err());
    }

    #[test]
    fn non_monotone_rejected() {
        let eps: Vec<f64> = (3..=10).map(|k| 2.0f64.powi(-k)).collect();
        let value: Vec<f64> = eps
            .iter()
            .enumerate()
            .map(|(i, e)| if i % 2 == 0 { *e } else { 10.0 * e })
            .collect();
        let floors = vec![1e-300; eps.len()];
        let rep = synthetic_report(eps, value, floors);
        assert!(fit_rate(&rep).is_err());
    }

    #[test]
    fn eps_grid_parse() {
        let g = EpsGrid::parse("2^-3:2^-12").unwrap();
        assert_eq!(g.values().len(), 10);
        assert_eq!(g.values()[0], 0.125);
        assert!(g.values().windows(2).all(|w| w[1] < w[0]));
        assert!(EpsGrid::parse("0.1:0.2").is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for name in [
            "uv-gap",
            "uv0-gap",
            "transition",
            "superad-transition(2)",
            "k-telescope(3)",
            "p-eps-gap",
        ] {
            let m = Metric::parse(name).unwrap();
            assert_eq!(m.name(), name);
        }
        assert!(Metric::parse("nope").is_err());
    }
}

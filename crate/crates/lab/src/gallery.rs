//! The example-gallery runner: each registered label carries a positive
//! claim (convergence with an expected rate or an o(1) trend, stable across
//! truncation dimensions) or a negative claim (a certified lower bound that
//! does not vanish). `run_example` executes the designated checks and emits
//! pass/fail with evidence; failures are report content, not errors.

use std::collections::BTreeMap;
use std::time::Instant;

use adiab_core::evolution::{propagate, GeneratorFamily, PropagateOpts};
use adiab_core::family::{build_standard_example, registered_dims, uniform_grid, Params};
use adiab_core::mat::{c64, CMat, C64};
use adiab_core::spectral::resolvent_ray_bound;

use crate::quad::adaptive_simpson;
use crate::report::{ExampleReport, SweepReport, SCHEMA_VERSION};
use crate::sweep::{fit_rate, run_sweep, EpsGrid, Metric};

/// Frozen value of `I₀ = ∫₀^{1/4} τ cos²(2πτ) dτ` (= 1/64 - 1/(16π²)),
/// confirmed at runtime by the adaptive-quadrature oracle.
pub const ROTATING_LOWER_BOUND_I0: f64 = 0.009_292_426_022_353_89;

fn blank_report(label: &str, params: &Params, claim: &str) -> ExampleReport {
    ExampleReport {
        schema_version: SCHEMA_VERSION,
        example: label.to_string(),
        params: params.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        claim: claim.to_string(),
        verdict: String::new(),
        passed: false,
        checks: vec![],
        sweeps: vec![],
        wallclock_ms: 0,
    }
}

/// Strictly-decreasing check plus final/initial ratio over clean points.
fn trend(report: &SweepReport) -> (bool, f64) {
    let pts: Vec<f64> = report
        .value
        .iter()
        .filter(|v| v.is_finite())
        .copied()
        .collect();
    if pts.len() < 2 {
        return (false, f64::NAN);
    }
    let decreasing = pts.windows(2).all(|w| w[1] < w[0]);
    (decreasing, pts.last().unwrap() / pts[0])
}

/// Relative spread of the metric across truncation dimensions, per ε;
/// aggregated as the median over the ε grid (the honest summary when the
/// deepest points start feeling the truncation).
fn dimension_drift(reports: &[SweepReport]) -> f64 {
    assert!(reports.len() >= 2);
    let n = reports[0].eps.len();
    let mut spreads = Vec::new();
    for i in 0..n {
        let vals: Vec<f64> = reports
            .iter()
            .filter_map(|r| {
                let v = *r.value.get(i)?;
                (v.is_finite() && !r.excluded.contains(&i)).then_some(v)
            })
            .collect();
        if vals.len() == reports.len() {
            let max = vals.iter().cloned().fold(f64::MIN, f64::max);
            let min = vals.iter().cloned().fold(f64::MAX, f64::min);
            if max > 0.0 {
                spreads.push((max - min) / max);
            }
        }
    }
    if spreads.is_empty() {
        return f64::NAN;
    }
    spreads.sort_by(|a, b| a.partial_cmp(b).unwrap());
    spreads[spreads.len() / 2]
}

/// Trim the trailing plateau of a sweep (physical saturation of a truncated
/// model): keep the leading points while the metric still decreases by at
/// least 3% per ε-halving. Returns surviving indices.
fn pre_saturation_indices(report: &SweepReport) -> Vec<usize> {
    let mut keep = vec![0usize];
    for i in 1..report.eps.len() {
        let prev = report.value[i - 1];
        let cur = report.value[i];
        if !cur.is_finite() || report.excluded.contains(&i) {
            break;
        }
        if cur < prev * 0.97 {
            keep.push(i);
        } else {
            break;
        }
    }
    keep
}

pub fn run_example(label: &str, params: &Params) -> Result<ExampleReport, String> {
    let started = Instant::now();
    let mut report = match label {
        "ex3-1u" => run_uniform_gap(params)?,
        "ex3-1" => run_nonuniform_gap("ex3-1", params, EpsGrid::default())?,
        "ex3-2" => run_volterra(params)?,
        "ex3-3" => run_rotating_negative(params)?,
        "ex-joye" => run_joye(params)?,
        "ex4-5" => run_gap_free("ex4-5", params)?,
        "ex4-6" => run_gap_free("ex4-6", params)?,
        "ex4-7" => run_travelling_multiplication(params)?,
        "ex-superad" => run_superadiabatic(params)?,
        "ex-hoelder" => run_hoelder(params)?,
        _ => return Err(format!("unknown example label {label}")),
    };
    report.passed = report.all_passed();
    report.wallclock_ms = started.elapsed().as_millis() as u64;
    Ok(report)
}

fn run_uniform_gap(params: &Params) -> Result<ExampleReport, String> {
    let ex = build_standard_example("ex3-1u", params).map_err(|e| e.to_string())?;
    let mut rep = blank_report("ex3-1u", params, ex.claim);
    let sweep = run_sweep("ex3-1u", params, Metric::UvGap, &EpsGrid::default())?;
    match fit_rate(&sweep) {
        Ok(fit) => {
            let ok = (0.85..=1.15).contains(&fit.slope);
            rep.check(
                "uv-gap slope in [0.85, 1.15]",
                ok,
                format!("slope {:.4} ± {:.4}", fit.slope, fit.stderr),
            );
        }
        Err(e) => rep.check("uv-gap slope in [0.85, 1.15]", false, e.to_string()),
    }
    rep.verdict = if rep.all_passed() { "O(eps) confirmed" } else { "O(eps) NOT confirmed" }.into();
    rep.sweeps.push(sweep);
    Ok(rep)
}

fn run_nonuniform_gap(
    label: &str,
    params: &Params,
    grid: EpsGrid,
) -> Result<ExampleReport, String> {
    let ex = build_standard_example(label, params).map_err(|e| e.to_string())?;
    let mut rep = blank_report(label, params, ex.claim);
    let sweep = run_sweep(label, params, Metric::UvGap, &grid)?;
    let (decreasing, ratio) = trend(&sweep);
    rep.check("uv-gap strictly decreasing", decreasing, format!("final/initial = {ratio:.4}"));
    rep.check(
        "final value < 0.25 x initial",
        ratio < 0.25,
        format!("ratio {ratio:.4}"),
    );
    rep.verdict = if rep.all_passed() { "o(1) confirmed" } else { "o(1) NOT confirmed" }.into();
    rep.sweeps.push(sweep);
    Ok(rep)
}

fn run_volterra(params: &Params) -> Result<ExampleReport, String> {
    let ex = build_standard_example("ex3-2", params).map_err(|e| e.to_string())?;
    let mut rep = blank_report("ex3-2", params, ex.claim);
    let grid = EpsGrid::two_pow_range(-3, -10);
    let mut sweeps = Vec::new();
    for d in registered_dims("ex3-2").map_err(|e| e.to_string())? {
        let mut p = params.clone();
        p.set("d", d as f64);
        sweeps.push(run_sweep("ex3-2", &p, Metric::UvGap, &grid)?);
    }
    for s in &sweeps {
        let (decreasing, ratio) = trend(s);
        rep.check(
            &format!("uv-gap decreasing (dim {})", s.dims[0]),
            decreasing && ratio < 0.25,
            format!("final/initial = {ratio:.4}"),
        );
    }
    let drift = dimension_drift(&sweeps);
    rep.check(
        "metric drift across dims <= 20%",
        drift <= 0.20,
        format!("median relative spread {:.3}", drift),
    );
    rep.verdict = if rep.all_passed() {
        "o(1) confirmed (Volterra truncations)"
    } else {
        "o(1) NOT confirmed"
    }
    .into();
    rep.sweeps = sweeps;
    Ok(rep)
}

fn run_rotating_negative(params: &Params) -> Result<ExampleReport, String> {
    let ex = build_standard_example("ex3-3", params).map_err(|e| e.to_string())?;
    let mut rep = blank_report("ex3-3", params, ex.claim);

    // independent adaptive-quadrature oracle for the lower-bound integral
    let i0 = adaptive_simpson(
        &|t| t * (2.0 * std::f64::consts::PI * t).cos().powi(2),
        0.0,
        0.25,
        1e-14,
    );
    rep.check(
        "quadrature oracle reproduces frozen I0",
        (i0 - ROTATING_LOWER_BOUND_I0).abs() < 1e-12,
        format!("I0 = {i0:.15}"),
    );

    let grid = EpsGrid::default();
    let mut all_bounded = true;
    let mut detail = String::new();
    for &eps in grid.values() {
        let u = propagate(
            &GeneratorFamily::scaled_operator(&ex.family, 1.0 / eps),
            eps,
            0.0,
            ex.family.meta.t_end,
            1e-10,
            &PropagateOpts::default(),
        )
        .map_err(|e| e.to_string())?;
        let full = u.transfer(0, u.grid().len() - 1);
        let overlap = full[(0, 0)].re;
        let bound = 1.0 + i0 / eps;
        let ok = overlap >= bound * (1.0 - 1e-8);
        if !ok {
            all_bounded = false;
        }
        detail = format!("at eps = {eps:.2e}: <e1,U e1> = {overlap:.6e}, bound {bound:.6e}");
    }
    rep.check("<e1, U_eps(1/4) e1> >= 1 + I0/eps", all_bounded, detail);

    let sweep = run_sweep("ex3-3", params, Metric::Transition, &grid)?;
    let small_eps_ok = sweep
        .eps
        .iter()
        .zip(sweep.value.iter())
        .filter(|(e, _)| **e <= 2.0f64.powi(-5) + 1e-15)
        .all(|(_, v)| *v >= 0.1);
    rep.check(
        "transition metric >= 0.1 for eps <= 2^-5",
        small_eps_ok,
        format!(
            "min over small eps = {:.3e}",
            sweep
                .eps
                .iter()
                .zip(sweep.value.iter())
                .filter(|(e, _)| **e <= 2.0f64.powi(-5) + 1e-15)
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min)
        ),
    );
    rep.verdict = if rep.all_passed() {
        "non-adiabatic confirmed"
    } else {
        "non-adiabatic NOT confirmed"
    }
    .into();
    rep.sweeps.push(sweep);
    Ok(rep)
}

fn run_joye(params: &Params) -> Result<ExampleReport, String> {
    let ex = build_standard_example("ex-joye", params).map_err(|e| e.to_string())?;
    let mut rep = blank_report("ex-joye", params, ex.claim);
    let sweep = run_sweep("ex-joye", params, Metric::Transition, &EpsGrid::default())?;
    let min_val = sweep
        .value
        .iter()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, |m, &v| m.min(v));
    rep.check(
        "transition metric never below 0.05",
        min_val >= 0.05,
        format!("min over sweep = {min_val:.4}"),
    );
    rep.verdict = if rep.all_passed() {
        "non-adiabatic confirmed (transitions persist)"
    } else {
        "non-adiabatic NOT confirmed"
    }
    .into();
    rep.sweeps.push(sweep);
    Ok(rep)
}

fn run_gap_free(label: &str, params: &Params) -> Result<ExampleReport, String> {
    let ex = build_standard_example(label, params).map_err(|e| e.to_string())?;
    let mut rep = blank_report(label, params, ex.claim);
    let grid = EpsGrid::two_pow_range(-3, -10);
    let mut sweeps = Vec::new();
    for d in registered_dims(label).map_err(|e| e.to_string())? {
        let mut p = params.clone();
        p.set("d", d as f64);
        sweeps.push(run_sweep(label, &p, Metric::Uv0Gap, &grid)?);
    }
    for s in &sweeps {
        let (decreasing, ratio) = trend(s);
        rep.check(
            &format!("uv0-gap decreasing (dim {})", s.dims[0]),
            decreasing,
            format!("final/initial = {ratio:.4}"),
        );
    }
    let drift = dimension_drift(&sweeps);
    rep.check(
        "metric drift across dims <= 20%",
        drift <= 0.20,
        format!("median relative spread {:.3}", drift),
    );

    // resolvent ray bound: finite M0, no growth trend towards δ -> 0
    let theta = ex.family.meta.theta.clone().ok_or("example has no ray angle")?;
    // δ² reaches the double-precision conditioning limit for the m0 = 2
    // Jordan parts below 1e-5, so the ray probe stops there
    let deltas = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
    let t_grid = uniform_grid(0.0, 1.0, 21);
    match resolvent_ray_bound(&ex.family, &ex.lambda, &theta, &ex.projection, &deltas, &t_grid) {
        Ok(rb) => {
            rep.check(
                "ray bound finite without growth trend",
                rb.m0.is_finite() && !rb.unbounded_trend,
                format!("M0 = {:.4}", rb.m0),
            );
            if label == "ex4-6" {
                rep.check(
                    "contraction resolvent: M0 <= 1",
                    rb.m0 <= 1.005,
                    format!("M0 = {:.6}", rb.m0),
                );
            }
        }
        Err(e) => rep.check("ray bound finite without growth trend", false, e.to_string()),
    }
    rep.verdict = if rep.all_passed() {
        "gap-free convergence confirmed"
    } else {
        "gap-free convergence NOT confirmed"
    }
    .into();
    rep.sweeps = sweeps;
    Ok(rep)
}

fn run_travelling_multiplication(params: &Params) -> Result<ExampleReport, String> {
    let ex = build_standard_example("ex4-7", params).map_err(|e| e.to_string())?;
    let mut rep = blank_report("ex4-7", params, ex.claim);
    let d = ex.family.dim();
    let g: Vec<C64> = (0..d)
        .map(|_| c64(1.0 / (d as f64).sqrt(), 0.0))
        .collect();
    let eps_list = [2.0f64.powi(-3), 2.0f64.powi(-6), 2.0f64.powi(-9)];
    // LHS(t, eps) = ||(1-P(t))U P(0) g - P(t) U (1-P(0)) g|| must equal
    // ||P(t) g - P(0) g|| at every eps
    let p0 = ex.projection.eval(0.0);
    let id = CMat::identity(d);
    let q0 = &id - &p0;
    let p0g = p0.matvec(&g);
    let q0g = q0.matvec(&g);
    let mut worst_eq = 0.0f64;
    let mut spread = 0.0f64;
    let sample_stride = 32;
    let mut per_t: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &eps in &eps_list {
        let u = propagate(
            &GeneratorFamily::scaled_operator(&ex.family, 1.0 / eps),
            eps,
            0.0,
            1.0,
            1e-10,
            &PropagateOpts::default(),
        )
        .map_err(|e| e.to_string())?;
        u.scan(|j, t, cum| {
            if j % sample_stride != 0 {
                return;
            }
            let pt = ex.projection.eval(t);
            let qt = &id - &pt;
            let a = qt.matvec(&cum.matvec(&p0g));
            let b = pt.matvec(&cum.matvec(&q0g));
            let lhs: f64 = a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let pg = pt.matvec(&g);
            let rhs: f64 = pg
                .iter()
                .zip(p0g.iter())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst_eq = worst_eq.max((lhs - rhs).abs());
            per_t.entry(j).or_default().push(lhs);
        });
    }
    for vals in per_t.values() {
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        spread = spread.max(max - min);
    }
    rep.check(
        "combined transition norm equals ||P(t)g - P(0)g||",
        worst_eq < 1e-8,
        format!("max defect {worst_eq:.3e}"),
    );
    rep.check(
        "value independent of eps",
        spread < 1e-8,
        format!("max spread across eps {spread:.3e}"),
    );
    // and the norm is actually nonzero somewhere (the conclusion fails)
    let p_half = ex.projection.eval(0.5);
    let phg = p_half.matvec(&g);
    let moved: f64 = phg
        .iter()
        .zip(p0g.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    rep.check(
        "projection actually moves (claim is non-vacuous)",
        moved > 0.1,
        format!("||P(1/2)g - P(0)g|| = {moved:.4}"),
    );
    rep.verdict = if rep.all_passed() {
        "hypothesis violated and conclusion fails (eps-independent transitions)"
    } else {
        "eps-independence NOT confirmed"
    }
    .into();
    Ok(rep)
}

fn run_superadiabatic(params: &Params) -> Result<ExampleReport, String> {
    let ex = build_standard_example("ex-superad", params).map_err(|e| e.to_string())?;
    let mut rep = blank_report("ex-superad", params, ex.claim);
    let grid = EpsGrid::two_pow_range(-4, -9);

    let p_sweep = run_sweep("ex-superad", params, Metric::PEpsGap, &grid)?;
    match fit_rate(&p_sweep) {
        Ok(fit) => rep.check(
            "p-eps-gap slope = 1 +/- 0.15",
            (0.85..=1.15).contains(&fit.slope),
            format!("slope {:.4} ± {:.4}", fit.slope, fit.stderr),
        ),
        Err(e) => rep.check("p-eps-gap slope = 1 +/- 0.15", false, e.to_string()),
    }
    rep.sweeps.push(p_sweep);

    let k_sweep = run_sweep("ex-superad", params, Metric::KTelescope(1), &grid)?;
    match fit_rate(&k_sweep) {
        Ok(fit) => rep.check(
            "k-telescope(1) slope = 1 +/- 0.15",
            (0.85..=1.15).contains(&fit.slope),
            format!("slope {:.4} ± {:.4}", fit.slope, fit.stderr),
        ),
        Err(e) => rep.check("k-telescope(1) slope = 1 +/- 0.15", false, e.to_string()),
    }
    rep.sweeps.push(k_sweep);

    // the order-n transitions decay fast; a slightly larger-ε window keeps
    // at least four points above the integrator floor
    let tr_grid = EpsGrid::two_pow_range(-2, -8);
    for n in 1..=3usize {
        let s = run_sweep("ex-superad", params, Metric::SuperadTransition(n), &tr_grid)?;
        match fit_rate(&s) {
            Ok(fit) => rep.check(
                &format!("superad-transition({n}) slope >= {}", n as f64 - 0.25),
                fit.slope >= n as f64 - 0.25,
                format!("slope {:.4} ± {:.4}", fit.slope, fit.stderr),
            ),
            Err(e) => rep.check(
                &format!("superad-transition({n}) slope >= {}", n as f64 - 0.25),
                false,
                e.to_string(),
            ),
        }
        rep.sweeps.push(s);
    }

    // telescoping: ||K_n - K_{n-1}|| nonincreasing in n at small eps
    let eps_small = 2.0f64.powi(-8);
    let state = adiab_core::adiabatic::superadiabatic_iterate(
        &ex.family,
        ex.cycle_center.as_ref().unwrap(),
        ex.cycle_radius.unwrap(),
        eps_small,
        3,
        &uniform_grid(0.0, 1.0, 17),
        &adiab_core::adiabatic::SuperadiabaticOpts::default(),
    )
    .map_err(|e| e.to_string())?;
    let mono = state.k_diffs.windows(2).all(|w| w[1] <= w[0] * 1.01);
    rep.check(
        "K-telescope nonincreasing in n at eps = 2^-8",
        mono,
        format!("diffs {:?}", state.k_diffs),
    );
    rep.verdict = if rep.all_passed() {
        "superadiabatic orders confirmed"
    } else {
        "superadiabatic orders NOT confirmed"
    }
    .into();
    Ok(rep)
}

fn run_hoelder(params: &Params) -> Result<ExampleReport, String> {
    let ex = build_standard_example("ex-hoelder", params).map_err(|e| e.to_string())?;
    let mut rep = blank_report("ex-hoelder", params, ex.claim);
    let grid = EpsGrid::two_pow_range(-3, -10);
    // the Hölder bound exponent α/(2(1+α)) at α = 1, minus the margin
    let threshold = 0.25 - 0.10;
    for d in [64usize, 256] {
        let mut p = params.clone();
        p.set("d", d as f64);
        let sweep = run_sweep("ex-hoelder", &p, Metric::UvGap, &grid)?;
        let keep = pre_saturation_indices(&sweep);
        if keep.len() < 4 {
            rep.check(
                &format!("uv-gap slope >= {threshold} (dim {d})"),
                false,
                format!("only {} pre-saturation points", keep.len()),
            );
        } else {
            let sub = SweepReport {
                eps: keep.iter().map(|&i| sweep.eps[i]).collect(),
                value: keep.iter().map(|&i| sweep.value[i]).collect(),
                excluded: vec![],
                wallclock_ms: vec![0; keep.len()],
                failures: vec![],
                ..sweep.clone()
            };
            match fit_rate(&sub) {
                Ok(fit) => rep.check(
                    &format!("uv-gap slope >= {threshold} (dim {d})"),
                    fit.slope >= threshold,
                    format!(
                        "slope {:.4} ± {:.4} on {} pre-saturation points",
                        fit.slope,
                        fit.stderr,
                        keep.len()
                    ),
                ),
                Err(e) => rep.check(
                    &format!("uv-gap slope >= {threshold} (dim {d})"),
                    false,
                    e.to_string(),
                ),
            }
        }
        rep.sweeps.push(sweep);
    }
    rep.verdict = if rep.all_passed() {
        "Hoelder upper bound respected (measured decay is at least the bound)"
    } else {
        "Hoelder bound check failed"
    }
    .into();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_i0_matches_closed_form() {
        let exact = 1.0 / 64.0 - 1.0 / (16.0 * std::f64::consts::PI.powi(2));
        assert!((ROTATING_LOWER_BOUND_I0 - exact).abs() < 1e-15);
    }

    #[test]
    fn drift_of_identical_sweeps_is_zero() {
        let mk = |v: Vec<f64>| SweepReport {
            schema_version: SCHEMA_VERSION,
            example: "x".into(),
            params: BTreeMap::new(),
            metric: "uv-gap".into(),
            eps: vec![0.5, 0.25, 0.125],
            value: v,
            slope: None,
            stderr: None,
            excluded: vec![],
            dims: vec![4],
            tolerances: BTreeMap::new(),
            wallclock_ms: vec![0; 3],
            failures: vec![],
        };
        let a = mk(vec![1.0, 0.5, 0.25]);
        let b = mk(vec![1.0, 0.5, 0.25]);
        assert_eq!(dimension_drift(&[a, b]), 0.0);
    }
}

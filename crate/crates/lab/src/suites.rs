//! Check suites behind `adiab check --suite {invariants|gallery|rates}`.
//! Each suite prints one line per check and reports overall success.

use adiab_core::adiabatic::{
    adiabatic_evolution, commutator_residual, commutator_solution_b, intertwining_residual,
};
use adiab_core::evolution::{check_evolution_laws, propagate, GeneratorFamily, PropagateOpts};
use adiab_core::family::{build_standard_example, uniform_grid, Params};
use adiab_core::mat::{c64, CMat};
use adiab_core::spectral::{riesz_projection, weakly_associated_projection, ContourCycle};

use crate::gallery::run_example;
use crate::sweep::{fit_rate, run_sweep, EpsGrid, Metric};

pub struct SuiteOutcome {
    pub name: String,
    pub passed: bool,
    pub details: String,
}

pub fn run_suite(name: &str) -> Result<Vec<SuiteOutcome>, String> {
    match name {
        "invariants" => Ok(invariants_suite()),
        "gallery" => gallery_suite(),
        "rates" => rates_suite(),
        _ => Err(format!("unknown suite {name} (use invariants|gallery|rates)")),
    }
}

fn outcome(name: &str, passed: bool, details: String) -> SuiteOutcome {
    SuiteOutcome { name: name.to_string(), passed, details }
}

/// Fast structural invariants of the kernel and the registered families.
fn invariants_suite() -> Vec<SuiteOutcome> {
    let mut out = Vec::new();

    // Riesz projection of the full spectrum is the identity
    {
        let a = CMat::from_rows(&[
            &[c64(0.1, 0.2), c64(1.0, 0.0)],
            &[c64(0.0, -0.3), c64(-0.2, 0.1)],
        ]);
        let cyc = ContourCycle::circle(c64(0.0, 0.0), 10.0, 32);
        let res = riesz_projection(&a, &cyc)
            .map(|p| (&p - &CMat::identity(2)).norm())
            .unwrap_or(f64::INFINITY);
        out.push(outcome("riesz full-spectrum = identity", res < 1e-9, format!("defect {res:.2e}")));
    }

    // weak association agrees with Riesz on a Jordan-plus-point spectrum
    {
        let mut a = CMat::zeros(3);
        a[(0, 1)] = c64(1.0, 0.0);
        a[(2, 2)] = c64(2.0, 0.0);
        let w = weakly_associated_projection(&a, c64(0.0, 0.0), 1e-9);
        let cyc = ContourCycle::circle(c64(0.0, 0.0), 1.0, 32);
        let p = riesz_projection(&a, &cyc);
        let res = match (w, p) {
            (Ok(w), Ok(p)) => (&w.projection - &p).norm(),
            _ => f64::INFINITY,
        };
        out.push(outcome("weak = riesz for an isolated pole", res < 1e-8, format!("defect {res:.2e}")));
    }

    // projection families: idempotency and P P' P = 0 on the gallery
    {
        let grid = uniform_grid(0.0, 1.0, 17);
        let mut worst: f64 = 0.0;
        for label in adiab_core::family::registered_labels() {
            if *label == "ex4-7" {
                continue;
            }
            if let Ok(ex) = build_standard_example(label, &Params::new()) {
                let (idem, ppp) = ex.projection.validate(&grid);
                worst = worst.max(idem).max(ppp);
            }
        }
        out.push(outcome("gallery projections: P²=P and PP'P=0", worst < 1e-7, format!("worst {worst:.2e}")));
    }

    // evolution laws on a stiff run
    {
        let ex = build_standard_example("ex3-1u", &Params::new()).unwrap();
        let u = propagate(
            &GeneratorFamily::scaled_operator(&ex.family, 16.0),
            1.0 / 16.0,
            0.0,
            1.0,
            1e-10,
            &PropagateOpts::default(),
        );
        let res = u
            .map(|u| {
                let triples = adiab_core::adiabatic::law_sample_triples(&u);
                check_evolution_laws(&u, &triples).max_composition
            })
            .unwrap_or(f64::INFINITY);
        out.push(outcome("evolution composition law", res < 1e-12, format!("residual {res:.2e}")));
    }

    // intertwining of the comparison evolution
    {
        let ex = build_standard_example("ex3-1u", &Params::new()).unwrap();
        let res = adiabatic_evolution(&ex.family, &ex.projection, 0.05, 1e-10, &PropagateOpts::default())
            .map(|v| intertwining_residual(&v, &ex.projection))
            .unwrap_or(f64::INFINITY);
        out.push(outcome("V_eps intertwines P", res < 1e-7, format!("residual {res:.2e}")));
    }

    // commutator equation residual at sampled times
    {
        let ex = build_standard_example("ex3-1u", &Params::new()).unwrap();
        let mut worst: f64 = 0.0;
        for &t in uniform_grid(0.0, 1.0, 33).iter() {
            let a = ex.family.eval(t);
            let p = ex.projection.eval(t);
            let pp = ex.projection.deriv(t);
            match commutator_solution_b(&a, ex.lambda.eval(t), &p, &pp, 2) {
                Ok(b) => worst = worst.max(commutator_residual(&b, &a, &p, &pp)),
                Err(_) => worst = f64::INFINITY,
            }
        }
        out.push(outcome("commutator solver residual", worst < 1e-8, format!("worst {worst:.2e}")));
    }

    out
}

/// Run every registered example's designated checks.
fn gallery_suite() -> Result<Vec<SuiteOutcome>, String> {
    let mut out = Vec::new();
    for label in adiab_core::family::registered_labels() {
        let rep = run_example(label, &Params::new())?;
        out.push(outcome(
            &format!("{label}: {}", rep.verdict),
            rep.passed,
            rep.checks
                .iter()
                .map(|c| format!("[{}] {}", if c.passed { "ok" } else { "FAIL" }, c.name))
                .collect::<Vec<_>>()
                .join("; "),
        ));
    }
    Ok(out)
}

/// The measured-rate subset: uniform-gap O(ε) and the superadiabatic order-1
/// telescope (fast versions of the slope-style acceptance checks).
fn rates_suite() -> Result<Vec<SuiteOutcome>, String> {
    let mut out = Vec::new();
    {
        let sweep = run_sweep("ex3-1u", &Params::new(), Metric::UvGap, &EpsGrid::default())?;
        let line = match fit_rate(&sweep) {
            Ok(fit) => outcome(
                "ex3-1u uv-gap slope in [0.85, 1.15]",
                (0.85..=1.15).contains(&fit.slope),
                format!("slope {:.4} ± {:.4}", fit.slope, fit.stderr),
            ),
            Err(e) => outcome("ex3-1u uv-gap slope in [0.85, 1.15]", false, e.to_string()),
        };
        out.push(line);
    }
    {
        let grid = EpsGrid::two_pow_range(-4, -9);
        let sweep = run_sweep("ex-superad", &Params::new(), Metric::KTelescope(1), &grid)?;
        let line = match fit_rate(&sweep) {
            Ok(fit) => outcome(
                "ex-superad k-telescope(1) slope = 1 +/- 0.15",
                (0.85..=1.15).contains(&fit.slope),
                format!("slope {:.4} ± {:.4}", fit.slope, fit.stderr),
            ),
            Err(e) => outcome("ex-superad k-telescope(1) slope", false, e.to_string()),
        };
        out.push(line);
    }
    Ok(out)
}

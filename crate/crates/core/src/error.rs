//! Error type shared by all modules of the crate.

use core::fmt;

/// Errors produced by the numerical kernels and the higher-level
/// spectral/evolution operations.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Input contained NaN/Inf entries or violated a documented precondition.
    InvalidInput(&'static str),
    /// A shifted matrix `z - A` was too close to singular to invert reliably.
    /// Carries an estimate of the distance from `z` to the spectrum.
    NearSingular { gap_estimate: f64 },
    /// The QR eigenvalue iteration failed to deflate within its iteration cap.
    EigFailure,
    /// Contour quadrature did not converge within the node cap; carries the
    /// last idempotency residual.
    QuadratureFailure { residual: f64 },
    /// The requested kernel/range splitting is numerically degenerate: no
    /// projection weakly associated with the given eigenvalue exists at the
    /// working precision.
    NoWeakAssociation { condition: f64 },
    /// A contour enclosure certificate failed at parameter time `t`.
    GapViolation { t: f64 },
    /// The probing ray `λ(t) + δ e^{iθ(t)}` hit the spectrum.
    RayHitsSpectrum { t: f64, delta: f64 },
    /// Adaptive step size underflowed (h < 1e-12).
    StiffnessFailure { t: f64, h: f64 },
    /// Propagation produced non-finite entries.
    Divergence { t: f64 },
    /// Post-hoc intertwining certificate of an adiabatic evolution exceeded
    /// its threshold (integrator tolerance too loose).
    AdiabaticityViolation { residual: f64 },
    /// `P(t)X ⊆ ker(A(t)-λ(t))^m0` failed at the stated residual.
    KernelInclusionViolation { t: f64, residual: f64 },
    /// The superadiabatic iteration lost its contour certificate at the given
    /// level and time (signals ε above the empirical ε*).
    IterationBreakdown { level: usize, t: f64 },
    /// Example label not present in the registry.
    UnknownExample,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(what) => write!(f, "invalid input: {what}"),
            Error::NearSingular { gap_estimate } => {
                write!(f, "shift too close to spectrum (distance ≈ {gap_estimate:.3e})")
            }
            Error::EigFailure => write!(f, "QR eigenvalue iteration did not converge"),
            Error::QuadratureFailure { residual } => {
                write!(f, "contour quadrature stalled (idempotency residual {residual:.3e})")
            }
            Error::NoWeakAssociation { condition } => {
                write!(f, "kernel/range splitting degenerate (cond ≈ {condition:.3e})")
            }
            Error::GapViolation { t } => write!(f, "contour enclosure failed at t = {t}"),
            Error::RayHitsSpectrum { t, delta } => {
                write!(f, "resolvent ray hit the spectrum at t = {t}, δ = {delta:.3e}")
            }
            Error::StiffnessFailure { t, h } => {
                write!(f, "step size underflow at t = {t} (h = {h:.3e})")
            }
            Error::Divergence { t } => write!(f, "non-finite state at t = {t}"),
            Error::AdiabaticityViolation { residual } => {
                write!(f, "intertwining residual {residual:.3e} above threshold")
            }
            Error::KernelInclusionViolation { t, residual } => {
                write!(f, "kernel inclusion failed at t = {t} (residual {residual:.3e})")
            }
            Error::IterationBreakdown { level, t } => {
                write!(f, "superadiabatic iteration broke down at level {level}, t = {t}")
            }
            Error::UnknownExample => write!(f, "unknown example label"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

use thiserror::Error;

/// Crate-wide error type. Solver guards map onto dedicated variants so that
/// callers (notably the root finder) can distinguish "off-domain point" from
/// genuine failure.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The gap wavenumber hit the excluded set k = m*pi/ell (m >= 1).
    #[error("singular gap: |sin(k*ell)| = {0:.3e} below guard")]
    SingularGap(f64),
    /// omega + n*Omega vanished for some Fourier mode n in range.
    #[error("resonant mode collision: |omega + {n}*Omega| below guard")]
    ResonantModeCollision { n: i32 },
    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),
    #[error("root finder did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("degenerate parabola: all three objective values coincide")]
    DegenerateParabola,
    #[error("ODE integration failed: {0}")]
    IntegrationFailure(String),
    #[error("mixed amplitudes: the first-order expansion requires a common eps for rho and kappa")]
    MixedAmplitudes,
    #[error("requested eigenvalue cluster is not degenerate within tolerance")]
    NotDegenerate,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Solver(String),
}

impl Error {
    /// Guard violations are transient: the root finder perturbs the iterate
    /// and continues instead of aborting.
    pub fn is_off_domain(&self) -> bool {
        matches!(
            self,
            Error::SingularGap(_) | Error::ResonantModeCollision { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Quasi-periodic capacitance matrix, its generalized (speed- and
//! length-weighted) form, and the static subwavelength band functions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{MaterialConstants, ResonatorChain};

/// N x N Hermitian matrix C^alpha: tridiagonal in 1/gap with Floquet-phased
/// corner entries from the wrap-around gap.
#[derive(Debug, Clone)]
pub struct CapacitanceMatrix {
    entries: CMat,
    alpha: f64,
}

impl CapacitanceMatrix {
    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Generalized capacitance V^2 L^{-1} C^alpha with V = diag(v_r)
    /// and L = diag(ell_i).
    pub fn generalized(
        &self,
        chain: &ResonatorChain,
        material: &MaterialConstants,
    ) -> Result<GeneralizedCapacitance> {
        let n = chain.n();
        let vr = material.vr();
        let entries = CMat::from_fn(n, n, |i, j| {
            self.entries[(i, j)] * (vr * vr / chain.length(i))
        });
        // the product is similar to the Hermitian D C D with D = diag(v/sqrt(ell)),
        // which guarantees a real nonnegative spectrum
        let sym = CMat::from_fn(n, n, |i, j| {
            let di = vr / chain.length(i).sqrt();
            let dj = vr / chain.length(j).sqrt();
            self.entries[(i, j)] * di * dj
        });
        let (mut eigenvalues, _) = linalg::hermitian_eigenpairs(&sym)?;
        for v in &mut eigenvalues {
            // clamp the tiny negative round-off at the spectral bottom
            if *v < 0.0 && *v > -1e-12 {
                *v = 0.0;
            }
        }
        Ok(GeneralizedCapacitance {
            entries,
            eigenvalues,
        })
    }
}

/// V^2 L^{-1} C^alpha together with its (real, ascending) eigenvalues.
#[derive(Debug, Clone)]
pub struct GeneralizedCapacitance {
    entries: CMat,
    eigenvalues: Vec<f64>,
}

impl GeneralizedCapacitance {
    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// Closed form of C^alpha. Every gap g between resonators i and i+1 (mod N)
/// adds 1/g to both touching diagonal entries and -1/g to the two coupling
/// entries; the wrap-around coupling carries e^{-+ i alpha L}.
pub fn capacitance_matrix(alpha: f64, chain: &ResonatorChain) -> CapacitanceMatrix {
    let n = chain.n();
    let mut c = CMat::zeros(n, n);
    for i in 0..n {
        let g = chain.gap(i);
        let j = (i + 1) % n;
        let phase = if i + 1 == n {
            (Complex64::new(0.0, 1.0) * alpha * chain.period()).exp()
        } else {
            Complex64::new(1.0, 0.0)
        };
        c[(i, i)] = c[(i, i)] + 1.0 / g;
        c[(j, j)] = c[(j, j)] + 1.0 / g;
        c[(i, j)] = c[(i, j)] - phase / g;
        c[(j, i)] = c[(j, i)] - phase.conj() / g;
    }
    CapacitanceMatrix { entries: c, alpha }
}

/// First N subwavelength band values omega_i = sqrt(delta * lambda_i) with
/// lambda_i the eigenvalues of the generalized capacitance, ascending. The
/// negatives -omega_i complete the spectrum and are added by the caller.
pub fn static_bands(
    alpha: f64,
    delta: f64,
    chain: &ResonatorChain,
    material: &MaterialConstants,
) -> Result<Vec<f64>> {
    if !alpha.is_finite() {
        return Err(Error::Config(format!("alpha must be finite, got {alpha}")));
    }
    let gen = capacitance_matrix(alpha, chain).generalized(chain, material)?;
    Ok(gen
        .eigenvalues()
        .iter()
        .map(|l| (delta * l.max(0.0)).sqrt())
        .collect())
}

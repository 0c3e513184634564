//! Exterior Helmholtz problem on the gaps: plane-wave coefficients and the
//! explicit 2N x 2N Dirichlet-to-Neumann matrix of the quasi-periodic cell.
//!
//! Rows and columns are ordered (1-, 1+, 2-, 2+, ..., N-, N+). The matrix
//! maps resonator boundary values to signed one-sided derivatives of the
//! exterior solution: row (i-) carries -v'(x_i^-), row (i+) carries +v'(x_i^+).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::model::ResonatorChain;

/// Below this |k*ell| the trigonometric entries switch to their series
/// expansions, which are exact through O(z^6) and smooth at k = 0.
const SMALL_ARG: f64 = 1e-2;
/// Guard band around the excluded wavenumbers k = m*pi/ell, m >= 1.
const SIN_GUARD: f64 = 1e-10;

/// z*cot(z), analytic at 0.
fn z_cot_z(z: Complex64) -> Result<Complex64> {
    if z.norm() < SMALL_ARG {
        let w = z * z;
        Ok(1.0 - w * (1.0 / 3.0 + w * (1.0 / 45.0 + w * (2.0 / 945.0))))
    } else {
        let s = z.sin();
        if s.norm() < SIN_GUARD {
            return Err(Error::SingularGap(s.norm()));
        }
        Ok(z * z.cos() / s)
    }
}

/// z/sin(z), analytic at 0.
fn z_csc_z(z: Complex64) -> Result<Complex64> {
    if z.norm() < SMALL_ARG {
        let w = z * z;
        Ok(1.0 + w * (1.0 / 6.0 + w * (7.0 / 360.0 + w * (31.0 / 15120.0))))
    } else {
        let s = z.sin();
        if s.norm() < SIN_GUARD {
            return Err(Error::SingularGap(s.norm()));
        }
        Ok(z / s)
    }
}

/// The symmetric 2x2 gap block: diagonal -k cos(k ell)/sin(k ell),
/// off-diagonal k/sin(k ell). At k = 0 this degenerates to the finite
/// difference block [[-1/ell, 1/ell], [1/ell, -1/ell]].
pub fn block_a(k: Complex64, ell: f64) -> Result<[[Complex64; 2]; 2]> {
    let z = k * ell;
    let d = -z_cot_z(z)? / ell;
    let o = z_csc_z(z)? / ell;
    Ok([[d, o], [o, d]])
}

/// Plane-wave coefficients (a, b) with v(x) = a e^{ikx} + b e^{-ikx}
/// matching `f_plus` at x_i^+ and `f_minus_next` at the left endpoint of the
/// next resonator (for the wrap-around gap i = N-1 that endpoint lives at
/// x_1^- + L and the caller supplies the data already phase-shifted).
pub fn exterior_coefficients(
    k: Complex64,
    chain: &ResonatorChain,
    i: usize,
    f_plus: Complex64,
    f_minus_next: Complex64,
) -> Result<(Complex64, Complex64)> {
    let x = chain.right(i);
    let y = if i + 1 < chain.n() {
        chain.left(i + 1)
    } else {
        chain.left(0) + chain.period()
    };
    let det = -2.0 * Complex64::i() * (k * (y - x)).sin();
    if det.norm() < 2.0 * SIN_GUARD {
        return Err(Error::SingularGap(det.norm() / 2.0));
    }
    let i1 = Complex64::i();
    let a = (f_plus * (-i1 * k * y).exp() - f_minus_next * (-i1 * k * x).exp()) / det;
    let b = (f_minus_next * (i1 * k * x).exp() - f_plus * (i1 * k * y).exp()) / det;
    Ok((a, b))
}

/// Explicit DtN matrix at wavenumber k and quasi-momentum alpha.
#[derive(Debug, Clone)]
pub struct DtnMatrix {
    entries: CMat,
    k: Complex64,
    alpha: f64,
}

impl DtnMatrix {
    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn k(&self) -> Complex64 {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Applies the map to boundary data ordered (1-, 1+, ..., N-, N+).
    pub fn apply(&self, data: &[Complex64]) -> Vec<Complex64> {
        let n = self.entries.nrows();
        assert_eq!(data.len(), n);
        (0..n)
            .map(|r| (0..n).map(|c| self.entries[(r, c)] * data[c]).sum())
            .collect()
    }
}

/// Assembles the full matrix. Each in-cell gap contributes a symmetric block
/// coupling (i+, (i+1)-); the wrap-around gap couples (N+, 1-) with Floquet
/// phases e^{-+ i alpha L} on the corners.
pub fn dtn_matrix(k: Complex64, alpha: f64, chain: &ResonatorChain) -> Result<DtnMatrix> {
    if !alpha.is_finite() || !k.re.is_finite() || !k.im.is_finite() {
        return Err(Error::Config(format!(
            "wavenumber and quasi-momentum must be finite, got k={k}, alpha={alpha}"
        )));
    }
    let n = chain.n();
    let mut t = CMat::zeros(2 * n, 2 * n);
    for i in 0..n - 1 {
        let b = block_a(k, chain.gap(i))?;
        let (r, c) = (2 * i + 1, 2 * i + 2);
        t[(r, r)] = b[0][0];
        t[(c, c)] = b[1][1];
        t[(r, c)] = b[0][1];
        t[(c, r)] = b[1][0];
    }
    let b = block_a(k, chain.gap(n - 1))?;
    let phase = Complex64::new(0.0, alpha * chain.period()).exp();
    let (last, first) = (2 * n - 1, 0);
    t[(first, first)] = t[(first, first)] + b[1][1];
    t[(last, last)] = t[(last, last)] + b[0][0];
    t[(first, last)] = t[(first, last)] + b[0][1] / phase;
    t[(last, first)] = t[(last, first)] + b[1][0] * phase;
    Ok(DtnMatrix {
        entries: t,
        k,
        alpha,
    })
}

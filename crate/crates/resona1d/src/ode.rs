//! Adaptive Dormand-Prince 5(4) integration of matrix-valued linear systems.
//!
//! The monodromy computation integrates Y' = A(t) Y with a complex matrix
//! state, which rules out the usual real-vector integrator crates; the
//! tableau is small enough to keep the scheme self-contained. Error control
//! is entrywise with mixed absolute/relative weighting and the standard
//! fifth-order step update.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Step-control settings. The defaults are chosen so the Liouville check on
/// the monodromy (|det - 1| <= 1e-8) passes with margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Bound on attempted (accepted + rejected) steps.
    pub max_steps: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

// Dormand-Prince coefficients. The seventh stage row equals the fifth-order
// weights (FSAL), so an accepted step reuses its last evaluation.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Fifth-order weights minus the embedded fourth-order weights.
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// y + h * sum(coeffs[m] * ks[m]) entrywise.
fn stage(y: &CMat, h: f64, coeffs: &[f64], ks: &[&CMat]) -> CMat {
    CMat::from_fn(y.nrows(), y.ncols(), |i, j| {
        let mut acc = y[(i, j)];
        for (c, k) in coeffs.iter().zip(ks) {
            if *c != 0.0 {
                acc += (*c * h) * k[(i, j)];
            }
        }
        acc
    })
}

/// Scaled error norm of a candidate step: max over entries of
/// |err| / (abs_tol + rel_tol * max(|y|, |y_new|)). Accept when <= 1.
fn error_norm(y: &CMat, y_new: &CMat, h: f64, ks: &[&CMat], cfg: &OdeConfig) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..y.nrows() {
        for j in 0..y.ncols() {
            let mut e = Complex64::ZERO;
            for (c, k) in ERR.iter().zip(ks) {
                if *c != 0.0 {
                    e += (*c * h) * k[(i, j)];
                }
            }
            let scale = cfg.abs_tol + cfg.rel_tol * y[(i, j)].norm().max(y_new[(i, j)].norm());
            let ratio = e.norm() / scale;
            // f64::max would silently drop a NaN from a diverged candidate
            if !ratio.is_finite() {
                return f64::INFINITY;
            }
            worst = worst.max(ratio);
        }
    }
    worst
}

/// Integrates y' = rhs(t, y) from (t0, y0) to t1 > t0 and returns y(t1).
pub fn integrate<F>(mut rhs: F, y0: CMat, t0: f64, t1: f64, cfg: &OdeConfig) -> Result<CMat>
where
    F: FnMut(f64, &CMat) -> CMat,
{
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::Config(format!(
            "integration endpoints must be finite, got [{t0}, {t1}]"
        )));
    }
    if t1 < t0 {
        return Err(Error::Config(format!(
            "integration runs forward in time, got t1 = {t1} < t0 = {t0}"
        )));
    }
    if !(cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0) {
        return Err(Error::Config("ODE tolerances must be positive".into()));
    }
    if t1 == t0 {
        return Ok(y0);
    }

    let span = t1 - t0;
    let h_min = f64::EPSILON * span;
    let mut t = t0;
    let mut y = y0;
    let mut h = span / 100.0;
    let mut k1 = rhs(t, &y);
    let mut rejected = false;

    for _ in 0..cfg.max_steps {
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }

        let k2 = rhs(t + C[1] * h, &stage(&y, h, &A2, &[&k1]));
        let k3 = rhs(t + C[2] * h, &stage(&y, h, &A3, &[&k1, &k2]));
        let k4 = rhs(t + C[3] * h, &stage(&y, h, &A4, &[&k1, &k2, &k3]));
        let k5 = rhs(t + C[4] * h, &stage(&y, h, &A5, &[&k1, &k2, &k3, &k4]));
        let k6 = rhs(t + C[5] * h, &stage(&y, h, &A6, &[&k1, &k2, &k3, &k4, &k5]));
        let y_new = stage(&y, h, &B5[..6], &[&k1, &k2, &k3, &k4, &k5, &k6]);
        let k7 = rhs(t + C[6] * h, &y_new);

        let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let err = error_norm(&y, &y_new, h, &ks, cfg);

        if err.is_finite() && err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k7;
            if t >= t1 {
                return Ok(y);
            }
            let mut factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // hold the step after a rejection to avoid accept/reject cycling
            if rejected {
                factor = factor.min(1.0);
            }
            rejected = false;
            h *= factor;
        } else {
            let factor = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.2, 1.0)
            } else {
                0.2
            };
            rejected = true;
            h *= factor;
            if h < h_min {
                return Err(Error::IntegrationFailure(format!(
                    "step size underflow at t = {t}"
                )));
            }
        }
    }
    Err(Error::IntegrationFailure(format!(
        "exceeded {} steps before reaching t1",
        cfg.max_steps
    )))
}

//! Muller's method for complex roots of scalar objectives.
//!
//! The band solver minimises the smallest eigenvalue modulus of the global
//! boundary matrix, a real-valued function of complex frequency. Muller's
//! parabola fit works on any `Complex64 -> Complex64` objective and needs no
//! derivatives, which is what makes it usable for that spectral objective.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Controls for [`find_root`].
#[derive(Debug, Clone, Copy)]
pub struct MullerConfig {
    /// Converged when |f(x)| drops to this level.
    pub tolerance: f64,
    /// Hard cap on parabola steps before giving up.
    pub max_iterations: usize,
    /// Relative spread used to fan a single guess into three seeds.
    pub perturbation: f64,
}

impl Default for MullerConfig {
    fn default() -> Self {
        MullerConfig {
            tolerance: 1e-12,
            max_iterations: 100,
            perturbation: 1e-5,
        }
    }
}

/// A converged root together with the evidence for it.
#[derive(Debug, Clone, Copy)]
pub struct MullerResult {
    pub root: Complex64,
    /// |f(root)| at the accepted iterate.
    pub residual: f64,
    pub iterations: usize,
}

/// Fan a static-approximation frequency into three distinct Muller seeds.
///
/// A zero guess has no scale to perturb multiplicatively, so it gets fixed
/// absolute offsets instead; `2i*spread` keeps the triple non-collinear.
pub fn seeds_from_static(base: Complex64, spread: f64) -> [Complex64; 3] {
    if base.norm() == 0.0 {
        let p = Complex64::new(spread, 0.0);
        return [p, -p, Complex64::new(0.0, 2.0 * spread)];
    }
    [base * (1.0 - spread), base * (1.0 + spread), base]
}

/// Evaluate `f`, nudging the point off guarded subsets of the domain.
///
/// Objectives may refuse points (singular gap, resonant mode collision); the
/// nudge starts just outside the 1e-12 guard radius so that a root sitting
/// exactly on the guarded set still yields a nearby admissible iterate.
fn eval_nudged<F>(f: &mut F, x: Complex64) -> Result<(Complex64, Complex64)>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut x = x;
    let mut nudge = 3e-12;
    let dir = Complex64::new(1.0, 1.0) / 2f64.sqrt();
    for _ in 0..8 {
        match f(x) {
            Ok(v) => return Ok((x, v)),
            Err(e) if e.is_off_domain() => {
                x += dir * (nudge * (1.0 + x.norm()));
                nudge *= 3.0;
            }
            Err(e) => return Err(e),
        }
    }
    f(x).map(|v| (x, v))
}

/// Find one root of `f` starting from three distinct seeds.
///
/// Classic three-point Muller iteration: fit a parabola through the last
/// three iterates, step to its root, keeping the denominator of larger
/// modulus for stability. Converges when |f| reaches the tolerance. A flat
/// parabola (all three values equal, or coincident points) triggers one
/// restart from re-perturbed seeds before reporting failure.
pub fn find_root<F>(mut f: F, seeds: [Complex64; 3], config: &MullerConfig) -> Result<MullerResult>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut seeds = seeds;
    let mut restarted = false;
    loop {
        match iterate(&mut f, seeds, config) {
            Err(Error::DegenerateParabola) if !restarted => {
                restarted = true;
                let scale = 7.0 * config.perturbation;
                seeds = [
                    seeds[0] + Complex64::new(scale, 0.0) * (1.0 + seeds[0].norm()),
                    seeds[1] + Complex64::new(0.0, scale) * (1.0 + seeds[1].norm()),
                    seeds[2] - Complex64::new(scale, scale) * (1.0 + seeds[2].norm()),
                ];
            }
            other => return other,
        }
    }
}

fn iterate<F>(f: &mut F, seeds: [Complex64; 3], config: &MullerConfig) -> Result<MullerResult>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let (x0, f0) = eval_nudged(f, seeds[0])?;
    let (x1, f1) = eval_nudged(f, seeds[1])?;
    let (x2, f2) = eval_nudged(f, seeds[2])?;
    let (mut x0, mut x1, mut x2) = (x0, x1, x2);
    let (mut f0, mut f1, mut f2) = (f0, f1, f2);

    for iteration in 0..=config.max_iterations {
        if f2.norm() <= config.tolerance {
            return Ok(MullerResult {
                root: x2,
                residual: f2.norm(),
                iterations: iteration,
            });
        }
        if iteration == config.max_iterations {
            break;
        }
        if (x1 - x0).norm() == 0.0 || (x2 - x1).norm() == 0.0 || (x2 - x0).norm() == 0.0 {
            return Err(Error::DegenerateParabola);
        }
        let d01 = (f1 - f0) / (x1 - x0);
        let d12 = (f2 - f1) / (x2 - x1);
        let curvature = (d12 - d01) / (x2 - x0);
        let b = d12 + (x2 - x1) * curvature;
        let disc = (b * b - 4.0 * f2 * curvature).sqrt();
        let denom = if (b + disc).norm() >= (b - disc).norm() {
            b + disc
        } else {
            b - disc
        };
        if denom.norm() == 0.0 {
            return Err(Error::DegenerateParabola);
        }
        let next = x2 - 2.0 * f2 / denom;
        let (next, fnext) = eval_nudged(f, next)?;
        (x0, f0) = (x1, f1);
        (x1, f1) = (x2, f2);
        (x2, f2) = (next, fnext);
    }
    Err(Error::NoConvergence(config.max_iterations))
}

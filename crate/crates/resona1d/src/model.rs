//! Geometry of the resonator chain, material constants, and the
//! time-modulation laws of density and bulk modulus.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One unit cell of the chain: N resonator intervals (x_i^-, x_i^+) inside a
/// cell of length `period`. Built from lengths and gaps with x_1^- = 0; the
/// last gap wraps around to the next cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorChain {
    boundary_points: Vec<(f64, f64)>,
    period: f64,
}

impl ResonatorChain {
    /// `lengths[i]` is the width of resonator i, `gaps[i]` the spacing between
    /// resonator i and its right neighbour (the last entry wraps to the next
    /// cell). Both slices must have the same positive length.
    pub fn from_lengths_and_gaps(lengths: &[f64], gaps: &[f64]) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::Config("at least one resonator required".into()));
        }
        if lengths.len() != gaps.len() {
            return Err(Error::Config(format!(
                "lengths ({}) and gaps ({}) must have equal count",
                lengths.len(),
                gaps.len()
            )));
        }
        if let Some(v) = lengths.iter().chain(gaps).find(|v| !(**v > 0.0)) {
            return Err(Error::Config(format!(
                "lengths and gaps must be positive, got {v}"
            )));
        }
        let mut boundary_points = Vec::with_capacity(lengths.len());
        let mut x = 0.0;
        for (l, g) in lengths.iter().zip(gaps) {
            boundary_points.push((x, x + l));
            x += l + g;
        }
        Ok(Self {
            boundary_points,
            period: x,
        })
    }

    pub fn n(&self) -> usize {
        self.boundary_points.len()
    }

    /// Cell period L.
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Left endpoint x_i^-.
    pub fn left(&self, i: usize) -> f64 {
        self.boundary_points[i].0
    }

    /// Right endpoint x_i^+.
    pub fn right(&self, i: usize) -> f64 {
        self.boundary_points[i].1
    }

    pub fn length(&self, i: usize) -> f64 {
        let (a, b) = self.boundary_points[i];
        b - a
    }

    /// Gap between resonator i and i+1; for i = N-1 this is the wrap-around
    /// gap into the next cell.
    pub fn gap(&self, i: usize) -> f64 {
        let n = self.n();
        if i + 1 < n {
            self.boundary_points[i + 1].0 - self.boundary_points[i].1
        } else {
            self.period - self.boundary_points[n - 1].1 + self.boundary_points[0].0
        }
    }

    pub fn boundary_points(&self) -> &[(f64, f64)] {
        &self.boundary_points
    }
}

/// Contrast and wave speeds. The interior material is homogeneous before
/// modulation: one rho_r, kappa_r for all resonators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialConstants {
    pub delta: f64,
    pub rho0: f64,
    pub kappa0: f64,
    pub rho_r: f64,
    pub kappa_r: f64,
}

impl MaterialConstants {
    /// Realizes (delta, v0, vr) with the exterior density normalized to 1,
    /// so rho_r = delta and kappa_r = vr^2 * delta.
    pub fn new(delta: f64, v0: f64, vr: f64) -> Result<Self> {
        if !(delta > 0.0 && v0 > 0.0 && vr > 0.0) {
            return Err(Error::Config(
                "delta, v0 and vr must all be positive".into(),
            ));
        }
        Ok(Self {
            delta,
            rho0: 1.0,
            kappa0: v0 * v0,
            rho_r: delta,
            kappa_r: vr * vr * delta,
        })
    }

    /// Exterior wave speed sqrt(kappa0/rho0).
    pub fn v0(&self) -> f64 {
        (self.kappa0 / self.rho0).sqrt()
    }

    /// Interior wave speed sqrt(kappa_r/rho_r).
    pub fn vr(&self) -> f64 {
        (self.kappa_r / self.rho_r).sqrt()
    }
}

/// Per-resonator cosine modulation:
///   rho_i(t)   = 1 / (1 + eps_rho_i  cos(Omega t + phi_rho_i)),
///   kappa_i(t) = 1 / (1 + eps_kappa_i cos(Omega t + phi_kappa_i)).
/// Their reciprocals are band-limited with cutoff M = 1, which is what the
/// Fourier-coefficient interface exposes.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulation {
    omega: f64,
    eps_rho: Vec<f64>,
    eps_kappa: Vec<f64>,
    phi_rho: Vec<f64>,
    phi_kappa: Vec<f64>,
}

impl Modulation {
    pub fn new(
        omega: f64,
        eps_rho: Vec<f64>,
        eps_kappa: Vec<f64>,
        phi_rho: Vec<f64>,
        phi_kappa: Vec<f64>,
    ) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::Config("Omega must be positive".into()));
        }
        let n = eps_rho.len();
        if n == 0 || eps_kappa.len() != n || phi_rho.len() != n || phi_kappa.len() != n {
            return Err(Error::Config(
                "modulation arrays must share one positive length".into(),
            ));
        }
        if let Some(e) = eps_rho.iter().chain(&eps_kappa).find(|e| !(0.0..1.0).contains(*e)) {
            return Err(Error::Config(format!(
                "modulation amplitudes must lie in [0, 1), got {e}"
            )));
        }
        Ok(Self {
            omega,
            eps_rho,
            eps_kappa,
            phi_rho,
            phi_kappa,
        })
    }

    /// A chain with no modulation at all; Omega still sets the folding window.
    pub fn unmodulated(omega: f64, n: usize) -> Self {
        Self::new(omega, vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]).unwrap()
    }

    pub fn n(&self) -> usize {
        self.eps_rho.len()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Modulation period T = 2 pi / Omega.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }

    /// Fourier cutoff of 1/rho_i and 1/kappa_i; exactly 1 for the cosine family.
    pub fn fourier_cutoff(&self) -> usize {
        1
    }

    pub fn is_static(&self) -> bool {
        self.eps_rho.iter().chain(&self.eps_kappa).all(|&e| e == 0.0)
    }

    pub fn eps_rho(&self, i: usize) -> f64 {
        self.eps_rho[i]
    }

    pub fn eps_kappa(&self, i: usize) -> f64 {
        self.eps_kappa[i]
    }

    pub fn phi_rho(&self, i: usize) -> f64 {
        self.phi_rho[i]
    }

    pub fn phi_kappa(&self, i: usize) -> f64 {
        self.phi_kappa[i]
    }

    pub fn rho_at(&self, i: usize, t: f64) -> f64 {
        1.0 / (1.0 + self.eps_rho[i] * (self.omega * t + self.phi_rho[i]).cos())
    }

    pub fn kappa_at(&self, i: usize, t: f64) -> f64 {
        1.0 / (1.0 + self.eps_kappa[i] * (self.omega * t + self.phi_kappa[i]).cos())
    }

    /// (kappa_i, kappa_i', kappa_i'') at time t, in closed form.
    /// With u = 1 + eps cos(theta), theta = Omega t + phi:
    ///   kappa   = 1/u
    ///   kappa'  = eps Omega sin(theta) / u^2
    ///   kappa'' = eps Omega^2 cos(theta) / u^2 + 2 eps^2 Omega^2 sin^2(theta) / u^3
    pub fn kappa_derivatives_at(&self, i: usize, t: f64) -> (f64, f64, f64) {
        let eps = self.eps_kappa[i];
        let th = self.omega * t + self.phi_kappa[i];
        let (s, c) = th.sin_cos();
        let u = 1.0 + eps * c;
        let w = self.omega;
        let k = 1.0 / u;
        let k1 = eps * w * s / (u * u);
        let k2 = eps * w * w * c / (u * u) + 2.0 * eps * eps * w * w * s * s / (u * u * u);
        (k, k1, k2)
    }

    /// Fourier coefficient r_{i,m} of 1/rho_i(t) = sum_m r_{i,m} e^{i m Omega t}.
    pub fn inv_rho_coefficient(&self, i: usize, m: i32) -> Complex64 {
        cosine_reciprocal_coefficient(self.eps_rho[i], self.phi_rho[i], m)
    }

    /// Fourier coefficient k_{i,m} of 1/kappa_i(t).
    pub fn inv_kappa_coefficient(&self, i: usize, m: i32) -> Complex64 {
        cosine_reciprocal_coefficient(self.eps_kappa[i], self.phi_kappa[i], m)
    }

    /// All coefficients for resonator i, m = -M..M, as (r, k) vectors.
    pub fn reciprocal_fourier_coefficients(&self, i: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let m = self.fourier_cutoff() as i32;
        let r = (-m..=m).map(|j| self.inv_rho_coefficient(i, j)).collect();
        let k = (-m..=m).map(|j| self.inv_kappa_coefficient(i, j)).collect();
        (r, k)
    }
}

/// 1/rho = 1 + eps cos(Omega t + phi) expands into coefficients
/// 1 at m = 0 and (eps/2) e^{+- i phi} at m = +-1.
fn cosine_reciprocal_coefficient(eps: f64, phi: f64, m: i32) -> Complex64 {
    match m {
        0 => Complex64::new(1.0, 0.0),
        1 => 0.5 * eps * Complex64::new(0.0, phi).exp(),
        -1 => 0.5 * eps * Complex64::new(0.0, -phi).exp(),
        _ => Complex64::new(0.0, 0.0),
    }
}

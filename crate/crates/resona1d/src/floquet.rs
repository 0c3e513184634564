//! Capacitance-route spectrum for modulated chains: the time-dependent
//! operator M^alpha(t), the period map (monodromy) of the first-order system
//! y' = A(t) y, and the folded quasifrequencies read off its multipliers.

use num_complex::Complex64;

use crate::capacitance::capacitance_matrix;
use crate::error::{Error, Result};
use crate::exact::fold_quasifrequency;
use crate::linalg::{self, CMat};
use crate::model::{MaterialConstants, Modulation, ResonatorChain};
use crate::ode::{self, OdeConfig};

/// Evaluation rule t -> M^alpha(t) = (delta kappa_r/rho_r) W1(t) C^alpha W2(t) + W3(t)
/// with the diagonal weights
///   W1 = diag(sqrt(kappa_i)/ell_i),
///   W2 = diag(sqrt(kappa_i)),
///   W3 = diag((sqrt(kappa_i)/2) d/dt(kappa_i'/kappa_i^{3/2})),
/// where kappa_i(t) is the normalized modulation factor. The density
/// modulation does not enter at this order.
pub struct ModulatedOperator<'a> {
    alpha: f64,
    chain: &'a ResonatorChain,
    material: &'a MaterialConstants,
    modulation: &'a Modulation,
    c_alpha: CMat,
}

impl<'a> ModulatedOperator<'a> {
    pub fn new(
        alpha: f64,
        chain: &'a ResonatorChain,
        material: &'a MaterialConstants,
        modulation: &'a Modulation,
    ) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be finite, got {alpha}")));
        }
        if modulation.n() != chain.n() {
            return Err(Error::Config(format!(
                "modulation covers {} resonators but the chain has {}",
                modulation.n(),
                chain.n()
            )));
        }
        let c_alpha = capacitance_matrix(alpha, chain).entries().clone();
        Ok(Self {
            alpha,
            chain,
            material,
            modulation,
            c_alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// M^alpha(t). The W3 diagonal expands to kappa''/(2 kappa) - (3/4)(kappa'/kappa)^2.
    pub fn at(&self, t: f64) -> CMat {
        let n = self.chain.n();
        let scale = self.material.delta * self.material.kappa_r / self.material.rho_r;
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        let mut w3 = vec![0.0; n];
        for i in 0..n {
            let (k, k1, k2) = self.modulation.kappa_derivatives_at(i, t);
            let root = k.sqrt();
            w1[i] = root / self.chain.length(i);
            w2[i] = root;
            w3[i] = k2 / (2.0 * k) - 0.75 * (k1 / k) * (k1 / k);
        }
        CMat::from_fn(n, n, |i, j| {
            let mut v = (scale * w1[i] * w2[j]) * self.c_alpha[(i, j)];
            if i == j {
                v += w3[i];
            }
            v
        })
    }
}

/// Convenience evaluation without keeping the operator around.
pub fn m_alpha_at(
    t: f64,
    alpha: f64,
    chain: &ResonatorChain,
    material: &MaterialConstants,
    modulation: &Modulation,
) -> Result<CMat> {
    Ok(ModulatedOperator::new(alpha, chain, material, modulation)?.at(t))
}

/// Period map X_T of y' = A(t) y, A = [[0, Id], [-M^alpha(t), 0]], from
/// identity initial data. A(t) is trace-free, so det X_T = 1 (Liouville);
/// the deviation measures the integration error.
#[derive(Debug, Clone)]
pub struct Monodromy {
    x_t: CMat,
    period: f64,
}

impl Monodromy {
    pub fn from_matrix(x_t: CMat, period: f64) -> Self {
        Self { x_t, period }
    }

    pub fn matrix(&self) -> &CMat {
        &self.x_t
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// |det X_T - 1|, the Liouville check.
    pub fn det_deviation(&self) -> f64 {
        (linalg::determinant(&self.x_t) - Complex64::ONE).norm()
    }
}

pub fn monodromy(
    alpha: f64,
    chain: &ResonatorChain,
    material: &MaterialConstants,
    modulation: &Modulation,
    cfg: &OdeConfig,
) -> Result<Monodromy> {
    let op = ModulatedOperator::new(alpha, chain, material, modulation)?;
    let n = chain.n();
    let dim = 2 * n;
    let identity = CMat::from_fn(dim, dim, |i, j| {
        Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
    });
    let rhs = |t: f64, y: &CMat| {
        let m = op.at(t);
        CMat::from_fn(dim, dim, |i, j| {
            if i < n {
                y[(i + n, j)]
            } else {
                let mut acc = Complex64::ZERO;
                for q in 0..n {
                    acc -= m[(i - n, q)] * y[(q, j)];
                }
                acc
            }
        })
    };
    let x_t = ode::integrate(rhs, identity, 0.0, modulation.period(), cfg)?;
    Ok(Monodromy {
        x_t,
        period: modulation.period(),
    })
}

/// Folded quasifrequencies from the period map: each multiplier mu of X_T
/// yields the principal Floquet exponent log(mu)/T and the quasifrequency
/// omega = -i log(mu)/T, with Re omega folded into [-Omega/2, Omega/2) and
/// Im omega reported as-is (Im != 0 marks growth or decay). Sorted by
/// (folded Re, Im) for deterministic band assembly.
pub fn quasifrequencies_from_monodromy(mono: &Monodromy, omega: f64) -> Result<Vec<Complex64>> {
    if !(omega > 0.0) {
        return Err(Error::Config(format!("Omega must be positive, got {omega}")));
    }
    let period = mono.period();
    if (omega * period - std::f64::consts::TAU).abs() > 1e-9 * std::f64::consts::TAU {
        return Err(Error::Config(format!(
            "folding frequency {omega} does not match the monodromy period {period}"
        )));
    }
    let multipliers = linalg::eigenvalues(mono.matrix())?;
    let mut out = Vec::with_capacity(multipliers.len());
    for mu in multipliers {
        let modulus = mu.norm();
        if modulus == 0.0 {
            return Err(Error::Solver("monodromy matrix is singular".into()));
        }
        let re = fold_quasifrequency(mu.arg() / period, omega);
        let im = -modulus.ln() / period;
        out.push(Complex64::new(re, im));
    }
    out.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    Ok(out)
}

/// Monodromy route end to end: 2N folded quasifrequencies at one alpha.
pub fn floquet_quasifrequencies(
    alpha: f64,
    chain: &ResonatorChain,
    material: &MaterialConstants,
    modulation: &Modulation,
    cfg: &OdeConfig,
) -> Result<Vec<Complex64>> {
    let mono = monodromy(alpha, chain, material, modulation, cfg)?;
    quasifrequencies_from_monodromy(&mono, modulation.omega())
}

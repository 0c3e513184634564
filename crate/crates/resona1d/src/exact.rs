//! Quasifrequencies from the truncated interior problem.
//!
//! Inside each modulated resonator the field is expanded in time harmonics
//! e^{i(omega+n*Omega)t} with |n| <= K. The harmonics couple through the
//! modulation; matching interior flux against the exterior
//! Dirichlet-to-Neumann map turns the band problem into locating the complex
//! omega at which a dense square matrix of size 2N(2K+1) becomes singular.
//! The scalar objective handed to Muller's method is the minimum eigenvalue
//! modulus of that matrix.

use num_complex::Complex64;

use crate::capacitance::static_bands;
use crate::dtn::dtn_matrix;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{MaterialConstants, Modulation, ResonatorChain};
use crate::muller::{self, MullerConfig};

/// |omega + n*Omega| at or below this sits on the guarded resonant set.
const MODE_GUARD: f64 = 1e-12;
/// Converged roots closer than this are the same quasifrequency.
const DEDUP_RADIUS: f64 = 1e-10;

/// Truncation order K of the interior harmonic expansion, modes n = -K..K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationParams {
    k: usize,
}

impl TruncationParams {
    /// K must dominate the modulation bandwidth (cosine modulation has M = 1).
    pub fn new(k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::Config(format!(
                "truncation order must be at least the modulation cutoff 1, got {k}"
            )));
        }
        Ok(TruncationParams { k })
    }

    pub fn order(&self) -> usize {
        self.k
    }

    /// Number of retained harmonics, 2K+1.
    pub fn modes(&self) -> usize {
        2 * self.k + 1
    }
}

impl Default for TruncationParams {
    fn default() -> Self {
        TruncationParams { k: 3 }
    }
}

/// Interior eigen-decompositions for every resonator at one frequency.
#[derive(Debug, Clone)]
pub struct InteriorEigenbasis {
    resonators: Vec<ResonatorModes>,
}

/// One resonator's interior modes: eigenpairs of C_i = A_i^{-1} B_i.
///
/// Eigenpairs are ordered by dominant harmonic: column q hosts the eigenmode
/// whose largest vector entry sits in row q (mode n = K-q). In the static
/// case that ordering is exact and block-diagonalizes the assembled system;
/// any other pairing threads the resonant block through a permutation cycle
/// and flattens the root-finding objective to |omega-omega*|^(1/cycle),
/// which no tolerance can reach.
#[derive(Debug, Clone)]
pub struct ResonatorModes {
    /// Eigenvalues of C_i, in harmonic order.
    pub lambda_sq: Vec<Complex64>,
    /// Principal square roots: Im >= 0, and Re >= 0 when Im = 0.
    pub lambda: Vec<Complex64>,
    /// Eigenvectors as columns, same order; row p holds mode n = K-p.
    pub vectors: CMat,
    /// A_i * vectors; column j row p is sum_m r_m f^j_{p+m}, the flux weight.
    pub weighted: CMat,
}

impl InteriorEigenbasis {
    pub fn resonator(&self, i: usize) -> &ResonatorModes {
        &self.resonators[i]
    }

    pub fn n(&self) -> usize {
        self.resonators.len()
    }
}

/// The assembled boundary-matching matrix whose singular frequencies are the
/// quasifrequencies.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    matrix: CMat,
}

impl AssembledSystem {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }
}

fn check_mode_guard(omega: Complex64, modulation: &Modulation, k: usize) -> Result<()> {
    for n in -(k as i32)..=(k as i32) {
        if (omega + n as f64 * modulation.omega()).norm() <= MODE_GUARD {
            return Err(Error::ResonantModeCollision { n });
        }
    }
    Ok(())
}

/// Harmonic-coupling matrices of resonator `i` at frequency `omega`.
///
/// Rows and columns are indexed by mode n = K..-K top to bottom. A is the
/// banded Toeplitz matrix of the reciprocal density coefficients r_m. B
/// carries gamma^n_m = k_m (omega+(n-m)Omega)(omega+n*Omega)/v_r^2 at
/// (row n, column n-m), the product form of the quotient-times-(k_r^n)^2
/// definition; couplings falling outside |n| <= K are dropped.
pub fn interior_matrices(
    resonator: usize,
    omega: Complex64,
    material: &MaterialConstants,
    modulation: &Modulation,
    trunc: TruncationParams,
) -> Result<(CMat, CMat)> {
    check_mode_guard(omega, modulation, trunc.order())?;
    let k = trunc.order() as i32;
    let dim = trunc.modes();
    let omega_mod = modulation.omega();
    let vr2 = material.vr() * material.vr();
    let m_max = modulation.fourier_cutoff() as i32;

    let a = CMat::from_fn(dim, dim, |p, q| {
        let m = q as i32 - p as i32;
        if m.abs() <= m_max {
            modulation.inv_rho_coefficient(resonator, m)
        } else {
            Complex64::ZERO
        }
    });
    let b = CMat::from_fn(dim, dim, |p, q| {
        let m = q as i32 - p as i32;
        if m.abs() > m_max {
            return Complex64::ZERO;
        }
        let n = k - p as i32;
        let w_n = omega + n as f64 * omega_mod;
        let w_nm = omega + (n - m) as f64 * omega_mod;
        modulation.inv_kappa_coefficient(resonator, m) * w_nm * w_n / vr2
    });
    Ok((a, b))
}

/// Principal square root: Im >= 0, and Re >= 0 on the nonnegative real axis.
fn principal_sqrt(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 || (r.im == 0.0 && r.re < 0.0) {
        -r
    } else {
        r
    }
}

/// Greedy dominant-entry assignment: position q takes the unused eigenvector
/// with the largest magnitude in row q. Exact for the static unit-vector
/// basis, stable under weak modulation, and deterministic (ties keep the
/// lowest source index).
fn harmonic_order(vectors: &CMat) -> Vec<usize> {
    let dim = vectors.nrows();
    let mut taken = vec![false; dim];
    let mut order = Vec::with_capacity(dim);
    for q in 0..dim {
        let mut best = usize::MAX;
        let mut best_mag = -1.0;
        for j in 0..dim {
            if !taken[j] && vectors[(q, j)].norm() > best_mag {
                best_mag = vectors[(q, j)].norm();
                best = j;
            }
        }
        taken[best] = true;
        order.push(best);
    }
    order
}

/// Eigen-decompose C_i = A_i^{-1} B_i for every resonator.
pub fn interior_eigenbasis(
    omega: Complex64,
    material: &MaterialConstants,
    modulation: &Modulation,
    trunc: TruncationParams,
) -> Result<InteriorEigenbasis> {
    let mut resonators = Vec::with_capacity(modulation.n());
    for i in 0..modulation.n() {
        let (a, b) = interior_matrices(i, omega, material, modulation, trunc)?;
        let c = linalg::solve(&a, &b);
        let (raw_values, raw_vectors) = linalg::eigenpairs(&c)?;
        let order = harmonic_order(&raw_vectors);
        let dim = trunc.modes();
        let lambda_sq: Vec<Complex64> = order.iter().map(|&j| raw_values[j]).collect();
        let vectors = CMat::from_fn(dim, dim, |p, q| raw_vectors[(p, order[q])]);
        let lambda = lambda_sq.iter().map(|&z| principal_sqrt(z)).collect();
        let weighted = &a * &vectors;
        resonators.push(ResonatorModes {
            lambda_sq,
            lambda,
            vectors,
            weighted,
        });
    }
    Ok(InteriorEigenbasis { resonators })
}

/// Assemble the boundary-matching matrix at (omega, alpha).
///
/// Row blocks p = 0..2K hold mode n = K-p; each spans the 2N resonator
/// boundary points in chain order. Column blocks q hold the j = q-th interior
/// eigenmode of each resonator, two amplitude columns (right- and left-going)
/// per resonator. The (p, q) block is G - delta * T(k^n, alpha) * V where G
/// and V are resonator-block-diagonal traces of the interior modes and T is
/// the exterior map at k^n = (omega + n*Omega)/v_0.
pub fn assemble_a_star(
    omega: Complex64,
    alpha: f64,
    chain: &ResonatorChain,
    material: &MaterialConstants,
    modulation: &Modulation,
    trunc: TruncationParams,
) -> Result<AssembledSystem> {
    if chain.n() != modulation.n() {
        return Err(Error::Config(format!(
            "chain has {} resonators but modulation has {}",
            chain.n(),
            modulation.n()
        )));
    }
    let k = trunc.order() as i32;
    let dim = trunc.modes();
    let nres = chain.n();
    let width = 2 * nres;
    let basis = interior_eigenbasis(omega, material, modulation, trunc)?;
    let delta = material.delta;

    let mut out = CMat::zeros(width * dim, width * dim);
    for p in 0..dim {
        let n = k - p as i32;
        let k_n = (omega + n as f64 * modulation.omega()) / material.v0();
        let t = dtn_matrix(k_n, alpha, chain)?;
        for q in 0..dim {
            // Per resonator: boundary traces of eigenmode q at harmonic n.
            // vloc/gloc are the 2x2 diagonal blocks of V and G.
            let mut vloc = vec![[Complex64::ZERO; 2]; width];
            let mut gloc = vec![[Complex64::ZERO; 2]; width];
            for i in 0..nres {
                let modes = basis.resonator(i);
                let il = Complex64::i() * modes.lambda[q];
                let fe = modes.vectors[(p, q)];
                let ge = modes.weighted[(p, q)];
                let (el_p, el_m) = ((il * chain.left(i)).exp(), (-il * chain.left(i)).exp());
                let (er_p, er_m) = ((il * chain.right(i)).exp(), (-il * chain.right(i)).exp());
                vloc[2 * i] = [fe * el_p, fe * el_m];
                vloc[2 * i + 1] = [fe * er_p, fe * er_m];
                // Outward interior flux: -d/dx at the left end, +d/dx at the right.
                gloc[2 * i] = [-il * ge * el_p, il * ge * el_m];
                gloc[2 * i + 1] = [il * ge * er_p, -il * ge * er_m];
            }
            for r in 0..width {
                for i in 0..nres {
                    for c in 0..2 {
                        let col = 2 * i + c;
                        let tv = t.entries()[(r, 2 * i)] * vloc[2 * i][c]
                            + t.entries()[(r, 2 * i + 1)] * vloc[2 * i + 1][c];
                        let g = if r / 2 == i { gloc[r][c] } else { Complex64::ZERO };
                        out[(p * width + r, q * width + col)] = g - delta * tv;
                    }
                }
            }
        }
    }
    Ok(AssembledSystem { matrix: out })
}

/// The root-finding objective: minimum eigenvalue modulus of the assembled
/// system. Zero exactly at quasifrequencies.
pub fn objective_f(
    omega: Complex64,
    alpha: f64,
    chain: &ResonatorChain,
    material: &MaterialConstants,
    modulation: &Modulation,
    trunc: TruncationParams,
) -> Result<f64> {
    let sys = assemble_a_star(omega, alpha, chain, material, modulation, trunc)?;
    let eigs = linalg::eigenvalues(sys.matrix())?;
    Ok(eigs
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min))
}

/// Fold a real frequency into the time Brillouin zone [-Omega/2, Omega/2).
pub fn fold_quasifrequency(re: f64, omega_mod: f64) -> f64 {
    re - omega_mod * (re / omega_mod + 0.5).floor()
}

/// Magnitude cutoff separating subwavelength roots from spurious ones.
///
/// Ten times the largest possible static band, realized through the
/// Gershgorin bound of the generalized capacitance so it is alpha-independent
/// and never undercuts an actual band.
pub fn subwavelength_threshold(chain: &ResonatorChain, material: &MaterialConstants) -> f64 {
    let vr2 = material.vr() * material.vr();
    let n = chain.n();
    let mut bound: f64 = 0.0;
    for i in 0..n {
        let prev = chain.gap((i + n - 1) % n);
        let next = chain.gap(i);
        bound = bound.max(vr2 / chain.length(i) * 2.0 * (1.0 / prev + 1.0 / next));
    }
    10.0 * (material.delta * bound).sqrt()
}

/// Muller seed triples fanned out from the static capacitance bands at
/// `alpha`: one triple per band and sign, the zero band getting a single
/// triple of fixed absolute offsets.
pub fn static_seed_triples(
    alpha: f64,
    chain: &ResonatorChain,
    material: &MaterialConstants,
    spread: f64,
) -> Result<Vec<[Complex64; 3]>> {
    let bands = static_bands(alpha, material.delta, chain, material)?;
    let mut seeds = Vec::with_capacity(2 * bands.len());
    for w in bands {
        seeds.push(muller::seeds_from_static(Complex64::new(w, 0.0), spread));
        if w > 0.0 {
            seeds.push(muller::seeds_from_static(Complex64::new(-w, 0.0), spread));
        }
    }
    Ok(seeds)
}

/// Seed triples centered on externally computed approximations, typically
/// the folded monodromy spectrum. One triple per value; the tight fan keeps
/// Muller inside the basin of the nearby exact root, which is what resolves
/// close split pairs that fan-outs from degenerate static bands miss.
pub fn seed_triples_from_values(values: &[Complex64], spread: f64) -> Vec<[Complex64; 3]> {
    values
        .iter()
        .map(|w| muller::seeds_from_static(*w, spread))
        .collect()
}

/// Run Muller from every seed triple and post-process: fold real parts into
/// [-Omega/2, Omega/2), drop roots beyond the subwavelength threshold,
/// deduplicate within 1e-10, sort by (re, im). Seeds that fail to converge
/// are skipped, not fatal; every surviving root satisfies the residual bound
/// of the root finder.
pub fn exact_quasifrequencies(
    alpha: f64,
    chain: &ResonatorChain,
    material: &MaterialConstants,
    modulation: &Modulation,
    trunc: TruncationParams,
    seeds: &[[Complex64; 3]],
    muller_cfg: &MullerConfig,
) -> Result<Vec<Complex64>> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed triple is required".into()));
    }
    let omega_mod = modulation.omega();
    let threshold = subwavelength_threshold(chain, material);
    let mut roots: Vec<Complex64> = Vec::new();
    for &triple in seeds {
        let objective = |w: Complex64| {
            objective_f(w, alpha, chain, material, modulation, trunc)
                .map(|v| Complex64::new(v, 0.0))
        };
        let found = match muller::find_root(objective, triple, muller_cfg) {
            Ok(r) => r,
            Err(Error::NoConvergence(_)) | Err(Error::DegenerateParabola) => continue,
            Err(e) => return Err(e),
        };
        let folded = Complex64::new(fold_quasifrequency(found.root.re, omega_mod), found.root.im);
        if folded.norm() > threshold {
            continue;
        }
        if roots.iter().all(|r| (r - folded).norm() >= DEDUP_RADIUS) {
            roots.push(folded);
        }
    }
    roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    Ok(roots)
}

//! Brillouin-zone sweeps and everything derived from them: band assembly,
//! degenerate points, band gaps, momentum gaps, reciprocity metrics, and the
//! exact-vs-capacitance error.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::capacitance::static_bands;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exact::{self, fold_quasifrequency, TruncationParams};
use crate::floquet::floquet_quasifrequencies;
use crate::model::{MaterialConstants, Modulation, ResonatorChain};
use crate::muller::MullerConfig;
use crate::ode::OdeConfig;
use crate::perturbation;

/// Spectra entries closer than this (complex distance, circular in the real
/// part) count as one degenerate point.
pub const DEGENERATE_POINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Static,
    #[default]
    Floquet,
    Exact,
    Perturbative,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Static => "static",
            Method::Floquet => "floquet",
            Method::Exact => "exact",
            Method::Perturbative => "perturbative",
        })
    }
}

/// Quasifrequencies at one quasi-momentum, sorted by (re, im), real parts
/// folded into [-Omega/2, Omega/2).
#[derive(Debug, Clone)]
pub struct QuasifrequencySpectrum {
    pub alpha: f64,
    pub entries: Vec<Complex64>,
    pub method: Method,
}

/// A full sweep over the Brillouin zone. Failed grid points stay in the
/// grid with no spectrum; reports are derived from what solved.
#[derive(Debug)]
pub struct BandStructure {
    grid: Vec<f64>,
    spectra: Vec<Option<QuasifrequencySpectrum>>,
    failures: Vec<(f64, String)>,
    method: Method,
    omega: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KGap {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub max_im: f64,
    /// Folded real part the gapped pair locks onto, sampled at the point of
    /// largest excursion. Identifies which frequency the gap obstructs.
    pub re_omega: f64,
}

impl KGap {
    pub fn length(&self) -> f64 {
        self.alpha_hi - self.alpha_lo
    }
}

/// Interval of the folding window no band's real part passes through. Gaps
/// touching a window boundary carry `wraps`: folding can split one physical
/// gap into a head and a tail piece.
#[derive(Debug, Clone, Serialize)]
pub struct BandGap {
    pub lo: f64,
    pub hi: f64,
    pub wraps: bool,
}

impl BandGap {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DegeneratePoint {
    pub alpha: f64,
    pub omega_0: f64,
    /// Positions of the touching entries in the sorted spectrum.
    pub bands: (usize, usize),
}

/// Reciprocity metrics: worst spectral mismatch between +alpha and -alpha,
/// and the momentum-gap table split by zone side. The asymmetry scalar is
/// the largest length difference between gaps paired by the frequency they
/// obstruct (an unpaired gap counts whole). Pairing by mirrored momentum
/// interval would always read zero: spectra at -alpha are the conjugates of
/// those at +alpha, so the interval lengths mirror exactly and only the
/// frequency-resolved accounting can expose one-way gaps.
#[derive(Debug, Clone, Serialize)]
pub struct ReciprocityReport {
    pub deviation: f64,
    pub left_gaps: Vec<KGap>,
    pub right_gaps: Vec<KGap>,
    pub max_length_asymmetry: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BandReports {
    pub band_gaps: Vec<BandGap>,
    pub k_gaps: Vec<KGap>,
    pub degenerate_points: Vec<DegeneratePoint>,
    pub reciprocity: ReciprocityReport,
}

impl BandStructure {
    /// Assembles a band structure from already computed spectra. The grid
    /// must be ascending and symmetric about zero, one spectrum slot per
    /// grid point.
    pub fn from_parts(
        grid: Vec<f64>,
        spectra: Vec<Option<QuasifrequencySpectrum>>,
        method: Method,
        omega: f64,
    ) -> Result<Self> {
        if grid.len() != spectra.len() {
            return Err(Error::Config(format!(
                "{} grid points but {} spectrum slots",
                grid.len(),
                spectra.len()
            )));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("grid must be strictly ascending".into()));
        }
        let n = grid.len();
        for j in 0..n / 2 {
            let sum = grid[j] + grid[n - 1 - j];
            if sum.abs() > 1e-12 * grid[n - 1].abs().max(1.0) {
                return Err(Error::Config("grid must be symmetric about zero".into()));
            }
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::Config(format!(
                "modulation frequency must be positive, got {omega}"
            )));
        }
        Ok(BandStructure {
            grid,
            spectra,
            failures: Vec::new(),
            method,
            omega,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn spectra(&self) -> &[Option<QuasifrequencySpectrum>] {
        &self.spectra
    }

    /// Grid points that failed to solve, with the solver's message.
    pub fn failures(&self) -> &[(f64, String)] {
        &self.failures
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Continues entries across the grid into bands by greedy nearest
    /// matching in the complex plane, ties broken toward matching the sign
    /// of the imaginary part. Band b of the result holds one Option per
    /// grid point.
    pub fn bands(&self) -> Vec<Vec<Option<Complex64>>> {
        let width = self.grid.len();
        let count = self
            .spectra
            .iter()
            .flatten()
            .map(|s| s.entries.len())
            .max()
            .unwrap_or(0);
        let mut bands = vec![vec![None; width]; count];
        let mut last: Vec<Option<Complex64>> = vec![None; count];
        for (gi, slot) in self.spectra.iter().enumerate() {
            let Some(spectrum) = slot else { continue };
            let entries = &spectrum.entries;
            let mut taken_band = vec![false; count];
            let mut taken_entry = vec![false; entries.len()];
            let mut candidates: Vec<(f64, u8, usize, usize)> = Vec::new();
            for (b, lv) in last.iter().enumerate() {
                let Some(lv) = lv else { continue };
                for (e, v) in entries.iter().enumerate() {
                    let mismatch = u8::from(lv.im.signum() != v.im.signum());
                    candidates.push((circular_distance(*lv, *v, self.omega), mismatch, b, e));
                }
            }
            candidates.sort_by(|a, b| {
                (a.0, a.1, a.2, a.3)
                    .partial_cmp(&(b.0, b.1, b.2, b.3))
                    .expect("finite distances")
            });
            for (_, _, b, e) in candidates {
                if taken_band[b] || taken_entry[e] {
                    continue;
                }
                taken_band[b] = true;
                taken_entry[e] = true;
                bands[b][gi] = Some(entries[e]);
                last[b] = Some(entries[e]);
            }
            // entries with no predecessor open the lowest free band slot
            for (e, v) in entries.iter().enumerate() {
                if taken_entry[e] {
                    continue;
                }
                if let Some(b) = (0..count).find(|&b| !taken_band[b]) {
                    taken_band[b] = true;
                    bands[b][gi] = Some(*v);
                    last[b] = Some(*v);
                }
            }
        }
        bands
    }

    /// All derived reports in one bundle.
    pub fn reports(&self, im_threshold: f64, gap_resolution: f64) -> BandReports {
        BandReports {
            band_gaps: detect_band_gaps(self, gap_resolution),
            k_gaps: detect_k_gaps(self, im_threshold),
            degenerate_points: detect_degenerate_points(self),
            reciprocity: reciprocity_report(self, im_threshold),
        }
    }
}

/// Ascending grid of `count` (odd) quasi-momenta, symmetric about 0 and
/// spanning the closed zone [-pi/L, pi/L]; -pi/L duplicates the physical
/// point +pi/L so that every +alpha has its mirror.
pub fn symmetric_grid(count: usize, period: f64) -> Result<Vec<f64>> {
    if count < 3 || count % 2 == 0 {
        return Err(Error::Config(format!(
            "grid count must be odd and at least 3, got {count}"
        )));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::Config(format!("period must be positive, got {period}")));
    }
    let half = (count / 2) as i64;
    let step = std::f64::consts::PI / period / half as f64;
    Ok((-half..=half).map(|j| j as f64 * step).collect())
}

struct SweepContext<'a> {
    chain: &'a ResonatorChain,
    material: &'a MaterialConstants,
    modulation: &'a Modulation,
    trunc: TruncationParams,
    muller: MullerConfig,
    ode: OdeConfig,
    seed_spread: f64,
}

fn sort_entries(mut entries: Vec<Complex64>) -> Vec<Complex64> {
    entries.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).expect("finite"));
    entries
}

/// Distance on the folding circle: real parts are compared modulo Omega so
/// a value jittering across the window boundary stays close to itself.
fn circular_distance(a: Complex64, b: Complex64, omega: f64) -> f64 {
    let d_re = a.re - b.re;
    let d_re = d_re - omega * (d_re / omega).round();
    d_re.hypot(a.im - b.im)
}

fn static_point(ctx: &SweepContext, alpha: f64) -> Result<Vec<Complex64>> {
    let omega = ctx.modulation.omega();
    let bands = static_bands(alpha, ctx.material.delta, ctx.chain, ctx.material)?;
    let mut entries = Vec::with_capacity(2 * bands.len());
    for w in bands {
        for s in [1.0, -1.0] {
            entries.push(Complex64::new(fold_quasifrequency(s * w, omega), 0.0));
        }
    }
    Ok(sort_entries(entries))
}

fn floquet_point(ctx: &SweepContext, alpha: f64) -> Result<Vec<Complex64>> {
    floquet_quasifrequencies(alpha, ctx.chain, ctx.material, ctx.modulation, &ctx.ode)
}

/// Exact roots seeded from the monodromy spectrum; a tight fan around each
/// approximate value keeps the root finder inside the right basin even for
/// split pairs a static-band fan cannot separate.
fn exact_point(ctx: &SweepContext, alpha: f64) -> Result<Vec<Complex64>> {
    let approx = floquet_point(ctx, alpha)?;
    let seeds = exact::seed_triples_from_values(&approx, ctx.seed_spread);
    let roots = exact::exact_quasifrequencies(
        alpha,
        ctx.chain,
        ctx.material,
        ctx.modulation,
        ctx.trunc,
        &seeds,
        &ctx.muller,
    )?;
    if roots.is_empty() {
        return Err(Error::Solver(format!(
            "no exact root converged at alpha = {alpha}"
        )));
    }
    Ok(roots)
}

fn perturbative_point(ctx: &SweepContext, alpha: f64) -> Result<Vec<Complex64>> {
    let omega = ctx.modulation.omega();
    let expansion = perturbation::m_first_order(alpha, ctx.chain, ctx.material, ctx.modulation)?;
    let tol = perturbation::DEGENERACY_TOL * omega;
    // group folded values into circular clusters; away from crossings every
    // cluster is a singleton and the first-order spectrum is just omega_0
    let mut assigned = vec![false; expansion.folded().len()];
    let mut entries = Vec::with_capacity(expansion.folded().len());
    for (i, f) in expansion.folded().iter().enumerate() {
        if assigned[i] {
            continue;
        }
        let mut cluster = 1usize;
        for (j, g) in expansion.folded().iter().enumerate().skip(i + 1) {
            if assigned[j] {
                continue;
            }
            let d = g.omega_a0 - f.omega_a0;
            if (d - omega * (d / omega).round()).abs() <= tol {
                assigned[j] = true;
                cluster += 1;
            }
        }
        assigned[i] = true;
        if cluster == 1 {
            entries.push(Complex64::new(f.omega_0, 0.0));
        } else {
            let block = perturbation::f1_block(&expansion, f.omega_0)?;
            for w in block.perturbed_quasifrequencies(expansion.epsilon()) {
                entries.push(Complex64::new(fold_quasifrequency(w.re, omega), w.im));
            }
        }
    }
    Ok(sort_entries(entries))
}

fn solve_point(ctx: &SweepContext, alpha: f64, method: Method) -> Result<Vec<Complex64>> {
    match method {
        Method::Static => static_point(ctx, alpha),
        Method::Floquet => floquet_point(ctx, alpha),
        Method::Exact => exact_point(ctx, alpha),
        Method::Perturbative => perturbative_point(ctx, alpha),
    }
}

fn map_grid<T, F>(grid: &[f64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(f64) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        grid.par_iter().map(|&a| f(a)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.iter().map(|&a| f(a)).collect()
    }
}

/// Sweeps the Brillouin zone with the selected method. Failures at single
/// grid points are recorded and skipped; the sweep itself only fails on
/// invalid configuration.
pub fn band_sweep(config: &RunConfig, method: Method) -> Result<BandStructure> {
    config.validate()?;
    let chain = config.chain()?;
    let material = config.material()?;
    let modulation = config.modulation()?;
    let ctx = SweepContext {
        chain: &chain,
        material: &material,
        modulation: &modulation,
        trunc: TruncationParams::new(config.truncation_k)?,
        muller: config.muller_config(),
        ode: config.ode_config(),
        seed_spread: config.seed_perturbation,
    };
    let grid = symmetric_grid(config.alpha_grid, chain.period())?;
    let solved = map_grid(&grid, |alpha| solve_point(&ctx, alpha, method));

    let mut spectra = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (&alpha, result) in grid.iter().zip(solved) {
        match result {
            Ok(entries) => spectra.push(Some(QuasifrequencySpectrum {
                alpha,
                entries,
                method,
            })),
            Err(e) => {
                failures.push((alpha, e.to_string()));
                spectra.push(None);
            }
        }
    }
    let mut structure = BandStructure::from_parts(grid, spectra, method, modulation.omega())?;
    structure.failures = failures;
    Ok(structure)
}

/// Maximal grid intervals on which some quasifrequency has |Im| above the
/// tolerance. A missing grid point ends the interval.
pub fn detect_k_gaps(bands: &BandStructure, tolerance_im: f64) -> Vec<KGap> {
    let mut gaps = Vec::new();
    let mut current: Option<KGap> = None;
    for (gi, slot) in bands.spectra().iter().enumerate() {
        let peak = slot.as_ref().and_then(|s| {
            s.entries
                .iter()
                .max_by(|a, b| a.im.abs().partial_cmp(&b.im.abs()).expect("finite"))
                .map(|w| (w.im.abs(), w.re))
        });
        match peak {
            Some((p, re)) if p > tolerance_im => {
                let alpha = bands.grid()[gi];
                match &mut current {
                    Some(gap) => {
                        gap.alpha_hi = alpha;
                        if p > gap.max_im {
                            gap.max_im = p;
                            gap.re_omega = re;
                        }
                    }
                    None => {
                        current = Some(KGap {
                            alpha_lo: alpha,
                            alpha_hi: alpha,
                            max_im: p,
                            re_omega: re,
                        })
                    }
                }
            }
            _ => {
                if let Some(gap) = current.take() {
                    gaps.push(gap);
                }
            }
        }
    }
    if let Some(gap) = current.take() {
        gaps.push(gap);
    }
    gaps
}

/// Coverage segment of one band between two consecutive grid points,
/// circular in the folding window: when the direct path is longer than the
/// wrapped one the band left through a boundary.
fn coverage_segments(a: f64, b: f64, half: f64, segments: &mut Vec<(f64, f64)>) {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if hi - lo <= 2.0 * half - (hi - lo) {
        segments.push((lo, hi));
    } else {
        segments.push((-half, lo));
        segments.push((hi, half));
    }
}

/// Maximal intervals of the folding window not covered by any band's real
/// part. Intervals narrower than `resolution` are dropped; gaps touching a
/// boundary are flagged as wrapping.
pub fn detect_band_gaps(bands: &BandStructure, resolution: f64) -> Vec<BandGap> {
    let half = bands.omega() / 2.0;
    let mut segments: Vec<(f64, f64)> = Vec::new();
    for band in bands.bands() {
        for pair in band.windows(2) {
            match (pair[0], pair[1]) {
                (Some(a), Some(b)) => coverage_segments(a.re, b.re, half, &mut segments),
                (Some(a), None) => segments.push((a.re, a.re)),
                _ => {}
            }
        }
        if let Some(Some(v)) = band.last() {
            segments.push((v.re, v.re));
        }
    }
    segments.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in segments {
        match merged.last_mut() {
            Some(last) if lo <= last.1 + resolution => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    let mut gaps = Vec::new();
    let mut push = |lo: f64, hi: f64| {
        if hi - lo > resolution {
            gaps.push(BandGap {
                lo,
                hi,
                wraps: lo <= -half + resolution || hi >= half - resolution,
            });
        }
    };
    let mut cursor = -half;
    for &(lo, hi) in &merged {
        push(cursor, lo);
        cursor = cursor.max(hi);
    }
    push(cursor, half);
    gaps
}

/// Entries of one spectrum that coincide within DEGENERATE_POINT_TOL,
/// including the pair that touches across the folding boundary.
pub fn detect_degenerate_points(bands: &BandStructure) -> Vec<DegeneratePoint> {
    let omega = bands.omega();
    let mut points = Vec::new();
    for slot in bands.spectra().iter().flatten() {
        let entries = &slot.entries;
        for i in 0..entries.len() {
            for j in (i + 1)..entries.len() {
                let d_re = entries[j].re - entries[i].re;
                let d_re = d_re - omega * (d_re / omega).round();
                let d_im = entries[j].im - entries[i].im;
                if d_re.hypot(d_im) <= DEGENERATE_POINT_TOL {
                    points.push(DegeneratePoint {
                        alpha: slot.alpha,
                        omega_0: entries[i].re,
                        bands: (i, j),
                    });
                }
            }
        }
    }
    points
}

/// Worst mismatch between the sorted spectra at +alpha and -alpha, plus the
/// momentum-gap table split by zone side.
pub fn reciprocity_report(bands: &BandStructure, tolerance_im: f64) -> ReciprocityReport {
    let n = bands.grid().len();
    let omega = bands.omega();
    let mut deviation = 0.0f64;
    for j in 0..n / 2 {
        let (left, right) = (&bands.spectra()[j], &bands.spectra()[n - 1 - j]);
        let (Some(l), Some(r)) = (left, right) else { continue };
        if l.entries.len() != r.entries.len() {
            deviation = f64::INFINITY;
            continue;
        }
        // multiset comparison with the circular metric: sorting is not
        // stable across the folding boundary, matching by distance is
        let d = sup_min_distance(&l.entries, &r.entries, omega)
            .max(sup_min_distance(&r.entries, &l.entries, omega));
        deviation = deviation.max(d);
    }

    let all = detect_k_gaps(bands, tolerance_im);
    let mut left_gaps: Vec<KGap> = Vec::new();
    let mut right_gaps: Vec<KGap> = Vec::new();
    for gap in all {
        if gap.alpha_hi < 0.0 {
            left_gaps.push(gap);
        } else if gap.alpha_lo > 0.0 {
            right_gaps.push(gap);
        }
        // gaps straddling zero have no mirror partner to compare against
    }
    // pair gaps across sides by the frequency they sit at: a gap blocking
    // one direction only has no partner and counts with its whole length
    let wrap = |d: f64| (d - omega * (d / omega).round()).abs();
    let pair_tol = omega / 20.0;
    let mut taken = vec![false; left_gaps.len()];
    let mut asymmetry = 0.0f64;
    for r in &right_gaps {
        let partner = left_gaps
            .iter()
            .enumerate()
            .filter(|(i, l)| !taken[*i] && wrap(l.re_omega - r.re_omega) <= pair_tol)
            .min_by(|(_, a), (_, b)| {
                let da = wrap(a.re_omega - r.re_omega);
                let db = wrap(b.re_omega - r.re_omega);
                da.partial_cmp(&db).expect("finite")
            })
            .map(|(i, _)| i);
        match partner {
            Some(i) => {
                taken[i] = true;
                asymmetry = asymmetry.max((left_gaps[i].length() - r.length()).abs());
            }
            None => asymmetry = asymmetry.max(r.length()),
        }
    }
    for (i, l) in left_gaps.iter().enumerate() {
        if !taken[i] {
            asymmetry = asymmetry.max(l.length());
        }
    }
    ReciprocityReport {
        deviation,
        left_gaps,
        right_gaps,
        max_length_asymmetry: asymmetry,
    }
}

fn sup_min_distance(from: &[Complex64], to: &[Complex64], omega: f64) -> f64 {
    from.iter()
        .map(|a| {
            to.iter()
                .map(|b| circular_distance(*a, *b, omega))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// err_abs: the largest distance, over the shared grid, between the exact
/// spectra and the capacitance-approximation spectra (symmetric Hausdorff
/// matching, so a collapsed degenerate pair still compares cleanly).
/// Solver failures propagate; this comparison has no missing points.
pub fn compare_exact_vs_capacitance(config: &RunConfig) -> Result<f64> {
    config.validate()?;
    let chain = config.chain()?;
    let material = config.material()?;
    let modulation = config.modulation()?;
    let ctx = SweepContext {
        chain: &chain,
        material: &material,
        modulation: &modulation,
        trunc: TruncationParams::new(config.truncation_k)?,
        muller: config.muller_config(),
        ode: config.ode_config(),
        seed_spread: config.seed_perturbation,
    };
    let grid = symmetric_grid(config.alpha_grid, chain.period())?;
    let omega = modulation.omega();
    let per_point = map_grid(&grid, |alpha| -> Result<f64> {
        let approx = floquet_point(&ctx, alpha)?;
        let roots = exact_point(&ctx, alpha)?;
        Ok(sup_min_distance(&approx, &roots, omega)
            .max(sup_min_distance(&roots, &approx, omega)))
    });
    let mut err_abs = 0.0f64;
    for (&alpha, r) in grid.iter().zip(per_point) {
        match r {
            Ok(e) => err_abs = err_abs.max(e),
            Err(e) => return Err(Error::Solver(format!("at alpha = {alpha}: {e}"))),
        }
    }
    Ok(err_abs)
}

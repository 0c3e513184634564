//! Command dispatch: validated configs in, deterministic artifacts out.
//!
//! Band tables go to CSV, analysis reports to JSON, one artifact per
//! command, named `<command>.<ext>` inside the `--out` directory. Exit
//! codes: 0 success, 1 solver failure (diagnostic on standard error),
//! 2 configuration error. `RESONA1D_THREADS` caps the sweep parallelism.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{band_sweep, compare_exact_vs_capacitance, symmetric_grid, Method};
use crate::capacitance::static_bands;
use crate::config::{parse_config, RunConfig};
use crate::error::{Error, Result};
use crate::exact::{exact_quasifrequencies, fold_quasifrequency, seed_triples_from_values, TruncationParams};
use crate::floquet::floquet_quasifrequencies;
use crate::model::{MaterialConstants, Modulation, ResonatorChain};
use crate::perturbation::{f1_block, m_first_order};
use crate::report::{write_band_csv, CrossingReport, Report};

#[derive(Debug, Parser)]
#[command(name = "resona1d", version, about = "Subwavelength band structures of time-modulated resonator chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static capacitance bands over the Brillouin zone, to CSV
    StaticBands(RunArgs),
    /// Band structure with the configured or selected method, to CSV
    Bands(RunArgs),
    /// Exact quasifrequencies (DtN + root finder), to CSV
    Exact(RunArgs),
    /// Largest deviation between the exact and capacitance routes, to JSON
    Compare(RunArgs),
    /// Band gaps, k-gaps, and reciprocity report, to JSON
    Gaps(RunArgs),
    /// Folded band crossings with first-order splitting estimates, to JSON
    Perturbation(RunArgs),
    /// Runtime comparison of the two routes across chain size and truncation
    Bench(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Path to a JSON run configuration
    #[arg(long)]
    pub config: PathBuf,
    /// Sweep method for `bands` and `gaps`: static|floquet|exact|perturbative
    #[arg(long)]
    pub method: Option<String>,
    /// Directory receiving the artifact (default: current directory)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the alpha grid size (odd, at least 3)
    #[arg(long)]
    pub grid: Option<usize>,
    /// Override the Fourier truncation K
    #[arg(long)]
    pub k: Option<usize>,
}

/// Parse the process arguments, dispatch, and map errors to exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            classify(&e)
        }
    }
}

fn classify(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::MixedAmplitudes => 2,
        _ => 1,
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::StaticBands(args) => sweep_to_csv(args, Some(Method::Static), "static-bands.csv"),
        Command::Bands(args) => sweep_to_csv(args, None, "bands.csv"),
        Command::Exact(args) => sweep_to_csv(args, Some(Method::Exact), "exact.csv"),
        Command::Compare(args) => compare(args),
        Command::Gaps(args) => gaps(args),
        Command::Perturbation(args) => perturbation(args),
        Command::Bench(args) => bench(args),
    }
}

fn load(args: &RunArgs, forced: Option<Method>) -> Result<RunConfig> {
    let mut config = parse_config(&args.config)?;
    match (&args.method, forced) {
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "this command fixes the method; drop --method".into(),
            ));
        }
        (Some(name), None) => config.method = parse_method(name)?,
        (None, Some(m)) => config.method = m,
        (None, None) => {}
    }
    if let Some(grid) = args.grid {
        config.alpha_grid = grid;
    }
    if let Some(k) = args.k {
        config.truncation_k = k;
    }
    config.validate()?;
    init_threads()?;
    Ok(config)
}

fn parse_method(name: &str) -> Result<Method> {
    match name {
        "static" => Ok(Method::Static),
        "floquet" => Ok(Method::Floquet),
        "exact" => Ok(Method::Exact),
        "perturbative" => Ok(Method::Perturbative),
        other => Err(Error::Config(format!(
            "unknown method {other:?}; expected static|floquet|exact|perturbative"
        ))),
    }
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("RESONA1D_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| Error::Config(format!("RESONA1D_THREADS must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(Error::Config(
            "RESONA1D_THREADS must be a positive integer, got 0".into(),
        ));
    }
    #[cfg(feature = "parallel")]
    {
        // a second initialization (tests, repeated calls) keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn artifact_path(args: &RunArgs, name: &str) -> Result<PathBuf> {
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)
        .map_err(|e| Error::Solver(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Solver(format!("cannot write {}: {e}", path.display())))
}

fn sweep_to_csv(args: &RunArgs, forced: Option<Method>, name: &str) -> Result<()> {
    let config = load(args, forced)?;
    let bands = band_sweep(&config, config.method)?;
    for (alpha, message) in bands.failures() {
        eprintln!("alpha = {alpha:+.6e}: {message}");
    }
    if bands.spectra().iter().all(Option::is_none) {
        return Err(Error::Solver("no grid point solved".into()));
    }
    let mut buf = Vec::new();
    write_band_csv(&mut buf, &bands).expect("vec write");
    let path = artifact_path(args, name)?;
    write_text(&path, std::str::from_utf8(&buf).expect("utf8 csv"))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn compare(args: &RunArgs) -> Result<()> {
    let config = load(args, None)?;
    let err_abs = compare_exact_vs_capacitance(&config)?;
    let mut report = Report::new(config.hash());
    report.err_abs = Some(err_abs);
    let path = artifact_path(args, "compare.json")?;
    write_text(&path, &report.to_json())?;
    println!("err_abs = {err_abs:.3e}");
    println!("wrote {}", path.display());
    Ok(())
}

fn gaps(args: &RunArgs) -> Result<()> {
    let config = load(args, None)?;
    let bands = band_sweep(&config, config.method)?;
    for (alpha, message) in bands.failures() {
        eprintln!("alpha = {alpha:+.6e}: {message}");
    }
    if bands.spectra().iter().all(Option::is_none) {
        return Err(Error::Solver("no grid point solved".into()));
    }
    // the coverage is sampled, so gaps are resolved down to one grid step
    // of band motion: 2*Omega/(grid-1)
    let resolution = 2.0 * config.modulation.omega / (config.alpha_grid - 1) as f64;
    let reports = bands.reports(config.tolerances.im_threshold, resolution);
    let mut report = Report::new(config.hash());
    println!(
        "{} band gaps, {} k-gaps, reciprocity deviation {:.3e}",
        reports.band_gaps.len(),
        reports.k_gaps.len(),
        reports.reciprocity.deviation
    );
    report.gaps = Some(reports.band_gaps);
    report.k_gaps = Some(reports.k_gaps);
    report.reciprocity = Some(reports.reciprocity);
    let path = artifact_path(args, "gaps.json")?;
    write_text(&path, &report.to_json())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn perturbation(args: &RunArgs) -> Result<()> {
    let config = load(args, None)?;
    let chain = config.chain()?;
    let material = config.material()?;
    let modulation = config.modulation()?;
    let crossings = locate_crossings(&config, &chain, &material, &modulation)?;
    let mut report = Report::new(config.hash());
    println!("{} folded crossings with first-order estimates", crossings.len());
    for c in &crossings {
        println!(
            "  alpha = {:+.6e}, omega_0 = {:+.6e}, gap estimate {:.3e}",
            c.alpha, c.omega_0, c.gap_estimate
        );
    }
    report.crossings = Some(crossings);
    let path = artifact_path(args, "perturbation.json")?;
    write_text(&path, &report.to_json())?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Scan the folded static bands for pairwise crossings and refine each by
/// bisection. Signed bands +-w_i are compared through the wrapped
/// difference, so crossings sitting on the folding boundary are found too.
fn locate_crossings(
    config: &RunConfig,
    chain: &ResonatorChain,
    material: &MaterialConstants,
    modulation: &Modulation,
) -> Result<Vec<CrossingReport>> {
    let omega = modulation.omega();
    let grid = symmetric_grid(config.alpha_grid, chain.period())?;
    let n = chain.n();
    let signed = |alpha: f64| -> Result<Vec<f64>> {
        let w = static_bands(alpha, material.delta, chain, material)?;
        Ok((0..2 * n)
            .map(|b| if b % 2 == 0 { w[b / 2] } else { -w[b / 2] })
            .collect())
    };
    let wrap = |d: f64| d - omega * (d / omega).round();

    let mut crossings: Vec<CrossingReport> = Vec::new();
    let mut values_lo = signed(grid[0])?;
    for j in 1..grid.len() {
        let values_hi = signed(grid[j])?;
        for p in 0..2 * n {
            for q in (p + 1)..2 * n {
                let d_lo = wrap(values_lo[p] - values_lo[q]);
                let d_hi = wrap(values_hi[p] - values_hi[q]);
                // a sign change through the wrap jump is not a crossing
                if d_lo * d_hi > 0.0 || d_lo.abs() + d_hi.abs() > omega / 2.0 {
                    continue;
                }
                let (mut lo, mut hi) = (grid[j - 1], grid[j]);
                let mut f_lo = d_lo;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let vm = signed(mid)?;
                    let f_mid = wrap(vm[p] - vm[q]);
                    if f_mid * f_lo > 0.0 {
                        lo = mid;
                        f_lo = f_mid;
                    } else {
                        hi = mid;
                    }
                }
                let alpha = 0.5 * (lo + hi);
                if alpha.abs() < 1e-9 {
                    continue; // the zero band makes the expansion defective
                }
                let omega_0 = fold_quasifrequency(signed(alpha)?[p], omega);
                let duplicate = crossings.iter().any(|c| {
                    (c.alpha - alpha).abs() < 1e-7 && wrap(c.omega_0 - omega_0).abs() < 1e-7 * omega
                });
                if duplicate {
                    continue;
                }
                match expand_crossing(alpha, omega_0, chain, material, modulation) {
                    Ok(Some(c)) => crossings.push(c),
                    Ok(None) => {}
                    Err(e) => eprintln!("alpha = {alpha:+.6e}: {e}"),
                }
            }
        }
        values_lo = values_hi;
    }
    crossings.sort_by(|a, b| {
        (a.alpha, a.omega_0)
            .partial_cmp(&(b.alpha, b.omega_0))
            .expect("finite")
    });
    Ok(crossings)
}

fn expand_crossing(
    alpha: f64,
    omega_0: f64,
    chain: &ResonatorChain,
    material: &MaterialConstants,
    modulation: &Modulation,
) -> Result<Option<CrossingReport>> {
    let expansion = m_first_order(alpha, chain, material, modulation)?;
    let block = f1_block(&expansion, omega_0)?;
    if block.multiplicity() != 2 {
        // the corollary covers simple pairwise crossings only
        return Ok(None);
    }
    let epsilon = expansion.epsilon();
    let estimate = crate::perturbation::gap_size_estimate(&expansion, omega_0, epsilon)?;
    let perturbed = block
        .perturbed_quasifrequencies(epsilon)
        .iter()
        .map(|w| [w.re, w.im])
        .collect();
    Ok(Some(CrossingReport {
        alpha,
        omega_0: block.omega_0(),
        multiplicity: 2,
        gap_estimate: estimate,
        perturbed,
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub exact_ms: f64,
    pub capacitance_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
struct BenchReport {
    config_hash: String,
    rows: Vec<BenchRow>,
}

fn bench(args: &RunArgs) -> Result<()> {
    let config = load(args, None)?;
    let rows = bench_rows(&config)?;
    let mut table = String::from("  N  K   exact_ms   capacitance_ms\n");
    for row in &rows {
        table.push_str(&format!(
            "  {}  {}  {:>9.3}  {:>15.3}\n",
            row.n, row.k, row.exact_ms, row.capacitance_ms
        ));
    }
    print!("{table}");
    std::io::stdout().flush().ok();
    let report = BenchReport {
        config_hash: config.hash(),
        rows,
    };
    let mut json = serde_json::to_string_pretty(&report).expect("bench serializes");
    json.push('\n');
    let path = artifact_path(args, "bench.json")?;
    write_text(&path, &json)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Median-of-3 runtime of both routes on unit chains of 1..=3 resonators
/// and truncations 1..=3, at two interior momenta. Material, folding
/// frequency, modulation amplitude, and tolerances come from the config;
/// the phase pattern is pi/i as in the reference runs.
pub fn bench_rows(config: &RunConfig) -> Result<Vec<BenchRow>> {
    let material = config.material()?;
    let base = config.modulation()?;
    let omega = base.omega();
    let eps = (0..base.n())
        .map(|i| base.eps_kappa(i))
        .fold(0.0f64, f64::max);
    let mut rows = Vec::new();
    for n in 1..=3usize {
        let chain = ResonatorChain::from_lengths_and_gaps(&vec![1.0; n], &vec![1.0; n])?;
        let phases: Vec<f64> = (1..=n).map(|i| std::f64::consts::PI / i as f64).collect();
        let modulation = Modulation::new(
            omega,
            vec![eps; n],
            vec![eps; n],
            phases.clone(),
            phases,
        )?;
        let alphas = [
            std::f64::consts::PI / (4.0 * chain.period()),
            std::f64::consts::PI / (2.0 * chain.period()),
            3.0 * std::f64::consts::PI / (4.0 * chain.period()),
        ];
        // seeding is shared scaffolding; the timed stages are the root
        // search (exact route) and the monodromy integration (capacitance)
        let mut seeds = Vec::with_capacity(alphas.len());
        for &alpha in &alphas {
            let values =
                floquet_quasifrequencies(alpha, &chain, &material, &modulation, &config.ode_config())?;
            seeds.push(seed_triples_from_values(&values, config.seed_perturbation));
        }
        for k in 1..=3usize {
            let trunc = TruncationParams::new(k)?;
            let exact_ms = median_ms(|| {
                for (&alpha, triples) in alphas.iter().zip(&seeds) {
                    exact_quasifrequencies(
                        alpha,
                        &chain,
                        &material,
                        &modulation,
                        trunc,
                        triples,
                        &config.muller_config(),
                    )?;
                }
                Ok(())
            })?;
            let capacitance_ms = median_ms(|| {
                for &alpha in &alphas {
                    floquet_quasifrequencies(alpha, &chain, &material, &modulation, &config.ode_config())?;
                }
                Ok(())
            })?;
            rows.push(BenchRow {
                n,
                k,
                exact_ms,
                capacitance_ms,
            });
        }
    }
    Ok(rows)
}

fn median_ms(mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut times = Vec::with_capacity(5);
    for _ in 0..5 {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(times[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_parse_and_unknown_ones_do_not() {
        assert_eq!(parse_method("static").unwrap(), Method::Static);
        assert_eq!(parse_method("floquet").unwrap(), Method::Floquet);
        assert_eq!(parse_method("exact").unwrap(), Method::Exact);
        assert_eq!(parse_method("perturbative").unwrap(), Method::Perturbative);
        let err = parse_method("cap").unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn config_errors_exit_2_and_solver_errors_exit_1() {
        assert_eq!(classify(&Error::Config("x".into())), 2);
        assert_eq!(classify(&Error::MixedAmplitudes), 2);
        assert_eq!(classify(&Error::Solver("x".into())), 1);
        assert_eq!(classify(&Error::NoConvergence(30)), 1);
    }

    #[test]
    fn crossing_scan_finds_the_staggered_pair_crossings() {
        // common-amplitude variant of the staggered-phase chain; the middle
        // band crosses the folding boundary twice (once per sign)
        let mut config = crate::config::preset("kgap_phases").unwrap();
        config.modulation.eps_rho = vec![0.05; 3];
        config.modulation.eps_kappa = vec![0.05; 3];
        config.alpha_grid = 41;
        let chain = config.chain().unwrap();
        let material = config.material().unwrap();
        let modulation = config.modulation().unwrap();
        let crossings = locate_crossings(&config, &chain, &material, &modulation).unwrap();
        assert!(!crossings.is_empty());
        // every reported crossing carries a pairwise estimate
        for c in &crossings {
            assert_eq!(c.multiplicity, 2);
            assert!(c.gap_estimate >= 0.0);
            assert_eq!(c.perturbed.len(), 2);
            assert!(c.omega_0 >= -modulation.omega() / 2.0);
            assert!(c.omega_0 < modulation.omega() / 2.0);
        }
        // the boundary crossing near alpha = 0.199 from the scan
        assert!(
            crossings.iter().any(|c| (c.alpha - 0.1991).abs() < 1e-3),
            "crossings at {:?}",
            crossings.iter().map(|c| c.alpha).collect::<Vec<_>>()
        );
        // mirrored partner on the negative side
        assert!(crossings.iter().any(|c| (c.alpha + 0.1991).abs() < 1e-3));
    }
}

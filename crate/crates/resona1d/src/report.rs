//! Result emission: the band CSV table and the JSON analysis report.
//!
//! The CSV is the plottable artifact: header `alpha,band,re_omega,im_omega,
//! method`, one row per grid point and band, floats printed with 17
//! significant digits so rewriting the same run is byte-identical. The JSON
//! report carries the derived analysis keyed by the hash of the config that
//! produced it; sections that do not apply to a command are absent rather
//! than null.

use std::io::{self, Write};

use serde::Serialize;

use crate::analysis::{BandGap, BandStructure, KGap, ReciprocityReport};

pub const CSV_HEADER: &str = "alpha,band,re_omega,im_omega,method";

/// One row per (grid point, band index). Band indices follow the sorted
/// order of the spectrum entries at that point; grid points whose solve
/// failed contribute no rows.
pub fn write_band_csv<W: Write>(out: &mut W, bands: &BandStructure) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for (alpha, slot) in bands.grid().iter().zip(bands.spectra()) {
        let Some(spectrum) = slot else { continue };
        for (band, w) in spectrum.entries.iter().enumerate() {
            writeln!(
                out,
                "{:.16e},{},{:.16e},{:.16e},{}",
                alpha, band, w.re, w.im, bands.method()
            )?;
        }
    }
    Ok(())
}

/// JSON report body. Every report names the config hash it came from;
/// the remaining sections appear only when the command computed them.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaps: Option<Vec<BandGap>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_gaps: Option<Vec<KGap>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reciprocity: Option<ReciprocityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub err_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossings: Option<Vec<CrossingReport>>,
}

impl Report {
    pub fn new(config_hash: String) -> Self {
        Report {
            config_hash,
            gaps: None,
            k_gaps: None,
            reciprocity: None,
            err_abs: None,
            crossings: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A folded band crossing located by the perturbation command: where it
/// sits, how wide the first-order theory expects the splitting to be, and
/// the predicted perturbed quasifrequencies.
#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    pub alpha: f64,
    pub omega_0: f64,
    pub multiplicity: usize,
    pub gap_estimate: f64,
    pub perturbed: Vec<[f64; 2]>,
}

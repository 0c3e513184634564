//! Run configuration: JSON ingestion, validation against the model
//! invariants, named presets, and the config hash that ties every emitted
//! report back to its inputs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::Method;
use crate::error::{Error, Result};
use crate::model::{MaterialConstants, Modulation, ResonatorChain};
use crate::muller::MullerConfig;
use crate::ode::OdeConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub lengths: Vec<f64>,
    pub gaps: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub delta: f64,
    pub v0: f64,
    pub vr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationConfig {
    #[serde(alias = "Omega")]
    pub omega: f64,
    pub eps_rho: Vec<f64>,
    pub eps_kappa: Vec<f64>,
    pub phi_rho: Vec<f64>,
    pub phi_kappa: Vec<f64>,
}

/// Numerical knobs; angles are radians everywhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub muller: f64,
    pub ode_rel: f64,
    pub ode_abs: f64,
    /// |Im omega| above this counts as a momentum-gap point.
    pub im_threshold: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            muller: 1e-12,
            ode_rel: 1e-10,
            ode_abs: 1e-12,
            im_threshold: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub chain: ChainConfig,
    pub material: MaterialConfig,
    pub modulation: ModulationConfig,
    #[serde(default = "default_truncation", alias = "truncation_K")]
    pub truncation_k: usize,
    /// Number of quasi-momentum grid points; odd so alpha = 0 is sampled.
    #[serde(default = "default_grid")]
    pub alpha_grid: usize,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Relative fan radius for the root-finder seed triples.
    #[serde(default = "default_seed", alias = "seed-perturbation")]
    pub seed_perturbation: f64,
}

fn default_truncation() -> usize {
    3
}

fn default_grid() -> usize {
    101
}

fn default_seed() -> f64 {
    1e-5
}

impl RunConfig {
    pub fn chain(&self) -> Result<ResonatorChain> {
        ResonatorChain::from_lengths_and_gaps(&self.chain.lengths, &self.chain.gaps)
    }

    pub fn material(&self) -> Result<MaterialConstants> {
        MaterialConstants::new(self.material.delta, self.material.v0, self.material.vr)
    }

    pub fn modulation(&self) -> Result<Modulation> {
        Modulation::new(
            self.modulation.omega,
            self.modulation.eps_rho.clone(),
            self.modulation.eps_kappa.clone(),
            self.modulation.phi_rho.clone(),
            self.modulation.phi_kappa.clone(),
        )
    }

    pub fn muller_config(&self) -> MullerConfig {
        MullerConfig {
            tolerance: self.tolerances.muller,
            ..MullerConfig::default()
        }
    }

    pub fn ode_config(&self) -> OdeConfig {
        OdeConfig {
            rel_tol: self.tolerances.ode_rel,
            abs_tol: self.tolerances.ode_abs,
            ..OdeConfig::default()
        }
    }

    /// Builds every domain object once, surfacing the first violated model
    /// invariant, then checks the sweep-level preconditions.
    pub fn validate(&self) -> Result<()> {
        let chain = self.chain()?;
        self.material()?;
        let modulation = self.modulation()?;
        if modulation.n() != chain.n() {
            return Err(Error::Config(format!(
                "modulation arrays cover {} resonators but the chain has {}",
                modulation.n(),
                chain.n()
            )));
        }
        if self.alpha_grid < 3 || self.alpha_grid % 2 == 0 {
            return Err(Error::Config(format!(
                "alpha_grid must be an odd count of at least 3, got {}",
                self.alpha_grid
            )));
        }
        if self.truncation_k == 0 {
            return Err(Error::Config("truncation_k must be at least 1".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("muller", t.muller),
            ("ode_rel", t.ode_rel),
            ("ode_abs", t.ode_abs),
            ("im_threshold", t.im_threshold),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "tolerance {name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.seed_perturbation.is_finite() && self.seed_perturbation > 0.0) {
            return Err(Error::Config(format!(
                "seed_perturbation must be positive, got {}",
                self.seed_perturbation
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialized form; reports carry it so any
    /// artifact can be traced to its exact inputs.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Reads and validates a JSON run configuration.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parses a JSON run configuration from a string.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let config: RunConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
    config.validate()?;
    Ok(config)
}

/// Named presets shipped with the crate; the same files live under
/// presets/ for use through --config.
pub const PRESET_NAMES: [&str; 5] = [
    "modulated_n3",
    "single_resonator",
    "static_equidistant",
    "static_nonequidistant",
    "kgap_phases",
];

pub fn preset(name: &str) -> Result<RunConfig> {
    let text = match name {
        "modulated_n3" => include_str!("../../../presets/modulated_n3.json"),
        "single_resonator" => include_str!("../../../presets/single_resonator.json"),
        "static_equidistant" => include_str!("../../../presets/static_equidistant.json"),
        "static_nonequidistant" => include_str!("../../../presets/static_nonequidistant.json"),
        "kgap_phases" => include_str!("../../../presets/kgap_phases.json"),
        _ => {
            return Err(Error::Config(format!(
                "unknown preset {name:?}; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    parse_config_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn every_preset_parses_and_validates() {
        for name in PRESET_NAMES {
            let config = preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(config.chain.lengths.len(), config.modulation.eps_rho.len());
        }
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        assert!(matches!(preset("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn staggered_preset_carries_the_expected_parameters() {
        let config = preset("kgap_phases").unwrap();
        assert_eq!(config.modulation.omega, 0.03);
        assert_eq!(config.modulation.eps_kappa, vec![0.2; 3]);
        assert_eq!(config.modulation.phi_kappa, vec![0.0, PI / 2.0, PI]);
    }

    #[test]
    fn missing_fields_are_named() {
        let err = parse_config_str(
            r#"{
                "chain": { "lengths": [1.0] },
                "material": { "delta": 1e-4, "v0": 1.0, "vr": 1.0 },
                "modulation": { "omega": 0.05, "eps_rho": [0.0], "eps_kappa": [0.0],
                                "phi_rho": [0.0], "phi_kappa": [0.0] }
            }"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("gaps"), "{err}");
    }

    #[test]
    fn mismatched_array_lengths_are_rejected() {
        let err = parse_config_str(
            r#"{
                "chain": { "lengths": [1.0, 1.0], "gaps": [1.0, 1.0] },
                "material": { "delta": 1e-4, "v0": 1.0, "vr": 1.0 },
                "modulation": { "omega": 0.05, "eps_rho": [0.1], "eps_kappa": [0.1],
                                "phi_rho": [0.0], "phi_kappa": [0.0] }
            }"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn capitalized_frequency_key_is_accepted() {
        let config = parse_config_str(
            r#"{
                "chain": { "lengths": [1.0], "gaps": [1.0] },
                "material": { "delta": 1e-4, "v0": 1.0, "vr": 1.0 },
                "modulation": { "Omega": 0.05, "eps_rho": [0.1], "eps_kappa": [0.1],
                                "phi_rho": [0.0], "phi_kappa": [0.0] },
                "truncation_K": 2
            }"#,
        )
        .unwrap();
        assert_eq!(config.modulation.omega, 0.05);
        assert_eq!(config.truncation_k, 2);
        assert_eq!(config.alpha_grid, 101);
        assert_eq!(config.seed_perturbation, 1e-5);
    }

    #[test]
    fn even_grids_are_rejected() {
        let mut config = preset("single_resonator").unwrap();
        config.alpha_grid = 100;
        assert!(matches!(config.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn the_hash_is_stable_and_input_sensitive() {
        let a = preset("kgap_phases").unwrap();
        let b = preset("kgap_phases").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        let mut c = a.clone();
        c.truncation_k += 1;
        assert_ne!(a.hash(), c.hash());
    }
}

//! Subwavelength band structure of one-dimensional chains of high-contrast
//! resonators whose density and bulk modulus are modulated in time.
//!
//! Two routes to the quasifrequencies are implemented: an exact solver built
//! on the Dirichlet-to-Neumann map of the truncated Fourier system, and the
//! capacitance-matrix approximation (static eigenvalues, or a Floquet
//! monodromy computation when the modulation is switched on). A first-order
//! perturbation expansion predicts how degenerate bands split.
//!
//! ```
//! use resona1d::capacitance::static_bands;
//! use resona1d::model::{MaterialConstants, ResonatorChain};
//!
//! let chain = ResonatorChain::from_lengths_and_gaps(&[1.0], &[1.0]).unwrap();
//! let material = MaterialConstants::new(1e-4, 1.0, 1.0).unwrap();
//! let bands = static_bands(std::f64::consts::FRAC_PI_2, 1e-4, &chain, &material).unwrap();
//! assert!((bands[0] - 0.02).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod capacitance;
pub mod cli;
pub mod config;
pub mod dtn;
pub mod error;
pub mod exact;
pub mod floquet;
pub mod linalg;
pub mod model;
pub mod muller;
pub mod ode;
pub mod perturbation;
pub mod report;

pub use error::{Error, Result};

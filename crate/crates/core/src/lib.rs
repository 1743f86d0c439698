//! Random-matrix and quantum-graph models of single-channel scattering with
//! absorption, for systems with symplectic (GSE) and unitary (GUE) symmetry.
//!
//! * [`rmt`]: GSE/GUE sampling in the quaternion representation, Kramers
//!   doublets, semicircle unfolding.
//! * [`graph`]: quantum graphs, eigen wavenumbers and open-graph S matrices.
//! * [`scattering`]: Heidelberg-model ensembles with fictitious absorption
//!   channels, calibration and S-matrix correlations.
//! * [`analytic`]: closed-form distributions of `R`, `r`, `Re K`, `Im K`.
//! * [`stats`]: spacing statistics, number variance, histograms, KS tests.

pub mod analytic;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod quadrature;
pub mod rmt;
pub mod rng;
pub mod scattering;
pub mod stats;

pub use analytic::{Absorption, AbsorptionParams, DistributionCurve, GammaFit, Variable};
pub use error::{Error, Result};
pub use graph::{GraphScatterSample, GraphSpec, GraphSpectrum};
pub use linalg::{CMatrix, CVector};
pub use rmt::{QuaternionHermitian, SpectrumLabel, SpectrumSample, SymmetryClass};
pub use scattering::{
    Calibration, Correlation, CouplingSpec, PreparedEnsemble, ScatterRecord, ScatteringConfig, ScatteringEnsemble,
};
pub use stats::{Histogram, StatCurve};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

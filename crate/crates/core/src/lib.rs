//! Bayesian spatial capture-recapture for paired detectors.
//!
//! Each trap station carries two detectors that record mutually exclusive
//! attributes of an animal (left and right flank photographs, say). An animal
//! has to enter a station before either detector can record it, so the model
//! separates the trap entry probability `p0 * exp(-d^2 / 2 sigma^2)` from the
//! per-detector detection probability `phi`. Records seen by only one detector
//! are reconciled through a latent linkage between the two detector lists, and
//! population size is handled by data augmentation.
//!
//! Modules:
//! - [`model`]: domain types, cell probabilities, collapsed likelihood, log-posterior
//! - [`linkage`]: zero augmentation and the latent linkage of detector-2 rows
//! - [`sampler`]: Metropolis-within-Gibbs sampler and posterior summaries
//! - [`simulate`]: data simulator, scenario grid and back-simulation coverage
//! - [`oracle`]: brute-force evaluators and identifiability diagnostics
//! - [`io`]: CSV formats and density rasters

pub mod error;
pub mod history;
pub mod io;
pub mod linkage;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod simulate;

pub use error::{Error, Result};
pub use history::History;
pub use linkage::{augment, AugmentedData, Linkage, LinkageProposal};
pub use model::{
    AugmentedState, CaptureData, CaptureRow, CellProbs, DetectionModel, ModelKind, ModelParams,
    ParamKey, Point, ReducedParams, RowKind, Sex, StateSpace, SufficientStats, TrapArray,
    LOG_ZERO,
};
pub use sampler::{run_chain, McmcConfig, PosteriorSamples, Summary};

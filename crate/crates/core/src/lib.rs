//! Fractional-order normalized subband p-norm (FoNSPN) adaptive filtering.
//!
//! * [`signalgen`]: Gaussian, symmetric alpha-stable and AR(1) sources
//! * [`filterbank`]: cosine-modulated analysis banks and subband frames
//! * [`adaptive`]: NSAF, NSPN and FoNSPN updates
//! * [`theory`]: fractional-order interval, step-size bound, steady-state MSD
//! * [`harness`]: Monte Carlo system identification and CSV export

pub mod adaptive;
pub mod error;
pub mod filterbank;
pub mod harness;
pub mod signalgen;
pub mod theory;

pub use adaptive::{AdaptiveFilter, AlgoConfig, Algorithm, FilterState};
pub use error::{Error, Result};
pub use filterbank::{design_bank, FilterBank, SubbandFrame};
pub use harness::{run_experiment, run_trial, ExperimentConfig, ExperimentResult};
pub use signalgen::{AlphaStableParams, NoiseKind, SourceConfig};

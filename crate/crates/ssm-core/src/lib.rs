//! Secure spatial modulation (SSM) link-level library.
//!
//! The crate models a wiretap setting in which a transmitter (Alice) sends
//! a confidential message to a legitimate receiver (Bob) while an
//! eavesdropper (Eve) listens. Information rides both on the index of the
//! single active transmit antenna and on a conventional constellation
//! symbol; artificial noise radiated in the null space of Bob's channel
//! degrades Eve only. The modules follow the processing chain:
//!
//! - [`linalg`]: small dense complex matrices, null-space extraction,
//!   Cholesky whitening, counter-based random streams.
//! - [`constellation`]: Gray-labeled QAM/PSK construction and demapping.
//! - [`channel`]: Rayleigh wiretap scenarios, antenna selection into an
//!   effective channel, received-signal synthesis.
//! - [`sm_link`]: bit mapping and the power-split transmit vector with
//!   artificial-noise injection.
//! - [`detector`]: three receivers behind a common trait, each with exact
//!   complex-multiplication accounting.
//! - [`secrecy`]: Monte Carlo finite-alphabet mutual information, secrecy
//!   rate, and the per-antenna SLNR metric.
//! - [`tas`]: transmit-antenna-selection strategies behind a common trait.
//! - [`pa`]: power-allocation strategies behind a common trait.
//! - [`dnn`]: a small trainable network that learns the power-allocation
//!   factor from channel realizations.

pub mod channel;
pub mod constellation;
pub mod detector;
pub mod dnn;
pub mod linalg;
pub mod pa;
pub mod secrecy;
pub mod sm_link;
pub mod tas;

pub use channel::{gen_scenario, receive, select, ReceiverSide, Scenario, SelectedScenario};
pub use constellation::{Constellation, ConstellationKind};
pub use detector::{DetectionResult, Detector};
pub use linalg::{sample_cn, ComplexMatrix, RngStream};
pub use secrecy::{MiEstimate, SrEstimate};
pub use sm_link::{PaSplit, SmSymbol};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The matrix has full numerical column rank, so no null space exists.
    #[error("no null space: numerical rank {rank} fills all {cols} columns")]
    DegenerateRank { rank: usize, cols: usize },

    /// A leading minor of a supposedly positive-definite matrix was not positive.
    #[error("matrix not positive definite: leading minor {index} gives {value:.3e}")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("invalid constellation size {m} for {kind}")]
    InvalidModulationOrder { kind: &'static str, m: usize },

    #[error("bit word {bits:#x} does not fit in {width} bits")]
    WidthMismatch { bits: u32, width: u32 },

    /// Antenna selection leaves no null space for artificial noise.
    #[error("selection of {selected} antennas leaves no null space against {n_b} receive antennas")]
    NullSpaceEmpty { selected: usize, n_b: usize },

    #[error("invalid antenna selection: {0}")]
    InvalidSelection(String),

    #[error("power-allocation factor {beta} outside [{min}, {max}]")]
    BetaOutOfBracket { beta: f64, min: f64, max: f64 },

    #[error("subset budget exceeded: {subsets} candidate subsets > cap {cap}")]
    BudgetExceeded { subsets: u128, cap: u128 },

    #[error("effective channel column {index} has zero norm")]
    ZeroChannelColumn { index: usize },

    #[error("dataset is empty or too small: {0}")]
    EmptyDataset(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("unknown strategy '{0}'")]
    UnknownStrategy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

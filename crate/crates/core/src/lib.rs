//! Product-polar codes.
//!
//! A polar code of length `N = N_r N_c` can be read as an `N_c x N_r` (irregular) product of
//! short polar codes, and the product of two polar codes is again a polar code. This crate
//! provides the frozen-set constructions going both ways, SC and SCL decoders, the two-step
//! product-then-polar decoder, its latency model, and a reproducible Monte-Carlo harness.
//!
//! ```
//! use prodpolar::construction::{product_frozen_set, FrozenSet};
//!
//! let row = FrozenSet::new(4, vec![0]).unwrap();
//! let col = FrozenSet::new(4, vec![0, 1]).unwrap();
//! assert_eq!(product_frozen_set(&row, &col).indices(), &[0, 1, 2, 3, 4, 5, 6, 7, 8, 12]);
//! ```

pub mod config;
pub mod construction;
pub mod decoders;
pub mod error;
pub mod latency;
pub mod polar;
pub mod simulator;
pub mod two_step;

pub use construction::{CodeSpec, FrozenSet, ReliabilityOrder};
pub use decoders::{ListCandidate, MetricMode, SoftOutput};
pub use error::{Error, Result};
pub use polar::{BitMatrix, BitVector, LlrMatrix, NatMatrix};
pub use simulator::{ChannelConfig, DecoderConfig, StopRule, TrialStats};
pub use two_step::{TwoStepConfig, TwoStepOutcome, Variant};

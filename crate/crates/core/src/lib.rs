//! Forced-gap post-selection for quantum LDPC decoding.
//!
//! A decoding problem is a check matrix `H`, a logical action matrix `A` and
//! independent fault priors. [`relay`] finds candidate corrections with a
//! memory belief-propagation relay, [`gap`] turns one baseline run and one
//! forced run per observable into a confidence gap and accept/reject
//! decision, [`oracle`] computes the exact quantities by enumeration for small
//! problems, and [`harness`] runs Monte Carlo experiments and threshold
//! sweeps.

pub mod codes;
pub mod dem;
pub mod error;
pub mod f2;
pub mod gap;
pub mod harness;
pub mod oracle;
pub mod problem;
pub mod relay;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use f2::{BitVec, SparseBitMatrix};
pub use gap::{decide, decoded_class, run_forced_gap, ForcedGapEngine, GapOutcome, GapValue};
pub use problem::{DecodingProblem, LogicalClass, Syndrome};
pub use relay::{relay_decode, DecodeOutcome, RelayConfig, RelayDecoder};

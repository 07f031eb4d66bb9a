//! Belief-propagation decoders for quantum LDPC decoding problems.
//!
//! A decoding problem is a triple of a check matrix `H`, an action matrix `A`
//! and a vector of independent error probabilities `p`. Given a syndrome
//! `σ = He`, the decoders in this crate look for a correction `ê` with
//! `Hê = σ`; the correction succeeds logically when `Aê = Ae`.
//!
//! The crate is organised bottom-up:
//!
//! - [`gf2`]: sparse binary vectors and matrices.
//! - [`problem`]: decoding problems, their transforms, desk-scale builders and
//!   the on-disk interchange format.
//! - [`bp`]: one min-sum leg with memory-biased priors (standard BP, Mem-BP
//!   and disordered-memory BP are all parameterisations of it).
//! - [`relay`]: the relay ensemble that chains legs and keeps the lowest-weight
//!   solution.
//! - [`oracle`]: exhaustive reference decoders for small problems.
//! - [`bench`]: seeded, parallel Monte Carlo estimation of logical error rates.

pub mod bench;
pub mod bp;
mod error;
pub mod gf2;
pub mod oracle;
pub mod problem;
pub mod relay;

pub use error::{Error, Result};
pub use gf2::{BitVector, SparseBinaryMatrix};
pub use problem::{DecodingProblem, PriorVector, RowType};
pub use relay::{DecodeResult, Ensembling, RelayDecoder, RelaySchedule};

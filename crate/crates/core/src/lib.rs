//! Decoding and simulation of CSS quantum LDPC codes.
//!
//! X errors are decoded from `hz` syndromes by message passing ([`mp`]).
//! When message passing fails, either stabilizer inactivation ([`si`]) or
//! order-0 ordered statistics decoding ([`osd`]) post-processes its soft
//! output. [`sim`] runs Monte Carlo experiments over depolarizing noise.

pub mod channel;
pub mod code;
pub mod gf2;
pub mod mp;
pub mod osd;
pub mod si;
pub mod sim;

pub use code::CssCode;
pub use gf2::{BitVec, SparseBitMatrix};
pub use mp::{Algorithm, DecodeOutcome, DecoderConfig, LlrVector, Schedule};

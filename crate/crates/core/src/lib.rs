//! Distribution matchers for probabilistic amplitude shaping and their
//! hierarchical composition.
//!
//! The building blocks are constant-composition matching ([`ccdm`]),
//! lowest-cost lookup tables ([`lutdm`]) and enumerative sphere shaping
//! ([`ess`]). [`hidm`] stacks them into layers and [`ppm`] builds the
//! pulse-position structured variant. [`sweeps`] runs the design-space
//! searches used to compare them.

pub mod ccdm;
pub mod config;
pub mod error;
pub mod ess;
pub mod hidm;
pub mod lutdm;
pub mod matcher;
pub mod ppm;
pub mod shaping;
pub mod sweeps;

/// Index into a matcher's output alphabet.
pub type Symbol = u16;

pub use error::{Error, Result};
pub use matcher::{verify_dm, DistributionMatcher, DmKind, VerificationReport};
pub use shaping::{Alphabet, AmplitudeSeq, BitWord, Distribution, Rate, RateLossMode};

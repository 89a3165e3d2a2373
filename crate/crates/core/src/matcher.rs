//! The contract shared by every distribution matcher, and a brute-force
//! verifier for it.

use std::any::Any;
use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shaping::{bits_to_index, BitWord, Rate};
use crate::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DmKind {
    Ccdm,
    Lut,
    Ess,
    Hidm,
    Ppm,
}

impl fmt::Display for DmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ccdm => "ccdm",
            Self::Lut => "lut",
            Self::Ess => "ess",
            Self::Hidm => "hidm",
            Self::Ppm => "ppm",
        })
    }
}

/// Fixed-to-fixed map from `k` uniform bits to `N` output symbols.
///
/// Output symbols are indices into the matcher's output alphabet: amplitude
/// indices on the first layer, lower-layer matcher indices above it.
pub trait DistributionMatcher: fmt::Debug + Send + Sync {
    fn kind(&self) -> DmKind;

    /// `k`
    fn input_bits(&self) -> usize;

    /// `N`
    fn block_len(&self) -> usize;

    fn alphabet_size(&self) -> usize;

    /// Per-symbol additive cost the matcher was designed against.
    fn costs(&self) -> &[f64];

    /// Average number of occurrences of each output symbol per codeword,
    /// over the `2^k` equiprobable inputs. Sums to `N`.
    fn occupancy(&self) -> Vec<f64>;

    /// Mean total cost of a codeword under uniform input.
    fn mean_cost(&self) -> f64 {
        self.occupancy()
            .iter()
            .zip(self.costs())
            .map(|(o, c)| o * c)
            .sum()
    }

    /// `2^k`
    fn support_size(&self) -> BigUint {
        BigUint::one() << self.input_bits()
    }

    fn rate(&self) -> Rate {
        Rate::new(self.input_bits() as u64, self.block_len() as u64)
    }

    /// Codeword for input index `index < 2^k`.
    fn encode_index(&self, index: &BigUint) -> Result<Vec<Symbol>>;

    /// Inverse of [`encode_index`](Self::encode_index); fails for sequences
    /// outside the codebook.
    fn decode_index(&self, seq: &[Symbol]) -> Result<BigUint>;

    fn encode(&self, bits: &[bool]) -> Result<Vec<Symbol>> {
        if bits.len() != self.input_bits() {
            return Err(Error::LengthMismatch {
                expected: self.input_bits(),
                found: bits.len(),
            });
        }
        self.encode_index(&bits_to_index(bits))
    }

    fn decode(&self, seq: &[Symbol]) -> Result<Vec<bool>> {
        let index = self.decode_index(seq)?;
        Ok(BitWord::from_index(&index, self.input_bits())?.into_bits())
    }

    fn contains(&self, seq: &[Symbol]) -> bool {
        self.decode_index(seq).is_ok()
    }

    /// Bits needed to store the encoding tables (or trellis) of this matcher.
    fn storage_bits(&self) -> BigUint;

    fn as_any(&self) -> &dyn Any;
}

/// A single contract violation with the input that exposed it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    EncodeFailed { input: String, error: String },
    WrongLength { input: String, length: usize },
    SymbolOutOfRange { input: String, symbol: Symbol },
    RoundtripMismatch { input: String, decoded: Option<String> },
    DuplicateCodeword { input: String, other: String },
    MeanCostMismatch { declared: f64, brute_force: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub kind: DmKind,
    pub input_bits: usize,
    pub block_len: usize,
    pub exhaustive: bool,
    pub checked: u64,
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Minimum number of sampled inputs when exhaustive checking is too large.
pub const MIN_SAMPLES: u64 = 1_000;

/// Checks the matcher contract: roundtrip, injectivity, block length,
/// alphabet range and (when exhaustive) the declared mean cost.
pub fn verify_dm(
    dm: &dyn DistributionMatcher,
    exhaustive_limit: u64,
    samples: u64,
    seed: u64,
) -> VerificationReport {
    let k = dm.input_bits();
    let exhaustive = k < 64 && (1u64 << k) <= exhaustive_limit;
    let inputs: Vec<BigUint> = if exhaustive {
        (0..1u64 << k).map(BigUint::from).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = dm.support_size();
        (0..samples.max(MIN_SAMPLES))
            .map(|_| rng.gen_biguint_below(&bound))
            .collect()
    };

    let mut report = VerificationReport {
        kind: dm.kind(),
        input_bits: k,
        block_len: dm.block_len(),
        exhaustive,
        checked: inputs.len() as u64,
        violations: Vec::new(),
    };
    let costs = dm.costs().to_vec();
    let mut seen: HashMap<Vec<Symbol>, &BigUint> = HashMap::new();
    let mut cost_sum = 0.0;
    for input in &inputs {
        let label = || input.to_string();
        let seq = match dm.encode_index(input) {
            Ok(seq) => seq,
            Err(e) => {
                report.violations.push(Violation::EncodeFailed {
                    input: label(),
                    error: e.to_string(),
                });
                continue;
            }
        };
        if seq.len() != dm.block_len() {
            report.violations.push(Violation::WrongLength {
                input: label(),
                length: seq.len(),
            });
        }
        if let Some(&s) = seq.iter().find(|&&s| s as usize >= dm.alphabet_size()) {
            report.violations.push(Violation::SymbolOutOfRange {
                input: label(),
                symbol: s,
            });
            continue;
        }
        cost_sum += seq.iter().map(|&s| costs[s as usize]).sum::<f64>();
        match dm.decode_index(&seq) {
            Ok(ref decoded) if decoded == input => {}
            other => report.violations.push(Violation::RoundtripMismatch {
                input: label(),
                decoded: other.ok().map(|d| d.to_string()),
            }),
        }
        if let Some(prev) = seen.insert(seq, input) {
            // sampling with replacement can draw the same input twice
            if prev != input {
                report.violations.push(Violation::DuplicateCodeword {
                    input: label(),
                    other: prev.to_string(),
                });
            }
        }
    }
    if exhaustive && !inputs.is_empty() {
        let brute = cost_sum / inputs.len() as f64;
        let declared = dm.mean_cost();
        let scale = brute.abs().max(1.0);
        if (brute - declared).abs() > 1e-9 * scale {
            report.violations.push(Violation::MeanCostMismatch {
                declared,
                brute_force: brute,
            });
        }
    }
    report
}

/// Every codeword of a matcher in input order, when `2^k <= limit`.
pub fn codebook(dm: &dyn DistributionMatcher, limit: u64) -> Option<Vec<Vec<Symbol>>> {
    let size = dm.support_size().to_u64()?;
    if size > limit {
        return None;
    }
    (0..size)
        .map(|i| dm.encode_index(&BigUint::from(i)).ok())
        .collect()
}

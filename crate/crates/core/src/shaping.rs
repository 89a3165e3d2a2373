//! Amplitude alphabets, bit words, Maxwell-Boltzmann fitting, entropy and
//! rate loss.
//!
//! Amplitudes are the odd levels `1, 3, ..., 2M-1`. Internally every
//! matcher works on symbol indices (`level = 2 * symbol + 1`), which keeps
//! amplitude and virtual alphabets on the same footing.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Symbol;

/// Exact rate `K_tot / N_tot`.
pub type Rate = Ratio<u64>;

/// Bisection interval for the Maxwell-Boltzmann parameter.
pub const LAMBDA_MAX: f64 = 64.0;
pub const LAMBDA_ITERATIONS: usize = 200;

/// Slack allowed on the mean-energy range before `TargetOutOfRange` is
/// raised; absorbs rounding in recursively averaged energies.
const ENERGY_SLACK: f64 = 1e-9;

/// The amplitude alphabet `{1, 3, ..., 2M-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || size > Symbol::MAX as usize + 1 {
            return Err(Error::InvalidStructure(format!(
                "alphabet size {size} not in 1..=65536"
            )));
        }
        Ok(Self { size })
    }

    /// Number of amplitude levels `M`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn levels(&self) -> Vec<u32> {
        (0..self.size as u32).map(|i| 2 * i + 1).collect()
    }

    pub fn energies(&self) -> Vec<u64> {
        (0..self.size as u64).map(|i| (2 * i + 1) * (2 * i + 1)).collect()
    }

    pub fn energies_f64(&self) -> Vec<f64> {
        self.energies().into_iter().map(|e| e as f64).collect()
    }

    /// Mean energy of the uniform distribution, the largest MB target.
    pub fn uniform_mean_energy(&self) -> f64 {
        self.energies().iter().sum::<u64>() as f64 / self.size as f64
    }

    pub fn level_of(&self, symbol: Symbol) -> u32 {
        2 * symbol as u32 + 1
    }

    pub fn symbol_of(&self, level: u32) -> Result<Symbol> {
        if level % 2 == 1 && ((level - 1) / 2) < self.size as u32 {
            Ok(((level - 1) / 2) as Symbol)
        } else {
            Err(Error::InvalidSymbol {
                symbol: level,
                alphabet_size: self.size,
            })
        }
    }
}

/// Fixed-length bit word; its integer value is read MSB first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitWord(Vec<bool>);

impl BitWord {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    /// `value` written MSB first on `len` bits.
    pub fn from_index(value: &BigUint, len: usize) -> Result<Self> {
        if value.bits() as usize > len {
            return Err(Error::IndexOutOfRange {
                index: value.to_string(),
                bits: len,
            });
        }
        Ok(Self(
            (0..len)
                .map(|i| value.bit((len - 1 - i) as u64))
                .collect(),
        ))
    }

    pub fn from_u64(value: u64, len: usize) -> Result<Self> {
        Self::from_index(&BigUint::from(value), len)
    }

    pub fn to_index(&self) -> BigUint {
        bits_to_index(&self.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.0
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

pub(crate) fn bits_to_index(bits: &[bool]) -> BigUint {
    let mut value = BigUint::zero();
    for (i, &b) in bits.iter().rev().enumerate() {
        if b {
            value.set_bit(i as u64, true);
        }
    }
    value
}

pub(crate) fn bits_to_u64(bits: &[bool]) -> u64 {
    debug_assert!(bits.len() <= 64);
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

pub(crate) fn u64_to_bits(value: u64, len: usize, out: &mut Vec<bool>) {
    out.extend((0..len).map(|i| (value >> (len - 1 - i)) & 1 == 1));
}

/// Output block of a matcher, as amplitude levels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AmplitudeSeq(Vec<u32>);

impl AmplitudeSeq {
    pub fn new(levels: Vec<u32>, alphabet: &Alphabet) -> Result<Self> {
        for &a in &levels {
            alphabet.symbol_of(a)?;
        }
        Ok(Self(levels))
    }

    pub fn from_symbols(symbols: &[Symbol]) -> Self {
        Self(symbols.iter().map(|&s| 2 * s as u32 + 1).collect())
    }

    pub fn to_symbols(&self, alphabet: &Alphabet) -> Result<Vec<Symbol>> {
        self.0.iter().map(|&a| alphabet.symbol_of(a)).collect()
    }

    pub fn levels(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn energy(&self) -> u64 {
        energy(&self.0)
    }
}

impl fmt::Display for AmplitudeSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Total energy `sum a_i^2` of a sequence of amplitude levels.
pub fn energy(levels: &[u32]) -> u64 {
    levels.iter().map(|&a| a as u64 * a as u64).sum()
}

/// Probability distribution over alphabet symbols.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Tolerance on the normalization check.
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.is_empty()
            || probs.iter().any(|p| !p.is_finite() || *p < 0.0)
            || (total - 1.0).abs() > Self::TOLERANCE
        {
            return Err(Error::InvalidStructure(format!(
                "not a probability distribution (sum {total})"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights (e.g. symbol occupancies).
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        // also rejects NaN
        if total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidStructure("weights sum to zero".into()));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(size: usize) -> Self {
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self, costs: &[f64]) -> f64 {
        self.probs.iter().zip(costs).map(|(p, c)| p * c).sum()
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(dist: &Distribution) -> f64 {
    -dist
        .probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// MB distribution `P(a) ~ exp(-lambda a^2)` for a given lambda.
pub fn mb_distribution(alphabet: &Alphabet, lambda: f64) -> Distribution {
    let energies = alphabet.energies_f64();
    // shifted by the smallest energy so that large lambdas do not underflow
    let weights: Vec<f64> = energies
        .iter()
        .map(|e| (-lambda * (e - energies[0])).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    Distribution {
        probs: weights.into_iter().map(|w| w / total).collect(),
    }
}

/// Fits the Maxwell-Boltzmann distribution with the given mean energy by
/// bisection on lambda.
pub fn mb_fit(alphabet: &Alphabet, target_mean_energy: f64) -> Result<Distribution> {
    Ok(mb_fit_lambda(alphabet, target_mean_energy)?.1)
}

/// As [`mb_fit`], also returning the fitted lambda.
pub fn mb_fit_lambda(alphabet: &Alphabet, target: f64) -> Result<(f64, Distribution)> {
    let min = 1.0;
    let max = alphabet.uniform_mean_energy();
    if !target.is_finite() || target < min - ENERGY_SLACK * max || target > max * (1.0 + ENERGY_SLACK)
    {
        return Err(Error::TargetOutOfRange { target, min, max });
    }
    if target >= max || alphabet.size() == 1 {
        return Ok((0.0, Distribution::uniform(alphabet.size())));
    }
    let energies = alphabet.energies_f64();
    let (mut lo, mut hi) = (0.0f64, LAMBDA_MAX);
    for _ in 0..LAMBDA_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mb_distribution(alphabet, mid).mean(&energies) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    Ok((lambda, mb_distribution(alphabet, lambda)))
}

/// Reference distribution used for the rate loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateLossMode {
    /// MB distribution with the matcher's realized mean energy per symbol.
    #[default]
    Mb,
    /// Amplitude distribution induced by the matcher itself.
    Induced,
}

impl FromStr for RateLossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mb" => Ok(Self::Mb),
            "induced" => Ok(Self::Induced),
            other => Err(Error::Config(format!("unknown rate-loss mode {other:?}"))),
        }
    }
}

impl fmt::Display for RateLossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mb => "mb",
            Self::Induced => "induced",
        })
    }
}

pub fn rate_to_f64(rate: &Rate) -> f64 {
    *rate.numer() as f64 / *rate.denom() as f64
}

/// `H - R`, where `H` is the entropy of the reference distribution selected
/// by `mode`.
pub fn rate_loss(
    mean_energy_per_symbol: f64,
    rate: &Rate,
    alphabet: &Alphabet,
    mode: RateLossMode,
    induced: Option<&Distribution>,
) -> Result<f64> {
    let reference = match mode {
        RateLossMode::Mb => entropy(&mb_fit(alphabet, mean_energy_per_symbol)?),
        RateLossMode::Induced => entropy(induced.ok_or_else(|| {
            Error::InvalidStructure("induced mode needs the induced distribution".into())
        })?),
    };
    Ok(reference - rate_to_f64(rate))
}

/// Formats a real with six significant digits.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// `ceil(log2(n))` for `n >= 1`, zero for `n <= 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

/// Lossy `log2` of a big integer, exact enough for reporting.
pub fn big_log2(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    (n >> shift).to_f64().unwrap_or(0.0).log2() + shift as f64
}

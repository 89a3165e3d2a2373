//! Constant-composition distribution matching by exact lexicographic ranking
//! of multiset permutations.
//!
//! The codebook of a [`CcdmMatcher`] is the first `2^k` sequences of its
//! composition in lexicographic order, where `k = floor(log2 multinomial)`.
//! Ranking is exact (arbitrary precision), so encode and decode are inverse
//! bijections without any finite-precision arithmetic coding.

use std::any::Any;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{DistributionMatcher, DmKind};
use crate::shaping::{ceil_log2, rate_loss, Alphabet, Rate, RateLossMode};
use crate::Symbol;

/// Symbol counts of a constant-composition codebook.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Composition {
    counts: Vec<u32>,
}

impl Composition {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() || counts.iter().all(|&c| c == 0) {
            return Err(Error::InvalidStructure(
                "composition needs at least one symbol".into(),
            ));
        }
        Ok(Self { counts })
    }

    pub fn of_sequence(seq: &[Symbol], alphabet_size: usize) -> Result<Self> {
        let mut counts = vec![0u32; alphabet_size];
        for &s in seq {
            *counts.get_mut(s as usize).ok_or(Error::InvalidSymbol {
                symbol: s as u32,
                alphabet_size,
            })? += 1;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// Block length `N`.
    pub fn len(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_cost(&self, costs: &[f64]) -> f64 {
        self.counts
            .iter()
            .zip(costs)
            .map(|(&c, &x)| c as f64 * x)
            .sum()
    }

    /// `N! / prod(n_i!)`.
    pub fn multinomial(&self) -> BigUint {
        multinomial(&self.counts)
    }

    /// `floor(log2 multinomial)`, the number of input bits.
    pub fn input_bits(&self) -> usize {
        (self.multinomial().bits() - 1) as usize
    }
}

/// Multinomial coefficient built as a product of binomials; every
/// intermediate division is exact.
pub fn multinomial(counts: &[u32]) -> BigUint {
    let mut result = BigUint::one();
    let mut n = 0u64;
    for &c in counts {
        for i in 1..=c as u64 {
            n += 1;
            result = result * n / i;
        }
    }
    result
}

/// Number of sequences left after placing `symbol` first, given the
/// multinomial of the remaining counts.
fn completions(total: &BigUint, counts: &[u32], symbol: usize, remaining: usize) -> BigUint {
    total * counts[symbol] / remaining
}

/// The `index`-th sequence of composition `c` in lexicographic order.
///
/// The index may range over the whole constant-composition set; the matcher
/// restricts it to `[0, 2^k)`.
pub fn cc_unrank(c: &Composition, index: &BigUint) -> Result<Vec<Symbol>> {
    let mut total = c.multinomial();
    if *index >= total {
        return Err(Error::IndexOutOfRange {
            index: index.to_string(),
            bits: c.input_bits(),
        });
    }
    let mut counts = c.counts.clone();
    let mut index = index.clone();
    let n = c.len();
    let mut out = Vec::with_capacity(n);
    for remaining in (1..=n).rev() {
        for s in 0..counts.len() {
            if counts[s] == 0 {
                continue;
            }
            let sub = completions(&total, &counts, s, remaining);
            if index < sub {
                out.push(s as Symbol);
                counts[s] -= 1;
                total = sub;
                break;
            }
            index -= sub;
        }
    }
    Ok(out)
}

/// Lexicographic rank of `seq` among the sequences of composition `c`.
pub fn cc_rank(c: &Composition, seq: &[Symbol]) -> Result<BigUint> {
    if Composition::of_sequence(seq, c.alphabet_size()).ok().as_ref() != Some(c) {
        return Err(Error::CompositionMismatch);
    }
    let mut counts = c.counts.clone();
    let mut total = c.multinomial();
    let mut rank = BigUint::zero();
    for (pos, &sym) in seq.iter().enumerate() {
        let remaining = seq.len() - pos;
        for s in 0..sym as usize {
            if counts[s] > 0 {
                rank += completions(&total, &counts, s, remaining);
            }
        }
        total = completions(&total, &counts, sym as usize, remaining);
        counts[sym as usize] -= 1;
    }
    Ok(rank)
}

/// CCDM over an amplitude or virtual alphabet.
#[derive(Debug, Clone)]
pub struct CcdmMatcher {
    composition: Composition,
    bits: usize,
    costs: Vec<f64>,
}

impl CcdmMatcher {
    pub fn new(composition: Composition, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != composition.alphabet_size() {
            return Err(Error::AlphabetMismatch {
                layer: 0,
                expected: composition.alphabet_size(),
                found: costs.len(),
            });
        }
        let bits = composition.input_bits();
        Ok(Self {
            composition,
            bits,
            costs,
        })
    }

    /// CCDM over amplitudes, costed by energy.
    pub fn over_amplitudes(composition: Composition, alphabet: &Alphabet) -> Result<Self> {
        if composition.alphabet_size() != alphabet.size() {
            return Err(Error::AlphabetMismatch {
                layer: 1,
                expected: alphabet.size(),
                found: composition.alphabet_size(),
            });
        }
        Self::new(composition, alphabet.energies_f64())
    }

    pub fn composition(&self) -> &Composition {
        &self.composition
    }
}

impl DistributionMatcher for CcdmMatcher {
    fn kind(&self) -> DmKind {
        DmKind::Ccdm
    }

    fn input_bits(&self) -> usize {
        self.bits
    }

    fn block_len(&self) -> usize {
        self.composition.len()
    }

    fn alphabet_size(&self) -> usize {
        self.composition.alphabet_size()
    }

    fn costs(&self) -> &[f64] {
        &self.costs
    }

    fn occupancy(&self) -> Vec<f64> {
        self.composition.counts.iter().map(|&c| c as f64).collect()
    }

    fn mean_cost(&self) -> f64 {
        self.composition.total_cost(&self.costs)
    }

    fn encode_index(&self, index: &BigUint) -> Result<Vec<Symbol>> {
        if index.bits() as usize > self.bits {
            return Err(Error::IndexOutOfRange {
                index: index.to_string(),
                bits: self.bits,
            });
        }
        cc_unrank(&self.composition, index)
    }

    fn decode_index(&self, seq: &[Symbol]) -> Result<BigUint> {
        let rank = cc_rank(&self.composition, seq)?;
        if rank.bits() as usize > self.bits {
            return Err(Error::RankOverflow {
                rank: rank.to_string(),
                bits: self.bits,
            });
        }
        Ok(rank)
    }

    fn storage_bits(&self) -> BigUint {
        // only the composition is stored
        let width = ceil_log2(self.composition.len() as u64 + 1) as usize;
        BigUint::from(width * self.composition.alphabet_size())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// All weak compositions of `n` into `parts` nonnegative counts, in
/// lexicographic order of the count vectors.
pub fn weak_compositions(n: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(n: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=n {
            prefix.push(c);
            rec(n - c, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(n, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// Input bits needed to reach `rate` on `n` symbols: `ceil(n * rate)`.
pub fn required_bits(n: usize, rate: &Rate) -> u64 {
    let num = n as u64 * rate.numer();
    num.div_ceil(*rate.denom())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedComposition {
    pub composition: Composition,
    pub bits: usize,
    pub cost: f64,
}

/// Compositions of length `n` carrying at least `min_bits`, sorted by
/// (total cost, counts).
pub fn ranked_compositions(n: usize, costs: &[f64], min_bits: u64) -> Vec<RankedComposition> {
    let mut out: Vec<RankedComposition> = weak_compositions(n as u32, costs.len())
        .into_iter()
        .filter_map(|counts| {
            let composition = Composition::new(counts).ok()?;
            let bits = composition.input_bits();
            (bits as u64 >= min_bits).then(|| RankedComposition {
                cost: composition.total_cost(costs),
                composition,
                bits,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.cost
            .total_cmp(&b.cost)
            .then_with(|| a.composition.cmp(&b.composition))
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionObjective {
    MinEnergyAtRate,
    MinRateLossAtRate,
}

/// Exhaustive composition search for a target rate.
pub fn optimize_composition(
    n: usize,
    alphabet: &Alphabet,
    target_rate: &Rate,
    objective: CompositionObjective,
) -> Result<Composition> {
    let costs = alphabet.energies_f64();
    let min_bits = required_bits(n, target_rate);
    let ranked = ranked_compositions(n, &costs, min_bits);
    let best = match objective {
        CompositionObjective::MinEnergyAtRate => ranked.into_iter().next(),
        CompositionObjective::MinRateLossAtRate => {
            let mut scored = Vec::with_capacity(ranked.len());
            for rc in ranked {
                let rate = Rate::new(rc.bits as u64, n as u64);
                // above the uniform mean there is no MB reference to compare with
                match rate_loss(rc.cost / n as f64, &rate, alphabet, RateLossMode::Mb, None) {
                    Ok(loss) => scored.push((loss, rc)),
                    Err(Error::TargetOutOfRange { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            scored
                .into_iter()
                .min_by(|(la, a), (lb, b)| {
                    la.total_cmp(lb)
                        .then_with(|| a.composition.cmp(&b.composition))
                })
                .map(|(_, rc)| rc)
        }
    };
    best.map(|rc| rc.composition).ok_or_else(|| {
        Error::Infeasible(format!(
            "no composition of length {n} over {} symbols carries {min_bits} bits",
            alphabet.size()
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::verify_dm;
    use crate::shaping::{entropy, Distribution};

    fn comp(c: &[u32]) -> Composition {
        Composition::new(c.to_vec()).unwrap()
    }

    /// Brute-force oracle: every multiset permutation, sorted.
    fn brute_force_sequences(c: &Composition) -> Vec<Vec<Symbol>> {
        let n = c.len();
        let m = c.alphabet_size();
        let mut all = Vec::new();
        let total = (m as u64).pow(n as u32);
        for mut x in 0..total {
            let mut seq = vec![0 as Symbol; n];
            for slot in seq.iter_mut().rev() {
                *slot = (x % m as u64) as Symbol;
                x /= m as u64;
            }
            if Composition::of_sequence(&seq, m).ok().as_ref() == Some(c) {
                all.push(seq);
            }
        }
        all
    }

    #[test]
    fn multinomial_examples() {
        assert_eq!(multinomial(&[2, 1]), BigUint::from(3u8));
        assert_eq!(multinomial(&[2, 2]), BigUint::from(6u8));
        assert_eq!(multinomial(&[1, 1, 1, 1]), BigUint::from(24u8));
        assert_eq!(multinomial(&[13, 10, 6, 3]).bits() - 1, 51);
    }

    #[test]
    fn unrank_and_rank_examples() {
        let c = comp(&[2, 1]);
        assert_eq!(cc_unrank(&c, &0u8.into()).unwrap(), vec![0, 0, 1]);
        assert_eq!(cc_unrank(&c, &1u8.into()).unwrap(), vec![0, 1, 0]);
        assert_eq!(cc_rank(&c, &[0, 1, 0]).unwrap(), BigUint::from(1u8));
        assert_eq!(cc_rank(&c, &[1, 0, 0]).unwrap(), BigUint::from(2u8));
        let c = comp(&[3, 0]);
        assert_eq!(c.input_bits(), 0);
        assert_eq!(cc_unrank(&c, &0u8.into()).unwrap(), vec![0, 0, 0]);
        assert_eq!(cc_rank(&c, &[0, 0, 0]).unwrap(), BigUint::zero());
    }

    #[test]
    fn matcher_flags_rank_overflow_and_mismatch() {
        let dm = CcdmMatcher::over_amplitudes(comp(&[2, 1]), &Alphabet::new(2).unwrap()).unwrap();
        assert_eq!(dm.input_bits(), 1);
        assert!(matches!(
            dm.decode_index(&[1, 0, 0]),
            Err(Error::RankOverflow { .. })
        ));
        assert!(matches!(
            dm.decode_index(&[1, 1, 0]),
            Err(Error::CompositionMismatch)
        ));
        assert!(matches!(
            dm.encode_index(&2u8.into()),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert_eq!(dm.encode(&[true]).unwrap(), vec![0, 1, 0]);
    }

    #[test]
    fn verify_reports_constant_energy() {
        let dm = CcdmMatcher::over_amplitudes(comp(&[2, 1]), &Alphabet::new(2).unwrap()).unwrap();
        let report = verify_dm(&dm, 1 << 16, 0, 0);
        assert!(report.passed(), "{report:?}");
        assert_eq!(dm.mean_cost(), 11.0);
    }

    #[test]
    fn unrank_matches_brute_force_small() {
        for counts in [vec![2, 1, 1], vec![1, 2, 0, 2], vec![3, 3], vec![1, 1, 1, 1]] {
            let c = comp(&counts);
            let expected = brute_force_sequences(&c);
            assert_eq!(BigUint::from(expected.len()), c.multinomial());
            for (i, seq) in expected.iter().enumerate() {
                assert_eq!(&cc_unrank(&c, &BigUint::from(i)).unwrap(), seq);
                assert_eq!(cc_rank(&c, seq).unwrap(), BigUint::from(i));
            }
        }
    }

    #[test]
    fn optimize_small_case() {
        // brute force over the 5 compositions of 4 into 2 parts
        let alph = Alphabet::new(2).unwrap();
        let c = optimize_composition(
            4,
            &alph,
            &Rate::new(1, 2),
            CompositionObjective::MinEnergyAtRate,
        )
        .unwrap();
        assert_eq!(c.counts(), &[3, 1]);
        assert_eq!(c.input_bits(), 2);
        assert_eq!(c.total_cost(&alph.energies_f64()), 12.0);
    }

    #[test]
    fn optimize_infeasible() {
        let alph = Alphabet::new(2).unwrap();
        let res = optimize_composition(1, &alph, &Rate::new(1, 1), CompositionObjective::MinEnergyAtRate);
        assert!(matches!(res, Err(Error::Infeasible(_))));
    }

    #[test]
    fn optimize_n32_target_rate() {
        let alph = Alphabet::new(4).unwrap();
        let target = Rate::new(159, 100);
        let c = optimize_composition(32, &alph, &target, CompositionObjective::MinEnergyAtRate)
            .unwrap();
        assert_eq!(c.counts(), &[13, 10, 6, 3]);
        assert_eq!(c.input_bits(), 51);
        let induced = Distribution::from_weights(&[13.0, 10.0, 6.0, 3.0]).unwrap();
        let loss = entropy(&induced) - 51.0 / 32.0;
        assert!((loss - 0.2316).abs() < 5e-4);
        let by_loss = optimize_composition(32, &alph, &target, CompositionObjective::MinRateLossAtRate)
            .unwrap();
        assert!(by_loss.input_bits() >= 51);
    }

    #[test]
    fn required_bits_rounds_up() {
        assert_eq!(required_bits(32, &Rate::new(159, 100)), 51);
        assert_eq!(required_bits(4, &Rate::new(1, 2)), 2);
        assert_eq!(required_bits(320, &Rate::new(507, 320)), 507);
    }

    #[test]
    fn weak_composition_count() {
        assert_eq!(weak_compositions(4, 2).len(), 5);
        assert_eq!(weak_compositions(32, 4).len(), 6545);
        assert_eq!(weak_compositions(10, 8).len(), 19448);
    }
}

//! Enumerative sphere shaping over a bounded-energy trellis.
//!
//! Node `(i, e)` stores the number of length-`(N - i)` suffixes whose energy
//! keeps the total at or below `E_max`, given prefix energy `e`. Only
//! reachable energies are stored. Codewords are indexed lexicographically
//! inside the sphere; the matcher uses the first `2^k` of them.

use std::any::Any;
use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::matcher::{DistributionMatcher, DmKind};
use crate::shaping::Alphabet;
use crate::Symbol;

#[derive(Debug, Clone)]
pub struct EssTrellis {
    n: usize,
    alphabet: Alphabet,
    e_max: u64,
    /// `levels[i]` maps prefix energy to suffix count, `i` in `0..=N`.
    levels: Vec<BTreeMap<u64, BigUint>>,
}

impl EssTrellis {
    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn e_max(&self) -> u64 {
        self.e_max
    }

    /// `T[i][e]`, zero for unreachable nodes.
    pub fn count(&self, i: usize, e: u64) -> BigUint {
        self.levels
            .get(i)
            .and_then(|l| l.get(&e))
            .cloned()
            .unwrap_or_default()
    }

    fn count_ref(&self, i: usize, e: u64) -> Option<&BigUint> {
        self.levels[i].get(&e)
    }

    /// Number of sequences in the sphere, `T[0][0]`.
    pub fn sphere_size(&self) -> BigUint {
        self.count(0, 0)
    }

    /// Stored energy levels at position `i`.
    pub fn level(&self, i: usize) -> impl Iterator<Item = (u64, &BigUint)> {
        self.levels[i].iter().map(|(&e, c)| (e, c))
    }

    pub fn node_count(&self) -> usize {
        self.levels[..self.n].iter().map(BTreeMap::len).sum()
    }

    /// Lexicographic rank `index` inside the sphere.
    pub fn unrank(&self, index: &BigUint) -> Result<Vec<Symbol>> {
        if *index >= self.sphere_size() {
            return Err(Error::IndexOutOfRange {
                index: index.to_string(),
                bits: self.sphere_size().bits() as usize,
            });
        }
        let energies = self.alphabet.energies();
        let mut index = index.clone();
        let mut e = 0u64;
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            for (s, &a2) in energies.iter().enumerate() {
                let Some(c) = self.count_ref(i + 1, e + a2) else {
                    continue;
                };
                if index < *c {
                    out.push(s as Symbol);
                    e += a2;
                    break;
                }
                index -= c;
            }
        }
        Ok(out)
    }

    /// Rank of an in-sphere sequence; fails for sequences outside it.
    pub fn rank(&self, seq: &[Symbol]) -> Result<BigUint> {
        if seq.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: seq.len(),
            });
        }
        let energies = self.alphabet.energies();
        let mut rank = BigUint::zero();
        let mut e = 0u64;
        for (i, &sym) in seq.iter().enumerate() {
            let sym = sym as usize;
            if sym >= energies.len() {
                return Err(Error::InvalidSymbol {
                    symbol: sym as u32,
                    alphabet_size: energies.len(),
                });
            }
            for &a2 in &energies[..sym] {
                if let Some(c) = self.count_ref(i + 1, e + a2) {
                    rank += c;
                }
            }
            e += energies[sym];
            if self.count_ref(i + 1, e).is_none() {
                return Err(Error::Infeasible(format!(
                    "sequence energy exceeds the bound {}",
                    self.e_max
                )));
            }
        }
        Ok(rank)
    }
}

/// Builds the count trellis of all sequences with energy at most `e_max`.
pub fn build_trellis(n: usize, alphabet: &Alphabet, e_max: u64) -> Result<EssTrellis> {
    if n == 0 || e_max < n as u64 {
        return Err(Error::BoundTooSmall { e_max, n });
    }
    let energies = alphabet.energies();
    // forward pass: reachable prefix energies that can still be completed
    let mut reachable: Vec<Vec<u64>> = vec![vec![0]];
    for i in 0..n {
        let remaining_min = (n - i - 1) as u64;
        let mut next: Vec<u64> = reachable[i]
            .iter()
            .flat_map(|&e| energies.iter().map(move |&a2| e + a2))
            .filter(|&e| e + remaining_min <= e_max)
            .collect();
        next.sort_unstable();
        next.dedup();
        reachable.push(next);
    }
    let mut levels: Vec<BTreeMap<u64, BigUint>> = vec![BTreeMap::new(); n + 1];
    levels[n] = reachable[n].iter().map(|&e| (e, BigUint::one())).collect();
    for i in (0..n).rev() {
        let (lower, upper) = levels.split_at_mut(i + 1);
        let next = &upper[0];
        lower[i] = reachable[i]
            .iter()
            .map(|&e| {
                let count: BigUint = energies
                    .iter()
                    .filter_map(|&a2| next.get(&(e + a2)))
                    .sum();
                (e, count)
            })
            .collect();
    }
    Ok(EssTrellis {
        n,
        alphabet: *alphabet,
        e_max,
        levels,
    })
}

/// Trellis storage: `ceil(log2(T + 1))` bits for every stored node at
/// positions `0..N`.
pub fn ess_memory_bits(trellis: &EssTrellis) -> u64 {
    trellis.levels[..trellis.n]
        .iter()
        .flat_map(|l| l.values())
        .map(|c| c.bits())
        .sum()
}

/// Number of length-`n` sequences with each exact total energy.
pub fn energy_spectrum(n: usize, alphabet: &Alphabet) -> BTreeMap<u64, BigUint> {
    let energies = alphabet.energies();
    let mut spectrum: BTreeMap<u64, BigUint> = BTreeMap::from([(0, BigUint::one())]);
    for _ in 0..n {
        let mut next: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (&e, c) in &spectrum {
            for &a2 in &energies {
                *next.entry(e + a2).or_default() += c;
            }
        }
        spectrum = next;
    }
    spectrum
}

/// Smallest energy bound whose sphere holds at least `2^k` sequences.
pub fn minimal_energy_bound(n: usize, alphabet: &Alphabet, k: usize) -> Result<u64> {
    let needed = BigUint::one() << k;
    let mut total = BigUint::zero();
    for (e, c) in energy_spectrum(n, alphabet) {
        total += c;
        if total >= needed {
            return Ok(e);
        }
    }
    Err(Error::Infeasible(format!(
        "2^{k} exceeds {}^{n} sequences",
        alphabet.size()
    )))
}

/// ESS matcher using the first `2^k` sequences of the minimal sphere.
#[derive(Debug)]
pub struct EssMatcher {
    trellis: EssTrellis,
    k: usize,
    costs: Vec<f64>,
    occupancy: OnceLock<Vec<f64>>,
}

pub fn ess_build(n: usize, alphabet: &Alphabet, k: usize) -> Result<EssMatcher> {
    let e_max = minimal_energy_bound(n, alphabet, k)?;
    let trellis = build_trellis(n, alphabet, e_max)?;
    Ok(EssMatcher {
        trellis,
        k,
        costs: alphabet.energies_f64(),
        occupancy: OnceLock::new(),
    })
}

impl EssMatcher {
    pub fn trellis(&self) -> &EssTrellis {
        &self.trellis
    }

    pub fn e_max(&self) -> u64 {
        self.trellis.e_max
    }

    /// Exact symbol counts over the first `2^k` codewords.
    ///
    /// The index range splits into whole subtrees hanging off the path to
    /// the last codeword; subtree totals come from a suffix recursion.
    fn compute_occupancy(&self) -> Vec<f64> {
        let t = &self.trellis;
        let energies = t.alphabet.energies();
        let m = energies.len();
        // occurrences[i][e][s]: total count of symbol s over all valid
        // suffixes from node (i, e)
        let mut occurrences: Vec<BTreeMap<u64, Vec<BigUint>>> = vec![BTreeMap::new(); t.n + 1];
        occurrences[t.n] = t.levels[t.n]
            .keys()
            .map(|&e| (e, vec![BigUint::zero(); m]))
            .collect();
        for i in (0..t.n).rev() {
            let (lower, upper) = occurrences.split_at_mut(i + 1);
            let next = &upper[0];
            for &e in t.levels[i].keys() {
                let mut acc = vec![BigUint::zero(); m];
                for (s, &a2) in energies.iter().enumerate() {
                    if let (Some(sub), Some(c)) = (next.get(&(e + a2)), t.count_ref(i + 1, e + a2))
                    {
                        for (a, b) in acc.iter_mut().zip(sub) {
                            *a += b;
                        }
                        acc[s] += c;
                    }
                }
                lower[i].insert(e, acc);
            }
        }

        let mut total = vec![BigUint::zero(); m];
        let mut remaining = BigUint::one() << self.k;
        let mut e = 0u64;
        'outer: for i in 0..t.n {
            for (s, &a2) in energies.iter().enumerate() {
                let Some(c) = t.count_ref(i + 1, e + a2) else {
                    continue;
                };
                if remaining >= *c {
                    for (a, b) in total.iter_mut().zip(&occurrences[i + 1][&(e + a2)]) {
                        *a += b;
                    }
                    total[s] += c;
                    remaining -= c;
                    if remaining.is_zero() {
                        break 'outer;
                    }
                } else {
                    total[s] += &remaining;
                    e += a2;
                    continue 'outer;
                }
            }
        }
        let size = BigUint::one() << self.k;
        total.iter().map(|c| ratio_to_f64(c, &size)).collect()
    }
}

/// `num / den` for big integers, accurate to double precision.
fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    let shift = den.bits().saturating_sub(60);
    let n = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

impl DistributionMatcher for EssMatcher {
    fn kind(&self) -> DmKind {
        DmKind::Ess
    }

    fn input_bits(&self) -> usize {
        self.k
    }

    fn block_len(&self) -> usize {
        self.trellis.n
    }

    fn alphabet_size(&self) -> usize {
        self.trellis.alphabet.size()
    }

    fn costs(&self) -> &[f64] {
        &self.costs
    }

    fn occupancy(&self) -> Vec<f64> {
        self.occupancy
            .get_or_init(|| self.compute_occupancy())
            .clone()
    }

    fn encode_index(&self, index: &BigUint) -> Result<Vec<Symbol>> {
        if index.bits() as usize > self.k {
            return Err(Error::IndexOutOfRange {
                index: index.to_string(),
                bits: self.k,
            });
        }
        self.trellis.unrank(index)
    }

    fn decode_index(&self, seq: &[Symbol]) -> Result<BigUint> {
        let rank = self.trellis.rank(seq)?;
        if rank.bits() as usize > self.k {
            return Err(Error::RankOverflow {
                rank: rank.to_string(),
                bits: self.k,
            });
        }
        Ok(rank)
    }

    fn storage_bits(&self) -> BigUint {
        BigUint::from(ess_memory_bits(&self.trellis))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

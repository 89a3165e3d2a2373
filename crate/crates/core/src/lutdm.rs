//! Minimum-cost lookup-table matchers.
//!
//! A [`LutFamily`] holds the `L * 2^k` lowest-cost sequences of length `N`
//! ordered by (total cost, lexicographic). Slice `i` of `2^k` consecutive
//! entries is the LUT `D_i`; slices are disjoint by construction and their
//! mean costs are non-decreasing.

use std::any::Any;
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{DistributionMatcher, DmKind};
use crate::shaping::{bits_to_u64, ceil_log2, BitWord};
use crate::Symbol;

/// Sequence spaces up to this size are enumerated in full and sorted.
const FULL_SORT_LIMIT: u64 = 1 << 22;
/// Spaces this small are always sorted in full.
const SMALL_SPACE: u64 = 1 << 12;
/// Sequence spaces up to this size get a dense reverse index.
const DENSE_INDEX_LIMIT: u64 = 1 << 24;

/// Total cost summed left to right. Every ordering decision uses this exact
/// evaluation order so that results do not depend on how a sequence was
/// reached.
pub fn sequence_cost(seq: &[Symbol], costs: &[f64]) -> f64 {
    seq.iter().fold(0.0, |acc, &s| acc + costs[s as usize])
}

/// `M^N`, or `None` when it does not fit in a `u64`.
pub fn space_size(alphabet_size: usize, n: usize) -> Option<u64> {
    (alphabet_size as u64).checked_pow(n as u32)
}

fn cmp_key(cost_a: f64, seq_a: &[Symbol], cost_b: f64, seq_b: &[Symbol]) -> Ordering {
    cost_a.total_cmp(&cost_b).then_with(|| seq_a.cmp(seq_b))
}

/// The `t` lowest sequences of length `n` under (total cost, lexicographic)
/// order.
pub fn enumerate_lowest_cost(costs: &[f64], n: usize, t: u64) -> Result<Vec<Vec<Symbol>>> {
    let flat = lowest_cost_flat(costs, n, t)?;
    Ok(flat.chunks(n).map(<[Symbol]>::to_vec).collect())
}

/// Same as [`enumerate_lowest_cost`], as one flat buffer of `t * n` symbols.
pub fn lowest_cost_flat(costs: &[f64], n: usize, t: u64) -> Result<Vec<Symbol>> {
    if n == 0 || costs.is_empty() {
        return Err(Error::InvalidStructure(
            "LUT sequences need N >= 1 and a nonempty alphabet".into(),
        ));
    }
    let space = space_size(costs.len(), n);
    if space.is_some_and(|s| t > s) {
        return Err(Error::TooMany {
            requested: t.to_string(),
            available: space.unwrap().to_string(),
        });
    }
    match space {
        // sorting everything only pays off when a sizable share is requested
        Some(s) if s <= SMALL_SPACE || (s <= FULL_SORT_LIMIT && s <= 16 * t) => {
            Ok(full_sort_prefix(costs, n, t))
        }
        _ => Ok(best_first_prefix(costs, n, t)),
    }
}

fn write_digits(mut x: u64, m: u64, out: &mut [Symbol]) {
    for slot in out.iter_mut().rev() {
        *slot = (x % m) as Symbol;
        x /= m;
    }
}

/// Materializes all `M^N` sequences (lexicographic order), then a stable
/// sort by cost.
pub(crate) fn full_sort_prefix(costs: &[f64], n: usize, t: u64) -> Vec<Symbol> {
    let m = costs.len() as u64;
    let total = m.pow(n as u32);
    let mut seq = vec![0 as Symbol; n];
    let mut keyed: Vec<(f64, u64)> = (0..total)
        .map(|x| {
            write_digits(x, m, &mut seq);
            (sequence_cost(&seq, costs), x)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = vec![0 as Symbol; t as usize * n];
    for (chunk, &(_, x)) in out.chunks_mut(n).zip(&keyed) {
        write_digits(x, m, chunk);
    }
    out
}

struct Node {
    cost: f64,
    seq: Box<[Symbol]>,
    /// first position that may still be incremented
    start: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_key(self.cost, &self.seq, other.cost, &other.seq)
    }
}

/// Best-first enumeration without materializing the sequence space.
///
/// Symbols are ranked by (cost, index). Each sequence other than the
/// all-cheapest one has a unique parent, obtained by demoting its last
/// non-cheapest position by one rank, and the parent's cost never exceeds the
/// child's. A parent can still follow its child in lexicographic order when
/// rounding makes their summed costs equal, so each cost class is drained
/// from the heap as a whole (following equal-cost children) and emitted in
/// lexicographic order.
pub(crate) fn best_first_prefix(costs: &[f64], n: usize, t: u64) -> Vec<Symbol> {
    let m = costs.len();
    let mut order: Vec<Symbol> = (0..m as Symbol).collect();
    order.sort_by(|&a, &b| costs[a as usize].total_cmp(&costs[b as usize]).then(a.cmp(&b)));
    let mut rank = vec![0usize; m];
    for (r, &s) in order.iter().enumerate() {
        rank[s as usize] = r;
    }

    let mut out = Vec::with_capacity(t as usize * n);
    let mut heap = BinaryHeap::new();
    let root: Box<[Symbol]> = vec![order[0]; n].into_boxed_slice();
    heap.push(Reverse(Node {
        cost: sequence_cost(&root, costs),
        seq: root,
        start: 0,
    }));
    let mut emitted = 0u64;
    let mut class: Vec<Node> = Vec::new();
    while emitted < t {
        let Some(Reverse(first)) = heap.pop() else {
            break;
        };
        let cost = first.cost;
        let mut pending = vec![first];
        while let Some(node) = pending.pop() {
            for j in node.start..n {
                let r = rank[node.seq[j] as usize];
                if r + 1 < m {
                    let mut seq = node.seq.clone();
                    seq[j] = order[r + 1];
                    let child = Node {
                        cost: sequence_cost(&seq, costs),
                        seq,
                        start: j,
                    };
                    if child.cost == cost {
                        pending.push(child);
                    } else {
                        heap.push(Reverse(child));
                    }
                }
            }
            class.push(node);
            if pending.is_empty() {
                if let Some(Reverse(next)) = heap.peek() {
                    if next.cost == cost {
                        pending.push(heap.pop().unwrap().0);
                    }
                }
            }
        }
        class.sort_unstable_by(|a, b| a.seq.cmp(&b.seq));
        for node in class.drain(..) {
            if emitted == t {
                break;
            }
            out.extend_from_slice(&node.seq);
            emitted += 1;
        }
    }
    out
}

#[derive(Debug)]
enum ReverseIndex {
    Dense(Vec<u32>),
    Sparse(HashMap<Box<[Symbol]>, u32>),
}

impl ReverseIndex {
    fn build(entries: &[Symbol], n: usize, alphabet_size: usize) -> Self {
        let count = entries.len() / n;
        match space_size(alphabet_size, n) {
            Some(space) if space <= DENSE_INDEX_LIMIT => {
                let mut table = vec![u32::MAX; space as usize];
                for (pos, seq) in entries.chunks(n).enumerate() {
                    let key = dense_key(seq, alphabet_size);
                    if table[key] == u32::MAX {
                        table[key] = pos as u32;
                    }
                }
                Self::Dense(table)
            }
            _ => {
                let mut map = HashMap::with_capacity(count);
                for (pos, seq) in entries.chunks(n).enumerate() {
                    map.entry(seq.into()).or_insert(pos as u32);
                }
                Self::Sparse(map)
            }
        }
    }

    fn get(&self, seq: &[Symbol], alphabet_size: usize) -> Option<usize> {
        match self {
            Self::Dense(table) => {
                let pos = table[dense_key(seq, alphabet_size)];
                (pos != u32::MAX).then_some(pos as usize)
            }
            Self::Sparse(map) => map.get(seq).map(|&p| p as usize),
        }
    }
}

fn dense_key(seq: &[Symbol], alphabet_size: usize) -> usize {
    seq.iter()
        .fold(0usize, |acc, &s| acc * alphabet_size + s as usize)
}

/// Consecutive energy-ordered slices of the lowest-cost sequences.
#[derive(Debug)]
pub struct LutFamily {
    n: usize,
    k: usize,
    num_luts: usize,
    costs: Vec<f64>,
    entries: Vec<Symbol>,
    index: ReverseIndex,
    mean_costs: Vec<f64>,
    occupancies: Vec<Vec<f64>>,
}

impl LutFamily {
    pub fn build(costs: Vec<f64>, n: usize, k: usize, num_luts: usize) -> Result<Self> {
        let t = lut_entries(k, num_luts)?;
        let entries = lowest_cost_flat(&costs, n, t)?;
        Self::from_entries(costs, n, k, num_luts, entries)
    }

    /// Builds from an already sorted prefix holding at least `num_luts * 2^k`
    /// sequences; extra entries are dropped.
    pub(crate) fn from_sorted_prefix(
        costs: Vec<f64>,
        n: usize,
        k: usize,
        num_luts: usize,
        sorted: &[Symbol],
    ) -> Result<Self> {
        let t = lut_entries(k, num_luts)? as usize;
        if sorted.len() < t * n {
            return Err(Error::TooMany {
                requested: t.to_string(),
                available: (sorted.len() / n.max(1)).to_string(),
            });
        }
        Self::from_entries(costs, n, k, num_luts, sorted[..t * n].to_vec())
    }

    fn from_entries(
        costs: Vec<f64>,
        n: usize,
        k: usize,
        num_luts: usize,
        entries: Vec<Symbol>,
    ) -> Result<Self> {
        if num_luts == 0 {
            return Err(Error::InvalidStructure("a LUT family needs at least one LUT".into()));
        }
        let m = costs.len();
        let slice_len = 1usize << k;
        let mut mean_costs = Vec::with_capacity(num_luts);
        let mut occupancies = Vec::with_capacity(num_luts);
        for i in 0..num_luts {
            let mut sum = 0.0;
            let mut counts = vec![0u64; m];
            for pos in i * slice_len..(i + 1) * slice_len {
                let seq = &entries[pos * n..(pos + 1) * n];
                sum += sequence_cost(seq, &costs);
                for &s in seq {
                    counts[s as usize] += 1;
                }
            }
            mean_costs.push(sum / slice_len as f64);
            occupancies.push(
                counts
                    .into_iter()
                    .map(|c| c as f64 / slice_len as f64)
                    .collect(),
            );
        }
        let index = ReverseIndex::build(&entries, n, m);
        Ok(Self {
            n,
            k,
            num_luts,
            costs,
            entries,
            index,
            mean_costs,
            occupancies,
        })
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn input_bits(&self) -> usize {
        self.k
    }

    pub fn num_luts(&self) -> usize {
        self.num_luts
    }

    pub fn alphabet_size(&self) -> usize {
        self.costs.len()
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn len(&self) -> usize {
        self.num_luts << self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Entry at a global (cost, lex) position.
    pub fn entry(&self, position: usize) -> &[Symbol] {
        &self.entries[position * self.n..(position + 1) * self.n]
    }

    /// Global position of a sequence, if it belongs to the family.
    pub fn position(&self, seq: &[Symbol]) -> Option<usize> {
        if seq.len() != self.n || seq.iter().any(|&s| s as usize >= self.alphabet_size()) {
            return None;
        }
        self.index.get(seq, self.alphabet_size())
    }

    pub fn mean_costs(&self) -> &[f64] {
        &self.mean_costs
    }

    pub fn occupancy(&self, lut: usize) -> &[f64] {
        &self.occupancies[lut]
    }

    /// Memory of the encoding tables: `L * 2^k * N * ceil(log2 M)`.
    pub fn storage_bits(&self) -> BigUint {
        lut_memory_bits(&[self.shape()])
    }

    pub fn shape(&self) -> LutShape {
        LutShape {
            num_luts: self.num_luts as u64,
            k: self.k as u64,
            n: self.n as u64,
            alphabet_size: self.alphabet_size() as u64,
        }
    }

    pub fn lut(self: &Arc<Self>, index: usize) -> Result<LutDm> {
        if index >= self.num_luts {
            return Err(Error::InvalidStructure(format!(
                "LUT {index} out of {} in family",
                self.num_luts
            )));
        }
        Ok(LutDm {
            family: Arc::clone(self),
            index,
        })
    }

    pub fn luts(self: &Arc<Self>) -> Vec<LutDm> {
        (0..self.num_luts)
            .map(|index| LutDm {
                family: Arc::clone(self),
                index,
            })
            .collect()
    }
}

fn lut_entries(k: usize, num_luts: usize) -> Result<u64> {
    (num_luts as u64)
        .checked_mul(1u64.checked_shl(k as u32).filter(|_| k < 63).ok_or_else(|| {
            Error::TooMany {
                requested: format!("2^{k}"),
                available: "u64 range".into(),
            }
        })?)
        .ok_or_else(|| Error::TooMany {
            requested: format!("{num_luts} * 2^{k}"),
            available: "u64 range".into(),
        })
}

/// Builds a family of `num_luts` disjoint LUTs over `costs`.
pub fn build_lut_family(
    costs: Vec<f64>,
    n: usize,
    k: usize,
    num_luts: usize,
) -> Result<Arc<LutFamily>> {
    LutFamily::build(costs, n, k, num_luts).map(Arc::new)
}

/// Which LUT of the family holds `seq`, and the bits it encodes.
pub fn lut_decode(family: &LutFamily, seq: &[Symbol]) -> Result<(usize, BitWord)> {
    let pos = family.position(seq).ok_or(Error::NotInFamily)?;
    let lut = pos >> family.k;
    let value = pos - (lut << family.k);
    Ok((lut, BitWord::from_u64(value as u64, family.k)?))
}

/// One LUT `D_i` of a family.
#[derive(Debug, Clone)]
pub struct LutDm {
    family: Arc<LutFamily>,
    index: usize,
}

impl LutDm {
    pub fn family(&self) -> &Arc<LutFamily> {
        &self.family
    }

    pub fn index(&self) -> usize {
        self.index
    }

    fn slice_start(&self) -> usize {
        self.index << self.family.k
    }

    pub fn encode_u64(&self, value: u64) -> Result<&[Symbol]> {
        if self.family.k < 64 && value >> self.family.k != 0 {
            return Err(Error::IndexOutOfRange {
                index: value.to_string(),
                bits: self.family.k,
            });
        }
        Ok(self.family.entry(self.slice_start() + value as usize))
    }

    pub fn decode_u64(&self, seq: &[Symbol]) -> Result<u64> {
        let pos = self.family.position(seq).ok_or(Error::NotInFamily)?;
        let start = self.slice_start();
        if pos < start || pos >= start + (1usize << self.family.k) {
            return Err(Error::NotInFamily);
        }
        Ok((pos - start) as u64)
    }
}

impl DistributionMatcher for LutDm {
    fn kind(&self) -> DmKind {
        DmKind::Lut
    }

    fn input_bits(&self) -> usize {
        self.family.k
    }

    fn block_len(&self) -> usize {
        self.family.n
    }

    fn alphabet_size(&self) -> usize {
        self.family.alphabet_size()
    }

    fn costs(&self) -> &[f64] {
        &self.family.costs
    }

    fn occupancy(&self) -> Vec<f64> {
        self.family.occupancies[self.index].clone()
    }

    fn mean_cost(&self) -> f64 {
        self.family.mean_costs[self.index]
    }

    fn encode_index(&self, index: &BigUint) -> Result<Vec<Symbol>> {
        let value = index.to_u64().ok_or_else(|| Error::IndexOutOfRange {
            index: index.to_string(),
            bits: self.family.k,
        })?;
        self.encode_u64(value).map(<[Symbol]>::to_vec)
    }

    fn decode_index(&self, seq: &[Symbol]) -> Result<BigUint> {
        self.decode_u64(seq).map(BigUint::from)
    }

    fn encode(&self, bits: &[bool]) -> Result<Vec<Symbol>> {
        if bits.len() != self.family.k {
            return Err(Error::LengthMismatch {
                expected: self.family.k,
                found: bits.len(),
            });
        }
        self.encode_u64(bits_to_u64(bits)).map(<[Symbol]>::to_vec)
    }

    fn storage_bits(&self) -> BigUint {
        lut_memory_bits(&[LutShape {
            num_luts: 1,
            ..self.family.shape()
        }])
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// A LUT given by an explicit table, without any ordering guarantee.
///
/// Entries are not checked for duplicates; [`crate::verify_dm`] reports them.
#[derive(Debug, Clone)]
pub struct Codebook {
    k: usize,
    n: usize,
    costs: Vec<f64>,
    entries: Vec<Vec<Symbol>>,
    index: HashMap<Vec<Symbol>, u64>,
}

impl Codebook {
    pub fn new(entries: Vec<Vec<Symbol>>, costs: Vec<f64>) -> Result<Self> {
        if !entries.len().is_power_of_two() {
            return Err(Error::InvalidStructure(format!(
                "codebook size {} is not a power of two",
                entries.len()
            )));
        }
        let k = entries.len().trailing_zeros() as usize;
        let n = entries[0].len();
        for e in &entries {
            if e.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: e.len(),
                });
            }
            if let Some(&s) = e.iter().find(|&&s| s as usize >= costs.len()) {
                return Err(Error::InvalidSymbol {
                    symbol: s as u32,
                    alphabet_size: costs.len(),
                });
            }
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            index.entry(e.clone()).or_insert(i as u64);
        }
        Ok(Self {
            k,
            n,
            costs,
            entries,
            index,
        })
    }
}

impl DistributionMatcher for Codebook {
    fn kind(&self) -> DmKind {
        DmKind::Lut
    }

    fn input_bits(&self) -> usize {
        self.k
    }

    fn block_len(&self) -> usize {
        self.n
    }

    fn alphabet_size(&self) -> usize {
        self.costs.len()
    }

    fn costs(&self) -> &[f64] {
        &self.costs
    }

    fn occupancy(&self) -> Vec<f64> {
        let mut occ = vec![0.0; self.costs.len()];
        for e in &self.entries {
            for &s in e {
                occ[s as usize] += 1.0;
            }
        }
        let size = self.entries.len() as f64;
        occ.iter_mut().for_each(|o| *o /= size);
        occ
    }

    fn encode_index(&self, index: &BigUint) -> Result<Vec<Symbol>> {
        index
            .to_usize()
            .and_then(|i| self.entries.get(i))
            .cloned()
            .ok_or_else(|| Error::IndexOutOfRange {
                index: index.to_string(),
                bits: self.k,
            })
    }

    fn decode_index(&self, seq: &[Symbol]) -> Result<BigUint> {
        self.index
            .get(seq)
            .map(|&i| BigUint::from(i))
            .ok_or(Error::NotInFamily)
    }

    fn storage_bits(&self) -> BigUint {
        lut_memory_bits(&[LutShape {
            num_luts: 1,
            k: self.k as u64,
            n: self.n as u64,
            alphabet_size: self.costs.len() as u64,
        }])
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Shape of one LUT layer for memory accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LutShape {
    pub num_luts: u64,
    pub k: u64,
    pub n: u64,
    pub alphabet_size: u64,
}

/// Bits to store every encoding table: the sum over layers of
/// `num_luts * 2^k * N * ceil(log2 alphabet_size)`. Reverse (decoding)
/// indices are not counted.
pub fn lut_memory_bits(layers: &[LutShape]) -> BigUint {
    layers
        .iter()
        .map(|l| {
            (BigUint::from(l.num_luts * l.n * ceil_log2(l.alphabet_size) as u64)) << l.k
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::verify_dm;

    fn energies(m: usize) -> Vec<f64> {
        (0..m).map(|i| ((2 * i + 1) * (2 * i + 1)) as f64).collect()
    }

    /// Oracle: materialize everything and sort by (cost, sequence).
    fn sorted_space(costs: &[f64], n: usize) -> Vec<Vec<Symbol>> {
        let m = costs.len();
        let mut all: Vec<(f64, Vec<Symbol>)> = (0..(m as u64).pow(n as u32))
            .map(|x| {
                let mut s = vec![0; n];
                write_digits(x, m as u64, &mut s);
                (sequence_cost(&s, costs), s)
            })
            .collect();
        all.sort_by(|a, b| cmp_key(a.0, &a.1, b.0, &b.1));
        all.into_iter().map(|(_, s)| s).collect()
    }

    #[test]
    fn enumerate_examples() {
        let seqs = enumerate_lowest_cost(&energies(2), 2, 3).unwrap();
        assert_eq!(seqs, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        let seqs = enumerate_lowest_cost(&energies(4), 1, 4).unwrap();
        assert_eq!(seqs, vec![vec![0], vec![1], vec![2], vec![3]]);
        assert!(matches!(
            enumerate_lowest_cost(&energies(2), 2, 5),
            Err(Error::TooMany { .. })
        ));
    }

    #[test]
    fn best_first_matches_full_sort_with_ties() {
        // real-valued, tie-heavy and unsorted costs
        let cases: Vec<Vec<f64>> = vec![
            energies(4),
            vec![2.5, 1.0, 2.5, 0.5],
            vec![6.0, 14.0],
            vec![3.0, 3.0, 3.0],
            vec![0.1, 0.2, 0.30000000000000004, 0.3],
        ];
        for costs in cases {
            for n in 1..=5 {
                let space = (costs.len() as u64).pow(n as u32);
                let oracle: Vec<Symbol> = sorted_space(&costs, n).concat();
                for t in [1, space / 3 + 1, space] {
                    let bf = best_first_prefix(&costs, n, t);
                    assert_eq!(bf, oracle[..t as usize * n], "{costs:?} n={n} t={t}");
                    assert_eq!(full_sort_prefix(&costs, n, t), bf);
                }
            }
        }
    }

    #[test]
    fn family_slices_and_decode() {
        let fam = build_lut_family(energies(2), 2, 1, 2).unwrap();
        let luts = fam.luts();
        assert_eq!(luts[0].encode_u64(0).unwrap(), &[0, 0]);
        assert_eq!(luts[0].encode_u64(1).unwrap(), &[0, 1]);
        assert_eq!(luts[1].encode_u64(0).unwrap(), &[1, 0]);
        assert_eq!(luts[1].encode_u64(1).unwrap(), &[1, 1]);
        assert_eq!(fam.mean_costs(), &[6.0, 14.0]);
        assert_eq!(lut_decode(&fam, &[0, 1]).unwrap(), (0, "1".parse().unwrap()));
        assert_eq!(lut_decode(&fam, &[1, 1]).unwrap(), (1, "1".parse().unwrap()));
        assert_eq!(lut_decode(&fam, &[2, 2]), Err(Error::NotInFamily));
        assert_eq!(luts[1].decode_u64(&[0, 1]), Err(Error::NotInFamily));
        for lut in &luts {
            assert!(verify_dm(lut, 1 << 16, 0, 0).passed());
        }
    }

    #[test]
    fn single_codeword_family() {
        let fam = build_lut_family(energies(4), 5, 0, 1).unwrap();
        let dm = fam.lut(0).unwrap();
        assert_eq!(dm.encode(&[]).unwrap(), vec![0; 5]);
        assert_eq!(dm.mean_cost(), 5.0);
        assert!(verify_dm(&dm, 1, 0, 0).passed());
    }

    #[test]
    fn large_family_boundary_against_exhaustive_sort() {
        let costs = energies(4);
        let fam = build_lut_family(costs.clone(), 10, 16, 1).unwrap();
        assert_eq!(fam.len(), 65_536);
        let oracle = sorted_space(&costs, 10);
        assert_eq!(fam.entry(65_535), oracle[65_535].as_slice());
        let last = sequence_cost(fam.entry(65_535), &costs);
        let next = sequence_cost(&oracle[65_536], &costs);
        assert!(last < next || (last == next && fam.entry(65_535) < oracle[65_536].as_slice()));
    }

    #[test]
    fn mean_costs_are_monotone() {
        let fam = build_lut_family(vec![1.0, 4.5, 7.25], 4, 3, 8).unwrap();
        assert!(fam.mean_costs().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sparse_index_roundtrip() {
        // 16^8 = 2^32 sequences: best-first plus hashed reverse index
        let costs: Vec<f64> = (0..16).map(|i| 10.0 + i as f64 * 1.5).collect();
        let fam = build_lut_family(costs, 8, 6, 4).unwrap();
        for lut in fam.luts() {
            for v in 0..64 {
                let seq = lut.encode_u64(v).unwrap().to_vec();
                assert_eq!(lut.decode_u64(&seq).unwrap(), v);
            }
        }
    }

    #[test]
    fn corrupted_codebook_is_caught() {
        let cb = Codebook::new(vec![vec![0, 0], vec![0, 1], vec![0, 1], vec![1, 0]], energies(2))
            .unwrap();
        let report = verify_dm(&cb, 1 << 16, 0, 0);
        assert!(!report.passed());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, crate::matcher::Violation::DuplicateCodeword { .. })));
    }

    #[test]
    fn memory_examples() {
        let one = |num_luts, k, n, alphabet_size| LutShape {
            num_luts,
            k,
            n,
            alphabet_size,
        };
        assert_eq!(lut_memory_bits(&[one(1, 16, 10, 4)]), BigUint::from(1_310_720u32));
        assert_eq!(
            lut_memory_bits(&[one(2, 1, 2, 2), one(1, 1, 2, 2)]),
            BigUint::from(12u32)
        );
        assert_eq!(lut_memory_bits(&[one(1, 0, 5, 4)]), BigUint::from(10u32));
    }
}

//! Pulse-position layers over an energy-ordered base family.
//!
//! With base matchers `D_1, ..., D_L` and position counts `N_2, ..., N_L`,
//! a level-2 block holds `N_2 - 1` copies of `D_1` and one `D_2`, and the
//! slot of `D_2` carries `log2(N_2)` bits. Level `l` repeats the level
//! `l - 1` block `N_l - 1` times and places, in one slot, the same level
//! `l - 1` structure with its marker replaced by `D_l`.
//!
//! Each level's position bits come first (MSB-first, 0-based slot), then the
//! slots left to right.

use std::any::Any;
use std::sync::Arc;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::hidm::{verify_disjoint, MemoryItem, MetricsReport, Owner, SharedDm};
use crate::matcher::{DistributionMatcher, DmKind};
use crate::shaping::{bits_to_index, bits_to_u64, u64_to_bits, Alphabet, BitWord, Distribution, Rate};
use crate::Symbol;

#[derive(Debug)]
pub struct PpmStructure {
    alphabet: Alphabet,
    energies: Vec<f64>,
    base: Vec<SharedDm>,
    owner: Owner,
    /// `(N_2, ..., N_L)`
    positions: Vec<usize>,
    /// bits consumed by a block of each level
    level_bits: Vec<usize>,
    /// amplitudes in a block of each level
    level_len: Vec<usize>,
    /// occupancy of the top block
    occupancy: Vec<f64>,
}

/// Stacks `base.len() - 1` position levels over the base matchers.
pub fn ppm_build(base: Vec<SharedDm>, positions: &[usize]) -> Result<PpmStructure> {
    if base.is_empty() {
        return Err(Error::InvalidStructure("PPM needs at least one base matcher".into()));
    }
    if positions.len() + 1 != base.len() {
        return Err(Error::InvalidStructure(format!(
            "{} base matchers need {} position counts, found {}",
            base.len(),
            base.len() - 1,
            positions.len()
        )));
    }
    if let Some(&bad) = positions.iter().find(|&&n| n < 2 || !n.is_power_of_two()) {
        return Err(Error::NotPowerOfTwo(bad));
    }
    let first = &base[0];
    if base.iter().any(|d| {
        d.block_len() != first.block_len()
            || d.input_bits() != first.input_bits()
            || d.alphabet_size() != first.alphabet_size()
    }) {
        return Err(Error::InvalidStructure(
            "base matchers must share N, k and alphabet".into(),
        ));
    }
    let means: Vec<f64> = base.iter().map(|d| d.mean_cost()).collect();
    if means.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::BaseNotOrdered);
    }
    if let Some((first, second, witness)) = verify_disjoint(&base)?.witness {
        return Err(Error::NotDisjoint {
            layer: 1,
            first,
            second,
            witness,
        });
    }
    let alphabet = Alphabet::new(first.alphabet_size())?;

    let mut level_bits = vec![first.input_bits()];
    let mut level_len = vec![first.block_len()];
    for &n in positions {
        let (b, len) = (*level_bits.last().unwrap(), *level_len.last().unwrap());
        level_bits.push(n.trailing_zeros() as usize + n * b);
        level_len.push(n * len);
    }

    // occ[m] is the occupancy of a block at the current level whose marker
    // is D_m; only markers at or above the level are meaningful
    let mut occ: Vec<Vec<f64>> = base.iter().map(|d| d.occupancy()).collect();
    for (i, &n) in positions.iter().enumerate() {
        let default = occ[i].clone();
        for o in occ.iter_mut().skip(i + 1) {
            for (x, d) in o.iter_mut().zip(&default) {
                *x += (n - 1) as f64 * d;
            }
        }
    }
    let occupancy = occ.pop().unwrap();

    Ok(PpmStructure {
        energies: first.costs().to_vec(),
        alphabet,
        owner: Owner::detect(&base),
        base,
        positions: positions.to_vec(),
        level_bits,
        level_len,
        occupancy,
    })
}

impl PpmStructure {
    /// Number of base matchers `L`.
    pub fn num_levels(&self) -> usize {
        self.base.len()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn base(&self) -> &[SharedDm] {
        &self.base
    }

    pub fn total_bits(&self) -> usize {
        *self.level_bits.last().unwrap()
    }

    pub fn total_len(&self) -> usize {
        *self.level_len.last().unwrap()
    }

    pub fn rate(&self) -> Rate {
        Rate::new(self.total_bits() as u64, self.total_len() as u64)
    }

    pub fn encode_bits(&self, bits: &[bool]) -> Result<Vec<Symbol>> {
        if bits.len() != self.total_bits() {
            return Err(Error::LengthMismatch {
                expected: self.total_bits(),
                found: bits.len(),
            });
        }
        let mut out = Vec::with_capacity(self.total_len());
        let mut cursor = 0;
        let top = self.base.len() - 1;
        self.encode_level(top, top, bits, &mut cursor, &mut out)?;
        Ok(out)
    }

    /// Level is 0-based here: level 0 is a single base block.
    fn encode_level(
        &self,
        level: usize,
        marker: usize,
        bits: &[bool],
        cursor: &mut usize,
        out: &mut Vec<Symbol>,
    ) -> Result<()> {
        if level == 0 {
            let dm = &self.base[marker];
            let k = dm.input_bits();
            out.extend(dm.encode(&bits[*cursor..*cursor + k])?);
            *cursor += k;
            return Ok(());
        }
        let n = self.positions[level - 1];
        let width = n.trailing_zeros() as usize;
        let slot = bits_to_u64(&bits[*cursor..*cursor + width]) as usize;
        *cursor += width;
        for s in 0..n {
            let m = if s == slot { marker } else { level - 1 };
            self.encode_level(level - 1, m, bits, cursor, out)?;
        }
        Ok(())
    }

    pub fn decode_bits(&self, seq: &[Symbol]) -> Result<Vec<bool>> {
        if seq.len() != self.total_len() {
            return Err(Error::LengthMismatch {
                expected: self.total_len(),
                found: seq.len(),
            });
        }
        let n1 = self.level_len[0];
        let mut blocks: Vec<(usize, Vec<bool>)> = seq
            .chunks(n1)
            .enumerate()
            .map(|(pos, b)| {
                self.owner
                    .find(&self.base, b)
                    .ok_or(Error::UndecodableBlock(pos))
            })
            .collect::<Result<_>>()?;
        for (level, &n) in self.positions.iter().enumerate() {
            // children of a level-(level + 1) block use marker `level` by default
            let mut merged = Vec::with_capacity(blocks.len() / n);
            for (pos, group) in blocks.chunks(n).enumerate() {
                let undecodable = Error::UndecodableVirtual {
                    layer: level + 2,
                    position: pos,
                };
                let mut variant = None;
                for (s, (m, _)) in group.iter().enumerate() {
                    if *m > level {
                        if variant.is_some() {
                            return Err(undecodable);
                        }
                        variant = Some(s);
                    } else if *m < level {
                        return Err(undecodable);
                    }
                }
                let slot = variant.ok_or(undecodable)?;
                let mut bits = Vec::with_capacity(self.level_bits[level + 1]);
                u64_to_bits(slot as u64, n.trailing_zeros() as usize, &mut bits);
                for (_, b) in group {
                    bits.extend_from_slice(b);
                }
                merged.push((group[slot].0, bits));
            }
            blocks = merged;
        }
        let (marker, bits) = blocks.pop().unwrap();
        if marker != self.base.len() - 1 {
            return Err(Error::UndecodableVirtual {
                layer: self.base.len(),
                position: 0,
            });
        }
        Ok(bits)
    }

    pub fn encode_word(&self, bits: &BitWord) -> Result<Vec<u32>> {
        let seq = self.encode_bits(bits.bits())?;
        Ok(seq.iter().map(|&s| self.alphabet.level_of(s)).collect())
    }

    pub fn decode_levels(&self, levels: &[u32]) -> Result<BitWord> {
        if levels.len() != self.total_len() {
            return Err(Error::LengthMismatch {
                expected: self.total_len(),
                found: levels.len(),
            });
        }
        let n1 = self.level_len[0];
        let seq = levels
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                self.alphabet
                    .symbol_of(a)
                    .map_err(|_| Error::UndecodableBlock(i / n1))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitWord::new(self.decode_bits(&seq)?))
    }

    pub fn metrics(&self) -> Result<MetricsReport> {
        let n_tot = self.total_len() as f64;
        let mean_energy = self.mean_cost() / n_tot;
        MetricsReport::new(
            &self.alphabet,
            self.rate(),
            mean_energy,
            Distribution::from_weights(&self.occupancy)?,
            vec![MemoryItem {
                layer: 1,
                kind: self.base[0].kind(),
                bits: self.storage_bits(),
            }],
        )
    }
}

impl DistributionMatcher for PpmStructure {
    fn kind(&self) -> DmKind {
        DmKind::Ppm
    }

    fn input_bits(&self) -> usize {
        self.total_bits()
    }

    fn block_len(&self) -> usize {
        self.total_len()
    }

    fn alphabet_size(&self) -> usize {
        self.alphabet.size()
    }

    fn costs(&self) -> &[f64] {
        &self.energies
    }

    fn occupancy(&self) -> Vec<f64> {
        self.occupancy.clone()
    }

    fn encode_index(&self, index: &BigUint) -> Result<Vec<Symbol>> {
        let word = BitWord::from_index(index, self.total_bits())?;
        self.encode_bits(word.bits())
    }

    fn decode_index(&self, seq: &[Symbol]) -> Result<BigUint> {
        Ok(bits_to_index(&self.decode_bits(seq)?))
    }

    fn encode(&self, bits: &[bool]) -> Result<Vec<Symbol>> {
        self.encode_bits(bits)
    }

    fn decode(&self, seq: &[Symbol]) -> Result<Vec<bool>> {
        self.decode_bits(seq)
    }

    /// Only the base tables are stored; positions are computed.
    fn storage_bits(&self) -> BigUint {
        self.base.iter().map(|d| d.storage_bits()).sum()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Convenience wrapper over the first `L` LUTs of a family.
pub fn ppm_from_family(family: &Arc<crate::lutdm::LutFamily>, positions: &[usize]) -> Result<PpmStructure> {
    let base = family
        .luts()
        .into_iter()
        .map(|l| Arc::new(l) as SharedDm)
        .collect();
    ppm_build(base, positions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lutdm::build_lut_family;
    use crate::matcher::{codebook, verify_dm};

    fn toy_family(num: usize) -> Arc<crate::lutdm::LutFamily> {
        let a = Alphabet::new(2).unwrap();
        build_lut_family(a.energies_f64(), 2, 1, num).unwrap()
    }

    #[test]
    fn toy_example() {
        let p = ppm_from_family(&toy_family(2), &[2]).unwrap();
        assert_eq!(p.total_bits(), 3);
        assert_eq!(p.total_len(), 4);
        assert_eq!(p.encode_word(&"101".parse().unwrap()).unwrap(), vec![1, 1, 3, 3]);
        assert_eq!(p.decode_levels(&[1, 1, 3, 3]).unwrap().to_string(), "101");
        assert!(verify_dm(&p, 1 << 16, 0, 0).passed());
    }

    #[test]
    fn single_level_is_the_base_lut() {
        let f = toy_family(1);
        let p = ppm_from_family(&f, &[]).unwrap();
        assert_eq!(p.rate(), Rate::new(1, 2));
        assert_eq!(codebook(&p, 16), codebook(&f.lut(0).unwrap(), 16));
    }

    #[test]
    fn rate_identity() {
        let a = Alphabet::new(4).unwrap();
        let f = build_lut_family(a.energies_f64(), 3, 2, 3).unwrap();
        for n2 in [2usize, 4, 8] {
            for n3 in [2usize, 4] {
                let p = ppm_from_family(&f, &[n2, n3]).unwrap();
                let expected = Rate::new(2, 3)
                    + Rate::new(n2.trailing_zeros() as u64, 3 * n2 as u64)
                    + Rate::new(n3.trailing_zeros() as u64, (3 * n2 * n3) as u64);
                assert_eq!(p.rate(), expected);
            }
        }
    }

    #[test]
    fn three_levels_exhaustive() {
        let a = Alphabet::new(4).unwrap();
        let f = build_lut_family(a.energies_f64(), 2, 1, 3).unwrap();
        let p = ppm_from_family(&f, &[2, 4]).unwrap();
        assert_eq!(p.total_bits(), 2 + 4 * (1 + 2));
        let report = verify_dm(&p, 1 << 16, 0, 0);
        assert!(report.exhaustive && report.passed(), "{report:?}");

        // brute-force mean energy and occupancy
        let book = codebook(&p, 1 << 16).unwrap();
        let mut occ = [0.0; 4];
        for seq in &book {
            for &s in seq {
                occ[s as usize] += 1.0;
            }
        }
        for (o, x) in occ.iter().zip(p.occupancy()) {
            assert!((o / book.len() as f64 - x).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = toy_family(2);
        assert!(matches!(ppm_from_family(&f, &[3]), Err(Error::NotPowerOfTwo(3))));
        assert!(matches!(ppm_from_family(&f, &[1]), Err(Error::NotPowerOfTwo(1))));
        let mut base: Vec<SharedDm> = f.luts().into_iter().map(|l| Arc::new(l) as SharedDm).collect();
        base.reverse();
        assert!(matches!(ppm_build(base, &[2]), Err(Error::BaseNotOrdered)));
    }

    #[test]
    fn decode_rejects_two_markers() {
        let p = ppm_from_family(&toy_family(2), &[2]).unwrap();
        // two D_2 blocks: (3,1) (3,1)
        assert!(matches!(
            p.decode_levels(&[3, 1, 3, 1]),
            Err(Error::UndecodableVirtual { layer: 2, position: 0 })
        ));
        // no marker
        assert!(matches!(
            p.decode_levels(&[1, 1, 1, 3]),
            Err(Error::UndecodableVirtual { .. })
        ));
    }
}

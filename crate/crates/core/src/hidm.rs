//! Hierarchical composition of distribution matchers.
//!
//! Layer 1 matchers emit amplitudes. The matchers of layer `l + 1` emit
//! sequences over a virtual alphabet whose symbols are the matchers of
//! layer `l`. The top layer holds a single matcher.
//!
//! Bit order: the top matcher consumes the first bits of the input word,
//! then each selected lower matcher is expanded left to right, depth first.
//! Decoding mirrors this order exactly.

use std::any::Any;
use std::sync::Arc;

use num_bigint::BigUint;
use serde_json::{json, Value};

use crate::ccdm::{cc_unrank, CcdmMatcher};
use crate::error::{Error, Result};
use crate::lutdm::{LutDm, LutFamily};
use crate::matcher::{codebook, DistributionMatcher, DmKind};
use crate::shaping::{
    bits_to_index, entropy, fmt_sig6, mb_fit, rate_to_f64, Alphabet, BitWord, Distribution, Rate,
    RateLossMode,
};
use crate::Symbol;

pub type SharedDm = Arc<dyn DistributionMatcher>;

/// Codebooks up to this size are enumerated when no structural shortcut
/// decides disjointness.
pub const DISJOINT_ENUMERATION_LIMIT: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct DisjointReport {
    pub disjoint: bool,
    /// `(first, second, shared codeword)` for the first overlapping pair.
    pub witness: Option<(usize, usize, Vec<Symbol>)>,
}

fn lut_of(dm: &dyn DistributionMatcher) -> Option<&LutDm> {
    dm.as_any().downcast_ref::<LutDm>()
}

fn ccdm_of(dm: &dyn DistributionMatcher) -> Option<&CcdmMatcher> {
    dm.as_any().downcast_ref::<CcdmMatcher>()
}

/// A codeword shared by both matchers, if any.
fn shared_codeword(
    a: &dyn DistributionMatcher,
    b: &dyn DistributionMatcher,
    limit: u64,
) -> Result<Option<Vec<Symbol>>> {
    if a.block_len() != b.block_len() {
        return Ok(None);
    }
    if let (Some(ca), Some(cb)) = (ccdm_of(a), ccdm_of(b)) {
        // index 0 belongs to both images when the compositions agree
        return if ca.composition() == cb.composition() {
            Ok(Some(cc_unrank(ca.composition(), &BigUint::default())?))
        } else {
            Ok(None)
        };
    }
    if let (Some(la), Some(lb)) = (lut_of(a), lut_of(b)) {
        if Arc::ptr_eq(la.family(), lb.family()) {
            return if la.index() == lb.index() {
                Ok(Some(la.encode_u64(0)?.to_vec()))
            } else {
                Ok(None)
            };
        }
    }
    let (small, other) = if a.support_size() <= b.support_size() {
        (a, b)
    } else {
        (b, a)
    };
    let book = codebook(small, limit).ok_or_else(|| {
        Error::Unverifiable(format!(
            "{} and {} codebooks both exceed {limit} entries",
            a.kind(),
            b.kind()
        ))
    })?;
    Ok(book.into_iter().find(|seq| other.contains(seq)))
}

/// Pairwise check that no two matchers share an output sequence.
pub fn verify_disjoint(dms: &[SharedDm]) -> Result<DisjointReport> {
    verify_disjoint_with_limit(dms, DISJOINT_ENUMERATION_LIMIT)
}

pub fn verify_disjoint_with_limit(dms: &[SharedDm], limit: u64) -> Result<DisjointReport> {
    for i in 0..dms.len() {
        for j in i + 1..dms.len() {
            if let Some(w) = shared_codeword(dms[i].as_ref(), dms[j].as_ref(), limit)? {
                return Ok(DisjointReport {
                    disjoint: false,
                    witness: Some((i, j, w)),
                });
            }
        }
    }
    Ok(DisjointReport {
        disjoint: true,
        witness: None,
    })
}

/// Finds which matcher of a layer produced a block.
#[derive(Debug)]
pub(crate) enum Owner {
    /// The layer is exactly the LUTs of one family, in order.
    Family(Arc<LutFamily>),
    Scan,
}

impl Owner {
    pub(crate) fn detect(layer: &[SharedDm]) -> Self {
        let luts: Option<Vec<&LutDm>> = layer.iter().map(|d| lut_of(d.as_ref())).collect();
        if let Some(luts) = luts {
            let family = luts[0].family();
            if family.num_luts() == luts.len()
                && luts
                    .iter()
                    .enumerate()
                    .all(|(i, l)| l.index() == i && Arc::ptr_eq(l.family(), family))
            {
                return Self::Family(Arc::clone(family));
            }
        }
        Self::Scan
    }

    pub(crate) fn find(&self, layer: &[SharedDm], block: &[Symbol]) -> Option<(usize, Vec<bool>)> {
        match self {
            Self::Family(family) => {
                let (lut, bits) = crate::lutdm::lut_decode(family, block).ok()?;
                Some((lut, bits.into_bits()))
            }
            Self::Scan => layer
                .iter()
                .enumerate()
                .find_map(|(j, dm)| dm.decode(block).ok().map(|bits| (j, bits))),
        }
    }
}

#[derive(Debug)]
pub struct HiDm {
    alphabet: Alphabet,
    energies: Vec<f64>,
    layers: Vec<Vec<SharedDm>>,
    owners: Vec<Owner>,
    /// bits consumed by a block of each matcher, lower layers included
    subtree_bits: Vec<Vec<usize>>,
    /// amplitudes emitted by one block of each layer
    block_amplitudes: Vec<usize>,
    /// mean amplitude occupancy of each matcher's block
    amplitude_occupancy: Vec<Vec<Vec<f64>>>,
}

/// Validates a layer stack (`layers[0]` is layer 1) and precomputes its
/// metrics.
pub fn hidm_build(alphabet: &Alphabet, layers: Vec<Vec<SharedDm>>) -> Result<HiDm> {
    if layers.is_empty() || layers.iter().any(Vec::is_empty) {
        return Err(Error::InvalidStructure("every layer needs at least one matcher".into()));
    }
    let top = layers.len() - 1;
    if layers[top].len() != 1 {
        return Err(Error::InvalidStructure(format!(
            "top layer must hold exactly one matcher, found {}",
            layers[top].len()
        )));
    }
    for (l, layer) in layers.iter().enumerate() {
        let expected = if l == 0 {
            alphabet.size()
        } else {
            layers[l - 1].len()
        };
        for dm in layer {
            if dm.alphabet_size() != expected {
                return Err(Error::AlphabetMismatch {
                    layer: l + 1,
                    expected,
                    found: dm.alphabet_size(),
                });
            }
            if dm.block_len() != layer[0].block_len() {
                return Err(Error::InvalidStructure(format!(
                    "layer {}: block lengths {} and {} differ",
                    l + 1,
                    layer[0].block_len(),
                    dm.block_len()
                )));
            }
        }
        let report = verify_disjoint(layer)?;
        if let Some((first, second, witness)) = report.witness {
            return Err(Error::NotDisjoint {
                layer: l + 1,
                first,
                second,
                witness,
            });
        }
    }

    let mut subtree_bits: Vec<Vec<usize>> = Vec::with_capacity(layers.len());
    let mut block_amplitudes = Vec::with_capacity(layers.len());
    let mut amplitude_occupancy: Vec<Vec<Vec<f64>>> = Vec::with_capacity(layers.len());
    for (l, layer) in layers.iter().enumerate() {
        let n = layer[0].block_len();
        if l == 0 {
            subtree_bits.push(layer.iter().map(|d| d.input_bits()).collect());
            block_amplitudes.push(n);
            amplitude_occupancy.push(layer.iter().map(|d| d.occupancy()).collect());
            continue;
        }
        let lower_bits = &subtree_bits[l - 1];
        let uniform = lower_bits.iter().all(|&b| b == lower_bits[0]);
        let mut bits = Vec::with_capacity(layer.len());
        for dm in layer {
            let b = if uniform {
                dm.input_bits() + n * lower_bits[0]
            } else if let Some(cc) = ccdm_of(dm.as_ref()) {
                dm.input_bits()
                    + cc.composition()
                        .counts()
                        .iter()
                        .zip(lower_bits)
                        .map(|(&c, &b)| c as usize * b)
                        .sum::<usize>()
            } else {
                return Err(Error::VariableRateUnsupported { layer: l + 1 });
            };
            bits.push(b);
        }
        subtree_bits.push(bits);
        block_amplitudes.push(n * block_amplitudes[l - 1]);
        let lower_occ = &amplitude_occupancy[l - 1];
        let occ = layer
            .iter()
            .map(|dm| {
                let mut acc = vec![0.0; alphabet.size()];
                for (w, lower) in dm.occupancy().iter().zip(lower_occ) {
                    for (a, x) in acc.iter_mut().zip(lower) {
                        *a += w * x;
                    }
                }
                acc
            })
            .collect();
        amplitude_occupancy.push(occ);
    }
    let owners = layers.iter().map(|l| Owner::detect(l)).collect();
    Ok(HiDm {
        alphabet: *alphabet,
        energies: alphabet.energies_f64(),
        layers,
        owners,
        subtree_bits,
        block_amplitudes,
        amplitude_occupancy,
    })
}

impl HiDm {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, l: usize) -> &[SharedDm] {
        &self.layers[l]
    }

    /// `K_tot`
    pub fn total_bits(&self) -> usize {
        self.subtree_bits[self.layers.len() - 1][0]
    }

    /// `N_tot`
    pub fn total_len(&self) -> usize {
        self.block_amplitudes[self.layers.len() - 1]
    }

    pub fn rate(&self) -> Rate {
        Rate::new(self.total_bits() as u64, self.total_len() as u64)
    }

    /// `(N_1, ..., N_L)`
    pub fn block_lens(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l[0].block_len()).collect()
    }

    /// Input bits of each matcher, per layer.
    pub fn input_bits_per_layer(&self) -> Vec<Vec<usize>> {
        self.layers
            .iter()
            .map(|l| l.iter().map(|d| d.input_bits()).collect())
            .collect()
    }

    /// Output alphabet size of each layer, `(M_1, ..., M_L)`.
    pub fn alphabet_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l[0].alphabet_size()).collect()
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
        self.encode_block(self.layers.len() - 1, 0, bits, &mut cursor, &mut out)?;
        Ok(out)
    }

    fn encode_block(
        &self,
        layer: usize,
        dm: usize,
        bits: &[bool],
        cursor: &mut usize,
        out: &mut Vec<Symbol>,
    ) -> Result<()> {
        let matcher = &self.layers[layer][dm];
        let k = matcher.input_bits();
        let seq = matcher.encode(&bits[*cursor..*cursor + k])?;
        *cursor += k;
        if layer == 0 {
            out.extend_from_slice(&seq);
        } else {
            for s in seq {
                self.encode_block(layer - 1, s as usize, bits, cursor, out)?;
            }
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
        // bottom-up: owning matcher and local bits of every block
        let mut local_bits: Vec<Vec<Vec<bool>>> = Vec::with_capacity(self.layers.len());
        let mut ids: Vec<Symbol> = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            let n = layer[0].block_len();
            let input: Vec<Symbol> = if l == 0 { seq.to_vec() } else { std::mem::take(&mut ids) };
            let mut bits = Vec::with_capacity(input.len() / n);
            for (pos, block) in input.chunks(n).enumerate() {
                let (owner, b) = self.owners[l].find(layer, block).ok_or(if l == 0 {
                    Error::UndecodableBlock(pos)
                } else {
                    Error::UndecodableVirtual {
                        layer: l + 1,
                        position: pos,
                    }
                })?;
                ids.push(owner as Symbol);
                bits.push(b);
            }
            local_bits.push(bits);
        }
        let mut out = Vec::with_capacity(self.total_bits());
        self.assemble(&local_bits, self.layers.len() - 1, 0, &mut out);
        Ok(out)
    }

    fn assemble(&self, local: &[Vec<Vec<bool>>], layer: usize, block: usize, out: &mut Vec<bool>) {
        out.extend_from_slice(&local[layer][block]);
        if layer > 0 {
            let n = self.layers[layer][0].block_len();
            for child in 0..n {
                self.assemble(local, layer - 1, block * n + child, out);
            }
        }
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
        // a foreign level makes its whole block undecodable
        let n1 = self.layers[0][0].block_len();
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

    pub fn amplitude_occupancy(&self) -> &[f64] {
        &self.amplitude_occupancy[self.layers.len() - 1][0]
    }

    pub fn metrics(&self) -> Result<MetricsReport> {
        let n_tot = self.total_len() as f64;
        let occ = self.amplitude_occupancy();
        let mean_energy = occ
            .iter()
            .zip(&self.energies)
            .map(|(o, e)| o * e)
            .sum::<f64>()
            / n_tot;
        let distribution = Distribution::from_weights(occ)?;
        let rate = self.rate();
        let memory_items: Vec<MemoryItem> = self
            .layers
            .iter()
            .enumerate()
            .map(|(l, layer)| MemoryItem {
                layer: l + 1,
                kind: layer[0].kind(),
                bits: layer.iter().map(|d| d.storage_bits()).sum(),
            })
            .collect();
        MetricsReport::new(&self.alphabet, rate, mean_energy, distribution, memory_items)
    }
}

impl DistributionMatcher for HiDm {
    fn kind(&self) -> DmKind {
        DmKind::Hidm
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
        self.amplitude_occupancy().to_vec()
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

    fn storage_bits(&self) -> BigUint {
        self.layers
            .iter()
            .flatten()
            .map(|d| d.storage_bits())
            .sum()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryItem {
    pub layer: usize,
    pub kind: DmKind,
    pub bits: BigUint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rate: Rate,
    pub mean_energy_per_symbol: f64,
    pub amplitude_distribution: Distribution,
    pub rate_loss_mb: f64,
    pub rate_loss_induced: f64,
    pub memory_bits: BigUint,
    pub memory_items: Vec<MemoryItem>,
}

impl MetricsReport {
    pub fn new(
        alphabet: &Alphabet,
        rate: Rate,
        mean_energy_per_symbol: f64,
        amplitude_distribution: Distribution,
        memory_items: Vec<MemoryItem>,
    ) -> Result<Self> {
        let r = rate_to_f64(&rate);
        let rate_loss_mb = entropy(&mb_fit(alphabet, mean_energy_per_symbol)?) - r;
        let rate_loss_induced = entropy(&amplitude_distribution) - r;
        Ok(Self {
            rate,
            mean_energy_per_symbol,
            amplitude_distribution,
            rate_loss_mb,
            rate_loss_induced,
            memory_bits: memory_items.iter().map(|m| &m.bits).sum(),
            memory_items,
        })
    }

    pub fn rate_loss(&self, mode: RateLossMode) -> f64 {
        match mode {
            RateLossMode::Mb => self.rate_loss_mb,
            RateLossMode::Induced => self.rate_loss_induced,
        }
    }

    /// JSON view with exact rate and six-significant-digit reals.
    pub fn to_json(&self) -> Value {
        json!({
            "rate": format!("{}/{}", self.rate.numer(), self.rate.denom()),
            "rate_decimal": fmt_sig6(rate_to_f64(&self.rate)),
            "mean_energy_per_symbol": fmt_sig6(self.mean_energy_per_symbol),
            "amplitude_distribution": self
                .amplitude_distribution
                .probs()
                .iter()
                .map(|&p| fmt_sig6(p))
                .collect::<Vec<_>>(),
            "rate_loss_mb": fmt_sig6(self.rate_loss_mb),
            "rate_loss_induced": fmt_sig6(self.rate_loss_induced),
            "memory_bits": self.memory_bits.to_string(),
            "memory_items": self
                .memory_items
                .iter()
                .map(|m| json!({"layer": m.layer, "kind": m.kind, "bits": m.bits.to_string()}))
                .collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccdm::Composition;
    use crate::lutdm::build_lut_family;
    use crate::matcher::verify_dm;

    fn alph(m: usize) -> Alphabet {
        Alphabet::new(m).unwrap()
    }

    fn shared(luts: Vec<LutDm>) -> Vec<SharedDm> {
        luts.into_iter().map(|l| Arc::new(l) as SharedDm).collect()
    }

    /// Two LUTs {(1,1),(1,3)} and {(3,1),(3,3)} under a top LUT over their
    /// mean energies (6, 14) with N = 2, k = 1.
    pub(crate) fn toy() -> HiDm {
        let a = alph(2);
        let lower = build_lut_family(a.energies_f64(), 2, 1, 2).unwrap();
        let top = build_lut_family(lower.mean_costs().to_vec(), 2, 1, 1).unwrap();
        hidm_build(&a, vec![shared(lower.luts()), shared(top.luts())]).unwrap()
    }

    fn bits(s: &str) -> Vec<bool> {
        s.parse::<BitWord>().unwrap().into_bits()
    }

    #[test]
    fn toy_encoding_examples() {
        let h = toy();
        assert_eq!(h.rate(), Rate::new(3, 4));
        assert_eq!(h.encode_word(&"001".parse().unwrap()).unwrap(), vec![1, 1, 1, 3]);
        assert_eq!(h.encode_word(&"110".parse().unwrap()).unwrap(), vec![1, 3, 3, 1]);
        assert_eq!(h.decode_levels(&[1, 1, 1, 3]).unwrap().to_string(), "001");
    }

    #[test]
    fn toy_decoding_errors() {
        let h = toy();
        assert_eq!(
            h.decode_levels(&[3, 3, 3, 3]),
            Err(Error::UndecodableVirtual {
                layer: 2,
                position: 0
            })
        );
        assert_eq!(h.decode_levels(&[5, 1, 1, 1]), Err(Error::UndecodableBlock(0)));
        assert!(matches!(
            h.decode_bits(&[0, 0, 0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(h.encode_bits(&bits("01")), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn toy_metrics() {
        let h = toy();
        let m = h.metrics().unwrap();
        assert_eq!(m.rate, Rate::new(3, 4));
        assert!((m.mean_energy_per_symbol - 4.0).abs() < 1e-12);
        assert!(verify_dm(&h, 1 << 16, 0, 0).passed());
    }

    #[test]
    fn zero_bit_top_layer_is_a_fixed_sequence() {
        let a = alph(2);
        let lower = build_lut_family(a.energies_f64(), 2, 1, 2).unwrap();
        let top = build_lut_family(lower.mean_costs().to_vec(), 3, 0, 1).unwrap();
        let h = hidm_build(&a, vec![shared(lower.luts()), shared(top.luts())]).unwrap();
        assert_eq!(h.rate(), Rate::new(1, 2));
    }

    #[test]
    fn fig1_caption_structure() {
        let a = alph(4);
        let lower = build_lut_family(a.energies_f64(), 3, 4, 3).unwrap();
        let top = build_lut_family(lower.mean_costs().to_vec(), 3, 3, 1).unwrap();
        let h = hidm_build(&a, vec![shared(lower.luts()), shared(top.luts())]).unwrap();
        assert_eq!(h.block_lens(), vec![3, 3]);
        assert_eq!(h.alphabet_sizes(), vec![4, 3]);
        assert_eq!(h.rate(), Rate::new(5, 3));
        assert!(verify_dm(&h, 1 << 16, 0, 0).passed());
    }

    #[test]
    fn duplicate_lower_matcher_is_not_disjoint() {
        let a = alph(2);
        let lower = build_lut_family(a.energies_f64(), 2, 1, 2).unwrap();
        let d1 = lower.lut(0).unwrap();
        let top = build_lut_family(vec![6.0, 6.0], 2, 1, 1).unwrap();
        let err = hidm_build(&a, vec![shared(vec![d1.clone(), d1]), shared(top.luts())]);
        assert!(matches!(err, Err(Error::NotDisjoint { layer: 1, witness, .. }) if witness == vec![0, 0]));
    }

    #[test]
    fn alphabet_chaining_is_checked() {
        let a = alph(2);
        let lower = build_lut_family(a.energies_f64(), 2, 1, 2).unwrap();
        let top = build_lut_family(vec![1.0, 2.0, 3.0], 2, 1, 1).unwrap();
        let err = hidm_build(&a, vec![shared(lower.luts()), shared(top.luts())]);
        assert!(matches!(err, Err(Error::AlphabetMismatch { layer: 2, expected: 2, found: 3 })));
    }

    #[test]
    fn disjointness_report() {
        let a = alph(2);
        let lower = build_lut_family(a.energies_f64(), 2, 1, 2).unwrap();
        let report = verify_disjoint(&shared(lower.luts())).unwrap();
        assert!(report.disjoint);
        let d1 = lower.lut(0).unwrap();
        let report = verify_disjoint(&shared(vec![d1.clone(), d1])).unwrap();
        assert_eq!(report.witness, Some((0, 1, vec![0, 0])));

        let c = Composition::new(vec![2, 1]).unwrap();
        let same: Vec<SharedDm> = (0..2)
            .map(|_| Arc::new(CcdmMatcher::over_amplitudes(c.clone(), &a).unwrap()) as SharedDm)
            .collect();
        assert!(!verify_disjoint(&same).unwrap().disjoint);
    }

    #[test]
    fn unequal_bits_need_constant_composition_above() {
        let a = alph(4);
        let c1 = CcdmMatcher::over_amplitudes(Composition::new(vec![3, 1, 0, 0]).unwrap(), &a).unwrap();
        let c2 = CcdmMatcher::over_amplitudes(Composition::new(vec![2, 1, 1, 0]).unwrap(), &a).unwrap();
        assert_ne!(c1.input_bits(), c2.input_bits());
        let lower: Vec<SharedDm> = vec![Arc::new(c1.clone()), Arc::new(c2.clone())];
        let costs = vec![c1.mean_cost(), c2.mean_cost()];
        let lut_top = build_lut_family(costs.clone(), 2, 1, 1).unwrap();
        let err = hidm_build(&a, vec![lower.clone(), shared(lut_top.luts())]);
        assert!(matches!(err, Err(Error::VariableRateUnsupported { layer: 2 })));

        let top = CcdmMatcher::new(Composition::new(vec![1, 1]).unwrap(), costs).unwrap();
        let h = hidm_build(&a, vec![lower, vec![Arc::new(top)]]).unwrap();
        assert_eq!(h.total_bits(), 1 + c1.input_bits() + c2.input_bits());
        assert!(verify_dm(&h, 1 << 16, 0, 0).passed());
    }
}

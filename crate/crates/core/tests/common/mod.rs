//! Brute-force oracles shared by the oracle suite and the acceptance run.
//! Each check returns a short summary on success and a description of the
//! first mismatch otherwise.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use num_bigint::{BigUint, RandBigInt};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hidm_core::ccdm::{cc_rank, cc_unrank, Composition};
use hidm_core::config::{Structure, StructureConfig};
use hidm_core::ess::build_trellis;
use hidm_core::lutdm::enumerate_lowest_cost;
use hidm_core::{Alphabet, DistributionMatcher, Symbol};

pub type Check = Result<String, String>;

/// Every length-`n` sequence over `m` symbols in lexicographic order.
pub fn all_sequences(m: usize, n: usize) -> Vec<Vec<Symbol>> {
    let total = m.pow(n as u32);
    (0..total)
        .map(|mut x| {
            let mut seq = vec![0; n];
            for s in seq.iter_mut().rev() {
                *s = (x % m) as Symbol;
                x /= m;
            }
            seq
        })
        .collect()
}

/// Constant-composition ranking against lexicographic enumeration of every
/// composition with `N <= n_max` over `M <= m_max` symbols.
pub fn ccdm_rank_oracle(n_max: usize, m_max: usize) -> Check {
    let mut compositions = 0usize;
    for m in 1..=m_max {
        for n in 1..=n_max {
            let mut classes: BTreeMap<Vec<u32>, Vec<Vec<Symbol>>> = BTreeMap::new();
            for seq in all_sequences(m, n) {
                let mut counts = vec![0u32; m];
                for &s in &seq {
                    counts[s as usize] += 1;
                }
                classes.entry(counts).or_default().push(seq);
            }
            for (counts, seqs) in classes {
                let c = Composition::new(counts.clone()).map_err(|e| e.to_string())?;
                if c.multinomial() != BigUint::from(seqs.len()) {
                    return Err(format!("multinomial mismatch for {counts:?}"));
                }
                for (i, seq) in seqs.iter().enumerate() {
                    let index = BigUint::from(i);
                    let unranked = cc_unrank(&c, &index).map_err(|e| e.to_string())?;
                    if &unranked != seq {
                        return Err(format!("unrank({counts:?}, {i}) = {unranked:?}, expected {seq:?}"));
                    }
                    let rank = cc_rank(&c, seq).map_err(|e| e.to_string())?;
                    if rank != index {
                        return Err(format!("rank({seq:?}) = {rank}, expected {i}"));
                    }
                }
                compositions += 1;
            }
        }
    }
    Ok(format!("{compositions} compositions"))
}

/// Trellis counts against direct counting of completions for every prefix,
/// for `N <= n_max` over 2 to 4 amplitudes and several energy bounds.
pub fn ess_count_oracle(n_max: usize) -> Check {
    let mut nodes = 0usize;
    for m in 2..=4 {
        let alphabet = Alphabet::new(m).map_err(|e| e.to_string())?;
        let energies = alphabet.energies();
        let energy = |s: &[Symbol]| s.iter().map(|&x| energies[x as usize]).sum::<u64>();
        for n in 1..=n_max {
            let min_e = n as u64;
            let max_e = n as u64 * energies[m - 1];
            let bounds: Vec<u64> = [min_e, min_e + 8, (min_e + max_e) / 2, max_e]
                .into_iter()
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            for e_max in bounds {
                let t = build_trellis(n, &alphabet, e_max).map_err(|e| e.to_string())?;
                // suffix energies of every length, as multisets
                let mut suffix: Vec<Vec<u64>> = Vec::with_capacity(n + 1);
                for len in 0..=n {
                    suffix.push(all_sequences(m, len).iter().map(|s| energy(s)).collect());
                }
                for i in 0..=n {
                    let prefixes: HashSet<u64> = all_sequences(m, i).iter().map(|p| energy(p)).collect();
                    for e in prefixes {
                        let brute = suffix[n - i]
                            .iter()
                            .filter(|&&s| e + s <= e_max)
                            .count();
                        if t.count(i, e) != BigUint::from(brute) {
                            return Err(format!(
                                "M={m} N={n} e_max={e_max}: T[{i}][{e}] = {}, expected {brute}",
                                t.count(i, e)
                            ));
                        }
                        nodes += 1;
                    }
                }
                // ranking inside the sphere follows lexicographic order
                let sphere: Vec<Vec<Symbol>> = all_sequences(m, n)
                    .into_iter()
                    .filter(|s| energy(s) <= e_max)
                    .collect();
                for (i, s) in sphere.iter().enumerate() {
                    let index = BigUint::from(i);
                    if t.unrank(&index).map_err(|e| e.to_string())? != *s
                        || t.rank(s).map_err(|e| e.to_string())? != index
                    {
                        return Err(format!("M={m} N={n} e_max={e_max}: sphere order differs at {i}"));
                    }
                }
            }
        }
    }
    Ok(format!("{nodes} trellis nodes"))
}

/// Lowest-cost enumeration against a full sort by `(cost, sequence)` for
/// `M <= m_max`, `N <= n_max`.
pub fn lowest_cost_oracle(n_max: usize, m_max: usize) -> Check {
    let mut cases = 0usize;
    for m in 1..=m_max {
        let costs: Vec<f64> = Alphabet::new(m).map_err(|e| e.to_string())?.energies_f64();
        for n in 1..=n_max {
            let mut space = all_sequences(m, n);
            let cost = |s: &[Symbol]| s.iter().map(|&x| costs[x as usize]).sum::<f64>();
            space.sort_by(|a, b| cost(a).total_cmp(&cost(b)).then_with(|| a.cmp(b)));
            let total = space.len() as u64;
            let ts: std::collections::BTreeSet<u64> = [1, 2, 7, 64, 1000, 1 << 14, total / 3, total]
                .into_iter()
                .filter(|&t| t >= 1 && t <= total)
                .collect();
            for t in ts {
                let got = enumerate_lowest_cost(&costs, n, t).map_err(|e| e.to_string())?;
                if got[..] != space[..t as usize] {
                    let at = got.iter().zip(&space).position(|(a, b)| a != b).unwrap_or(got.len());
                    return Err(format!("M={m} N={n} t={t}: first difference at {at}"));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} prefixes"))
}

/// Test structures with at most 16 input bits, as JSON configs.
pub const SMALL_STRUCTURES: &[(&str, &str)] = &[
    (
        "two-layer LUT (3,3)",
        r#"{"type":"hidm","layers":[
            {"dm":"lut","N":3,"k":4,"num_dms":2,"alphabet_size":4},
            {"dm":"lut","N":3,"k":3}]}"#,
    ),
    (
        "two-layer LUT (2,2)",
        r#"{"type":"hidm","layers":[
            {"dm":"lut","N":2,"k":3,"num_dms":2,"alphabet_size":4},
            {"dm":"lut","N":2,"k":2}]}"#,
    ),
    (
        "three-layer LUT",
        r#"{"type":"hidm","layers":[
            {"dm":"lut","N":2,"k":2,"num_dms":2,"alphabet_size":4},
            {"dm":"lut","N":2,"k":1,"num_dms":2},
            {"dm":"lut","N":2,"k":1}]}"#,
    ),
    (
        "binary-amplitude LUT",
        r#"{"type":"hidm","layers":[
            {"dm":"lut","N":4,"k":2,"num_dms":4,"alphabet_size":2},
            {"dm":"lut","N":2,"k":3}]}"#,
    ),
    (
        "CCDM over LUTs",
        r#"{"type":"hidm","layers":[
            {"dm":"lut","N":2,"k":2,"num_dms":3,"alphabet_size":4},
            {"dm":"ccdm","composition":[2,1,1]}]}"#,
    ),
    (
        "CCDM over CCDMs",
        r#"{"type":"hidm","layers":[
            {"dm":"ccdm","compositions":[[2,1,1,0],[1,1,1,1]],"alphabet_size":4},
            {"dm":"ccdm","composition":[1,1]}]}"#,
    ),
    (
        "CCDM over ESS",
        r#"{"type":"hidm","layers":[
            {"dm":"ess","N":4,"k":5,"alphabet_size":4},
            {"dm":"ccdm","composition":[3]}]}"#,
    ),
    (
        "PPM two levels",
        r#"{"type":"ppm","base":{"dm":"lut","N":3,"k":3,"num_dms":2,"alphabet_size":4},
            "positions":[4]}"#,
    ),
    (
        "PPM three levels",
        r#"{"type":"ppm","base":{"dm":"lut","N":2,"k":2,"num_dms":3,"alphabet_size":4},
            "positions":[2,2]}"#,
    ),
];

pub fn build(config: &str) -> Result<Structure, String> {
    StructureConfig::from_json(config)
        .and_then(|c| c.build())
        .map_err(|e| e.to_string())
}

/// Encodes every input: the map must be injective, decode must invert it,
/// and the reported energy and amplitude distribution must equal the
/// exhaustive averages to `1e-12` relative.
pub fn exhaustive_structure_check(s: &Structure, alphabet_size: usize) -> Check {
    let dm = s.as_dm();
    let k = dm.input_bits();
    if k > 16 {
        return Err(format!("{k} input bits is too many for exhaustive checking"));
    }
    let energies = Alphabet::new(alphabet_size).map_err(|e| e.to_string())?.energies_f64();
    let mut seen = HashSet::new();
    let mut counts = vec![0u64; alphabet_size];
    for x in 0..1u64 << k {
        let index = BigUint::from(x);
        let seq = dm.encode_index(&index).map_err(|e| e.to_string())?;
        if seq.len() != dm.block_len() {
            return Err(format!("input {x}: length {}", seq.len()));
        }
        if dm.decode_index(&seq).map_err(|e| e.to_string())? != index {
            return Err(format!("input {x}: decode does not invert encode"));
        }
        for &a in &seq {
            counts[a as usize] += 1;
        }
        if !seen.insert(seq) {
            return Err(format!("input {x}: codeword repeated"));
        }
    }
    let total: u64 = counts.iter().sum();
    let brute_energy = counts.iter().zip(&energies).map(|(&c, e)| c as f64 * e).sum::<f64>() / total as f64;
    let m = s.metrics().map_err(|e| e.to_string())?;
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    if !rel(brute_energy, m.mean_energy_per_symbol) {
        return Err(format!(
            "mean energy {} differs from exhaustive {brute_energy}",
            m.mean_energy_per_symbol
        ));
    }
    for (i, (&c, &p)) in counts.iter().zip(m.amplitude_distribution.probs()).enumerate() {
        let brute = c as f64 / total as f64;
        if !(rel(brute, p) || (brute == 0.0 && p.abs() < 1e-15)) {
            return Err(format!("amplitude {i}: probability {p} differs from exhaustive {brute}"));
        }
    }
    Ok(format!("{} codewords", 1u64 << k))
}

pub fn small_structure_suite() -> Check {
    let mut total = 0u64;
    for (name, config) in SMALL_STRUCTURES {
        let s = build(config).map_err(|e| format!("{name}: {e}"))?;
        let m: usize = serde_json::from_str::<serde_json::Value>(config)
            .ok()
            .and_then(|v| {
                let spec = if v["type"] == "ppm" { &v["base"] } else { &v["layers"][0] };
                spec["alphabet_size"].as_u64()
            })
            .ok_or_else(|| format!("{name}: no alphabet size"))? as usize;
        exhaustive_structure_check(&s, m).map_err(|e| format!("{name}: {e}"))?;
        total += 1 << s.total_bits();
    }
    Ok(format!("{} structures, {total} codewords", SMALL_STRUCTURES.len()))
}

/// Random inputs through encode and decode.
pub fn random_roundtrips(dm: &dyn DistributionMatcher, count: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = dm.support_size();
    for _ in 0..count {
        let index = rng.gen_biguint_below(&bound);
        let seq = dm.encode_index(&index).map_err(|e| e.to_string())?;
        if seq.len() != dm.block_len() || seq.iter().any(|&s| s as usize >= dm.alphabet_size()) {
            return Err(format!("input {index}: malformed codeword"));
        }
        let back = dm.decode_index(&seq).map_err(|e| e.to_string())?;
        if back != index {
            return Err(format!("input {index}: decoded {back}"));
        }
    }
    Ok(format!("{count} roundtrips at {} bits", dm.input_bits()))
}

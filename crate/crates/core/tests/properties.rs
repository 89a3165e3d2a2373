use num_bigint::BigUint;
use proptest::prelude::*;

use hidm_core::ccdm::{cc_rank, cc_unrank, Composition};
use hidm_core::ess::ess_build;
use hidm_core::lutdm::space_size;
use hidm_core::sweeps::build_lut_hidm;
use hidm_core::{Alphabet, BitWord, DistributionMatcher, Rate};

/// `(N, k, num)` per layer for random small LUT hierarchies.
fn lut_structure() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>, Vec<usize>)> {
    (2usize..=4, 1usize..=3).prop_flat_map(|(m, layers)| {
        let layer = (2usize..=3, 0usize..=4, 1usize..=3);
        (Just(m), prop::collection::vec(layer, layers)).prop_filter_map(
            "infeasible layer",
            |(m, spec)| {
                let mut n_vec = Vec::new();
                let mut k_vec = Vec::new();
                let mut num_vec = Vec::new();
                let mut below = m;
                let last = spec.len() - 1;
                for (i, (n, k, num)) in spec.into_iter().enumerate() {
                    let num = if i == last { 1 } else { num };
                    let fits = space_size(below, n).is_some_and(|s| (num as u64) << k <= s);
                    if !fits {
                        return None;
                    }
                    n_vec.push(n);
                    k_vec.push(k);
                    num_vec.push(num);
                    below = num;
                }
                Some((m, n_vec, k_vec, num_vec))
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lut_hierarchies_roundtrip((m, n_vec, k_vec, num_vec) in lut_structure(), seed in any::<u64>()) {
        let alphabet = Alphabet::new(m).unwrap();
        let h = build_lut_hidm(&alphabet, &n_vec, &k_vec, &num_vec).unwrap();
        let k = h.total_bits();
        let bits: Vec<bool> = (0..k).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
        let seq = h.encode_bits(&bits).unwrap();
        prop_assert_eq!(seq.len(), h.total_len());
        prop_assert_eq!(h.decode_bits(&seq).unwrap(), bits);
    }

    #[test]
    fn upper_layers_add_rate((m, n_vec, k_vec, num_vec) in lut_structure()) {
        let alphabet = Alphabet::new(m).unwrap();
        let h = build_lut_hidm(&alphabet, &n_vec, &k_vec, &num_vec).unwrap();
        let base = Rate::new(k_vec[0] as u64, n_vec[0] as u64);
        if k_vec[1..].iter().any(|&k| k > 0) {
            prop_assert!(h.rate() > base);
        } else {
            prop_assert_eq!(h.rate(), base);
        }
    }

    #[test]
    fn composition_rank_roundtrip(counts in prop::collection::vec(0u32..=6, 1..=5), pick in any::<u64>()) {
        prop_assume!(counts.iter().sum::<u32>() > 0);
        let c = Composition::new(counts).unwrap();
        let index = BigUint::from(pick) % c.multinomial();
        let seq = cc_unrank(&c, &index).unwrap();
        prop_assert_eq!(Composition::of_sequence(&seq, c.alphabet_size()).unwrap(), c.clone());
        prop_assert_eq!(cc_rank(&c, &seq).unwrap(), index);
    }

    #[test]
    fn ess_codewords_stay_in_the_sphere(n in 1usize..=12, frac in 0.0f64..=1.0, pick in any::<u64>()) {
        let alphabet = Alphabet::new(4).unwrap();
        let k = ((2 * n) as f64 * frac).floor() as usize;
        let ess = ess_build(n, &alphabet, k).unwrap();
        let index = BigUint::from(pick) % ess.support_size();
        let seq = ess.encode_index(&index).unwrap();
        let energies = alphabet.energies();
        let energy: u64 = seq.iter().map(|&s| energies[s as usize]).sum();
        prop_assert!(energy <= ess.e_max());
        prop_assert_eq!(ess.decode_index(&seq).unwrap(), index);
    }

    #[test]
    fn bit_lines_parse_back(bits in prop::collection::vec(any::<bool>(), 0..64)) {
        let w = BitWord::new(bits);
        prop_assert_eq!(w.to_string().parse::<BitWord>().unwrap(), w);
    }
}

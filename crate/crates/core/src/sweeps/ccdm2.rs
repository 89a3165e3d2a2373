//! Two-layer CCDM hierarchy: a family of inner CCDMs at different rates
//! under an outer CCDM whose composition decides how often each inner
//! matcher is used.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigUint;

use super::{RecordKind, SweepRecord};
use crate::ccdm::{
    optimize_composition, ranked_compositions, required_bits, weak_compositions, CcdmMatcher,
    Composition, CompositionObjective,
};
use crate::error::{Error, Result};
use crate::hidm::{hidm_build, HiDm, SharedDm};
use crate::matcher::DistributionMatcher;
use crate::shaping::{entropy, mb_fit, rate_to_f64, Alphabet, Distribution, Rate};

#[derive(Debug, Clone, PartialEq)]
pub struct Ccdm2Params {
    pub n1: usize,
    pub alphabet: Alphabet,
    pub num_inner: usize,
    pub n2: usize,
    pub target_rate: Rate,
    /// Design rates of the inner matchers after the first; the first is
    /// designed at `target_rate`.
    pub inner_rate_grid: Vec<Rate>,
}

impl Ccdm2Params {
    /// `N1 = 32`, four amplitudes, eight inner matchers, `N2 = 10`, target
    /// rate 1.59.
    pub fn case_study() -> Self {
        Self {
            n1: 32,
            alphabet: Alphabet::new(4).expect("nonzero alphabet"),
            num_inner: 8,
            n2: 10,
            target_rate: Rate::new(159, 100),
            inner_rate_grid: default_inner_grid(7),
        }
    }
}

/// `count` evenly spaced rates from 1.45 to 1.70.
pub fn default_inner_grid(count: usize) -> Vec<Rate> {
    let (lo, hi) = (Rate::new(145, 100), Rate::new(170, 100));
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * Rate::new(i as u64, count as u64 - 1))
            .collect(),
    }
}

/// Inner compositions: the minimum-energy one at the target rate, then one
/// per grid rate. A composition already taken is replaced by the next one in
/// energy order that carries enough bits.
pub fn inner_family(params: &Ccdm2Params) -> Result<Vec<Composition>> {
    if params.num_inner == 0 || params.inner_rate_grid.len() + 1 < params.num_inner {
        return Err(Error::Config(format!(
            "{} inner matchers need {} grid rates, found {}",
            params.num_inner,
            params.num_inner.saturating_sub(1),
            params.inner_rate_grid.len()
        )));
    }
    let costs = params.alphabet.energies_f64();
    let first = optimize_composition(
        params.n1,
        &params.alphabet,
        &params.target_rate,
        CompositionObjective::MinEnergyAtRate,
    )?;
    let mut taken = BTreeSet::from([first.clone()]);
    let mut family = vec![first];
    for rate in params.inner_rate_grid.iter().take(params.num_inner - 1) {
        let min_bits = required_bits(params.n1, rate);
        let next = ranked_compositions(params.n1, &costs, min_bits)
            .into_iter()
            .map(|rc| rc.composition)
            .find(|c| !taken.contains(c))
            .ok_or_else(|| {
                Error::Infeasible(format!(
                    "no unused composition of length {} carries {min_bits} bits",
                    params.n1
                ))
            })?;
        taken.insert(next.clone());
        family.push(next);
    }
    Ok(family)
}

/// Every outer composition of `N2` over the inner family, plus one `L = 1`
/// record per inner matcher.
pub fn sweep_ccdm_2layer(params: &Ccdm2Params) -> Result<Vec<SweepRecord>> {
    let alphabet = &params.alphabet;
    let costs = alphabet.energies_f64();
    let inner = inner_family(params)?;
    let inner_bits: Vec<usize> = inner.iter().map(Composition::input_bits).collect();
    let inner_energy: Vec<f64> = inner.iter().map(|c| c.total_cost(&costs)).collect();
    let inner_storage: Vec<BigUint> = inner
        .iter()
        .map(|c| CcdmMatcher::over_amplitudes(c.clone(), alphabet).map(|m| m.storage_bits()))
        .collect::<Result<_>>()?;
    let n1 = params.n1;
    let m = alphabet.size();

    let mut records = Vec::new();
    for (j, c) in inner.iter().enumerate() {
        let rate = Rate::new(inner_bits[j] as u64, n1 as u64);
        let counts: Vec<f64> = c.counts().iter().map(|&x| x as f64).collect();
        records.push(evaluate(
            alphabet,
            rate,
            inner_energy[j] / n1 as f64,
            &counts,
            SweepRecord {
                kind: RecordKind::Ccdm2,
                n_vec: vec![n1],
                k_vec: vec![inner_bits[j]],
                m_vec: vec![m],
                num_dms_vec: vec![1],
                outer_composition: None,
                rate,
                rate_loss_mb: None,
                rate_loss_induced: None,
                mean_energy: None,
                memory_bits: inner_storage[j].clone(),
                best: false,
            },
        )?);
    }

    let inner_storage_total: BigUint = inner_storage.iter().sum();
    let n_tot = n1 * params.n2;
    for outer in weak_compositions(params.n2 as u32, inner.len()) {
        let oc = Composition::new(outer.clone())?;
        let k_outer = oc.input_bits();
        let k_tot = k_outer
            + outer
                .iter()
                .zip(&inner_bits)
                .map(|(&n, &k)| n as usize * k)
                .sum::<usize>();
        let energy: f64 = outer
            .iter()
            .zip(&inner_energy)
            .map(|(&n, e)| n as f64 * e)
            .sum();
        let mut counts = vec![0.0; m];
        for (&n, c) in outer.iter().zip(&inner) {
            for (acc, &x) in counts.iter_mut().zip(c.counts()) {
                *acc += (n * x) as f64;
            }
        }
        let outer_storage = CcdmMatcher::new(oc, inner_energy.clone())?.storage_bits();
        let mut k_vec = inner_bits.clone();
        k_vec.push(k_outer);
        let rate = Rate::new(k_tot as u64, n_tot as u64);
        records.push(evaluate(
            alphabet,
            rate,
            energy / n_tot as f64,
            &counts,
            SweepRecord {
                kind: RecordKind::Ccdm2,
                n_vec: vec![n1, params.n2],
                k_vec,
                m_vec: vec![m, inner.len()],
                num_dms_vec: vec![inner.len(), 1],
                outer_composition: Some(outer),
                rate,
                rate_loss_mb: None,
                rate_loss_induced: None,
                mean_energy: None,
                memory_bits: &inner_storage_total + outer_storage,
                best: false,
            },
        )?);
    }
    super::sort_records(&mut records);
    Ok(records)
}

fn evaluate(
    alphabet: &Alphabet,
    rate: Rate,
    mean_energy: f64,
    counts: &[f64],
    mut record: SweepRecord,
) -> Result<SweepRecord> {
    let r = rate_to_f64(&rate);
    // compositions above the uniform mean have no MB reference
    record.rate_loss_mb = mb_fit(alphabet, mean_energy).ok().map(|d| entropy(&d) - r);
    record.rate_loss_induced = Some(entropy(&Distribution::from_weights(counts)?) - r);
    record.mean_energy = Some(mean_energy);
    Ok(record)
}

/// The Hi-DM behind a two-layer record.
pub fn build_ccdm2(params: &Ccdm2Params, outer: &[u32]) -> Result<HiDm> {
    let inner = inner_family(params)?;
    let costs = params.alphabet.energies_f64();
    let energies: Vec<f64> = inner.iter().map(|c| c.total_cost(&costs)).collect();
    let lower: Vec<SharedDm> = inner
        .into_iter()
        .map(|c| CcdmMatcher::over_amplitudes(c, &params.alphabet).map(|m| Arc::new(m) as SharedDm))
        .collect::<Result<_>>()?;
    let top = CcdmMatcher::new(Composition::new(outer.to_vec())?, energies)?;
    hidm_build(&params.alphabet, vec![lower, vec![Arc::new(top)]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::verify_dm;

    fn small() -> Ccdm2Params {
        Ccdm2Params {
            n1: 6,
            alphabet: Alphabet::new(3).unwrap(),
            num_inner: 3,
            n2: 3,
            target_rate: Rate::new(1, 1),
            inner_rate_grid: vec![Rate::new(1, 2), Rate::new(5, 6)],
        }
    }

    #[test]
    fn default_grid_endpoints() {
        let g = default_inner_grid(7);
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], Rate::new(145, 100));
        assert_eq!(g[6], Rate::new(170, 100));
    }

    #[test]
    fn inner_family_is_distinct() {
        let mut p = small();
        // the same rate three times still yields three compositions
        p.target_rate = Rate::new(2, 3);
        p.inner_rate_grid = vec![Rate::new(2, 3); 2];
        let fam = inner_family(&p).unwrap();
        let set: BTreeSet<_> = fam.iter().collect();
        assert_eq!(set.len(), 3);
        for c in &fam {
            assert!(c.input_bits() >= 4);
        }
    }

    #[test]
    fn records_match_constructed_hierarchies() {
        let p = small();
        let records = sweep_ccdm_2layer(&p).unwrap();
        let two_layer: Vec<_> = records.iter().filter(|r| r.layers() == 2).collect();
        // weak compositions of 3 into 3 parts
        assert_eq!(two_layer.len(), 10);
        for r in two_layer {
            assert_eq!(r.descriptor_rate().unwrap(), r.rate);
            let h = build_ccdm2(&p, r.outer_composition.as_ref().unwrap()).unwrap();
            let m = h.metrics().unwrap();
            assert_eq!(m.rate, r.rate);
            assert!((m.mean_energy_per_symbol - r.mean_energy.unwrap()).abs() < 1e-12);
            assert!((m.rate_loss_induced - r.rate_loss_induced.unwrap()).abs() < 1e-12);
            assert_eq!(m.memory_bits, r.memory_bits);
            if h.total_bits() <= 16 {
                assert!(verify_dm(&h, 1 << 16, 0, 0).passed());
            }
        }
    }

    #[test]
    fn single_symbol_outer_equals_inner_baseline() {
        let p = small();
        let records = sweep_ccdm_2layer(&p).unwrap();
        let inner = records.iter().find(|r| r.layers() == 1 && r.k_vec[0] == inner_family(&p).unwrap()[0].input_bits()).unwrap();
        let outer = records
            .iter()
            .find(|r| r.outer_composition.as_deref() == Some(&[3, 0, 0][..]))
            .unwrap();
        assert_eq!(*outer.k_vec.last().unwrap(), 0);
        assert_eq!(outer.rate, inner.rate);
        assert!((outer.rate_loss_induced.unwrap() - inner.rate_loss_induced.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn one_inner_matcher_degenerates() {
        let mut p = small();
        p.num_inner = 1;
        let records = sweep_ccdm_2layer(&p).unwrap();
        let two: Vec<_> = records.iter().filter(|r| r.layers() == 2).collect();
        assert_eq!(two.len(), 1);
        let k1 = inner_family(&p).unwrap()[0].input_bits();
        assert_eq!(two[0].rate, Rate::new(k1 as u64, 6));
    }
}

//! PPM layers over the lowest-energy LUT family, swept over `k1`, the
//! number of levels and the position counts.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{RecordKind, SweepRecord};
use crate::error::Result;
use crate::lutdm::{lowest_cost_flat, space_size, LutFamily};
use crate::ppm::ppm_from_family;
use crate::shaping::{rate_to_f64, Alphabet, RateLossMode};

#[derive(Debug, Clone, PartialEq)]
pub struct PpmSweepParams {
    pub n1: usize,
    pub alphabet: Alphabet,
    pub k1_range: Vec<usize>,
    pub l_max: usize,
    /// Candidate position counts, each a power of two.
    pub position_grid: Vec<usize>,
    /// Upper bound on `N_tot = N1 * N2 * ... * N_L`.
    pub cap_ntot: usize,
    pub mode: RateLossMode,
}

impl PpmSweepParams {
    /// `N1 = 10` over four amplitudes, `k1` from 8 to 20, up to four levels.
    pub fn case_study() -> Self {
        Self {
            n1: 10,
            alphabet: Alphabet::new(4).expect("nonzero alphabet"),
            k1_range: (8..=20).collect(),
            l_max: 4,
            position_grid: vec![2, 4, 8, 16, 32, 64],
            cap_ntot: 1 << 16,
            mode: RateLossMode::Mb,
        }
    }
}

/// Position vectors `(N_2, ..., N_L)` over the grid with `n1 * prod <= cap`.
fn position_vectors(grid: &[usize], levels: usize, n1: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 1..levels {
        out = out
            .into_iter()
            .flat_map(|v: Vec<usize>| {
                let used: usize = n1 * v.iter().product::<usize>();
                grid.iter()
                    .filter(move |&&n| used.checked_mul(n).is_some_and(|t| t <= cap))
                    .map(move |&n| {
                        let mut w = v.clone();
                        w.push(n);
                        w
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// One record per `(k1, L, positions)`; the lowest-loss record of each
/// `(k1, L)` is flagged `best`.
pub fn sweep_ppm(params: &PpmSweepParams) -> Result<Vec<SweepRecord>> {
    let costs = params.alphabet.energies_f64();
    let m = params.alphabet.size();
    let space = space_size(m, params.n1);
    let mut records = Vec::new();
    for &k1 in &params.k1_range {
        let fits = |l: usize| space.is_none_or(|s| k1 < 64 && ((l as u64) << k1) <= s);
        let l_top = (1..=params.l_max).rev().find(|&l| fits(l)).unwrap_or(0);
        if l_top == 0 {
            continue;
        }
        // one enumeration serves every level count
        let sorted = lowest_cost_flat(&costs, params.n1, (l_top as u64) << k1)?;
        for l in 1..=l_top {
            let family = Arc::new(LutFamily::from_sorted_prefix(
                costs.clone(),
                params.n1,
                k1,
                l,
                &sorted,
            )?);
            let mut group = Vec::new();
            for positions in position_vectors(&params.position_grid, l, params.n1, params.cap_ntot) {
                let p = ppm_from_family(&family, &positions)?;
                let metrics = p.metrics()?;
                let mut n_vec = vec![params.n1];
                n_vec.extend(&positions);
                let mut k_vec = vec![k1];
                k_vec.extend(positions.iter().map(|n| n.trailing_zeros() as usize));
                // level j keeps the block types with markers j..L
                let num_dms_vec: Vec<usize> = (0..l).map(|j| if j + 1 == l { 1 } else { l - j }).collect();
                let mut m_vec = vec![m];
                m_vec.extend((0..l - 1).map(|j| l - j));
                group.push(SweepRecord {
                    kind: RecordKind::Ppm,
                    n_vec,
                    k_vec,
                    m_vec,
                    num_dms_vec,
                    outer_composition: None,
                    rate: metrics.rate,
                    rate_loss_mb: Some(metrics.rate_loss_mb),
                    rate_loss_induced: Some(metrics.rate_loss_induced),
                    mean_energy: Some(metrics.mean_energy_per_symbol),
                    memory_bits: metrics.memory_bits,
                    best: false,
                });
            }
            let best = group
                .iter()
                .enumerate()
                .filter_map(|(i, r)| r.rate_loss(params.mode).map(|x| (i, x)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i);
            if let Some(i) = best {
                group[i].best = true;
            }
            records.extend(group);
        }
    }
    super::sort_records(&mut records);
    Ok(records)
}

/// `(rate, loss)` of the `best` records with `L` layers, by increasing rate.
pub fn best_curve(records: &[SweepRecord], layers: usize, mode: RateLossMode) -> Vec<(f64, f64)> {
    let mut by_rate: BTreeMap<_, f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.best && r.layers() == layers) {
        if let Some(loss) = r.rate_loss(mode) {
            let e = by_rate.entry(r.rate).or_insert(loss);
            *e = e.min(loss);
        }
    }
    by_rate
        .into_iter()
        .map(|(rate, loss)| (rate_to_f64(&rate), loss))
        .collect()
}

/// Piecewise-linear interpolation of a curve sorted by rate; `None` outside
/// its rate span.
pub fn interpolate(curve: &[(f64, f64)], rate: f64) -> Option<f64> {
    let i = curve.partition_point(|&(r, _)| r < rate);
    if i < curve.len() && curve[i].0 == rate {
        return Some(curve[i].1);
    }
    if i == 0 || i == curve.len() {
        return None;
    }
    let (r0, l0) = curve[i - 1];
    let (r1, l1) = curve[i];
    Some(l0 + (l1 - l0) * (rate - r0) / (r1 - r0))
}

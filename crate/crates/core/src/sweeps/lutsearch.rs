//! Search over L-layer LUT Hi-DM structures at an exact target rate.
//!
//! Every layer is one LUT family. Layer 1 is designed against the amplitude
//! energies and layer `l + 1` against the mean costs of the `num_dms` LUTs
//! of layer `l`. Candidates are explored bottom-up: the lowest-cost
//! sequences of a layer are enumerated once and every `(k, num_dms)` choice
//! that fits is read off that shared prefix. The top layer's `k` is then
//! forced by the exact-rate constraint.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;

use super::{pareto_frontier, RecordKind, SweepRecord};
use crate::error::{Error, Result};
use crate::ess::{ess_build, ess_memory_bits};
use crate::hidm::{hidm_build, HiDm, SharedDm};
use crate::matcher::DistributionMatcher;
use crate::lutdm::{build_lut_family, lowest_cost_flat, space_size};
use crate::shaping::{ceil_log2, entropy, mb_fit, rate_to_f64, Alphabet, Distribution, Rate, RateLossMode};
use crate::Symbol;

#[derive(Debug, Clone, PartialEq)]
pub struct LutSearchParams {
    pub target: Rate,
    pub alphabet: Alphabet,
    /// Layer counts to explore.
    pub layers: Vec<usize>,
    /// `N_tot = denominator * scale` for each scale.
    pub scales: Vec<u64>,
    /// Allowed LUT counts below the top layer.
    pub num_dms_grid: Vec<usize>,
    pub k_min: usize,
    pub k_max: usize,
    /// Block lengths below this are skipped (a length-1 layer adds no
    /// structure).
    pub min_block_len: usize,
    pub memory_cap: u64,
    pub mode: RateLossMode,
    /// Skip partial structures whose every completion is dominated by an
    /// already evaluated structure with the same layer count. Only applies
    /// in MB mode, where a loss bound is available.
    pub prune: bool,
}

impl LutSearchParams {
    pub fn new(target: Rate, alphabet: Alphabet) -> Self {
        Self {
            target,
            alphabet,
            layers: (1..=5).collect(),
            scales: vec![1],
            num_dms_grid: vec![2, 4, 8, 16, 32],
            k_min: 0,
            k_max: 48,
            min_block_len: 2,
            memory_cap: 1 << 20,
            mode: RateLossMode::Mb,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LutSearchResult {
    /// Every constructed candidate, in canonical order.
    pub evaluated: Vec<SweepRecord>,
    /// Pareto frontier of `(memory_bits, rate loss)` over `evaluated`.
    pub frontier: Vec<SweepRecord>,
    /// Single-LUT rows too large to construct; memory only.
    pub references: Vec<SweepRecord>,
}

impl LutSearchResult {
    /// All rows with frontier members flagged `best`.
    pub fn records(&self) -> Vec<SweepRecord> {
        let mut out: Vec<SweepRecord> = self
            .evaluated
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.best = self.frontier.iter().any(|f| f == &r);
                r
            })
            .collect();
        out.extend(self.references.iter().cloned());
        super::sort_records(&mut out);
        out
    }
}

/// Ordered factorizations of `n` into `parts` factors, each at least
/// `min_factor`.
pub fn factorizations(n: usize, parts: usize, min_factor: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, parts: usize, min: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            if n >= min {
                prefix.push(n);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        for d in min.max(1)..=n {
            if n.is_multiple_of(d) {
                prefix.push(d);
                go(n / d, parts - 1, min, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    if parts > 0 && n > 0 {
        go(n, parts, min_factor, &mut Vec::new(), &mut out);
    }
    out
}

/// The single LUT at the target rate: `N = N_tot`, `k = K_tot`. Its memory
/// is reported exactly; it is evaluated only when it fits under the cap.
pub fn single_lut_reference(params: &LutSearchParams, scale: u64) -> Result<SweepRecord> {
    let n = (*params.target.denom() * scale) as usize;
    let k = (*params.target.numer() * scale) as usize;
    let m = params.alphabet.size();
    let memory = (BigUint::one() << k) * BigUint::from(n as u64) * BigUint::from(ceil_log2(m as u64));
    let mut record = SweepRecord {
        kind: RecordKind::Lut,
        n_vec: vec![n],
        k_vec: vec![k],
        m_vec: vec![m],
        num_dms_vec: vec![1],
        outer_composition: None,
        rate: params.target,
        rate_loss_mb: None,
        rate_loss_induced: None,
        mean_energy: None,
        memory_bits: memory.clone(),
        best: false,
    };
    let feasible = space_size(m, n).is_none_or(|s| k < 64 && (1u64 << k) <= s);
    if feasible && memory <= BigUint::from(params.memory_cap) {
        let hidm = build_lut_hidm(&params.alphabet, &[n], &[k], &[1])?;
        fill_metrics(&mut record, &hidm)?;
    }
    Ok(record)
}

/// One ESS block at the target rate with `N = N_tot`, `k = K_tot`; its
/// memory is the trellis storage.
pub fn ess_reference(target: Rate, alphabet: &Alphabet, scale: u64) -> Result<SweepRecord> {
    let n = (*target.denom() * scale) as usize;
    let k = (*target.numer() * scale) as usize;
    let ess = ess_build(n, alphabet, k)?;
    let occupancy = ess.occupancy();
    let mean_energy = ess.mean_cost() / n as f64;
    let r = rate_to_f64(&target);
    Ok(SweepRecord {
        kind: RecordKind::Ess,
        n_vec: vec![n],
        k_vec: vec![k],
        m_vec: vec![alphabet.size()],
        num_dms_vec: vec![1],
        outer_composition: None,
        rate: target,
        rate_loss_mb: mb_fit(alphabet, mean_energy).ok().map(|d| entropy(&d) - r),
        rate_loss_induced: Some(entropy(&Distribution::from_weights(&occupancy)?) - r),
        mean_energy: Some(mean_energy),
        memory_bits: BigUint::from(ess_memory_bits(ess.trellis())),
        best: false,
    })
}

fn fill_metrics(record: &mut SweepRecord, hidm: &HiDm) -> Result<()> {
    let m = hidm.metrics()?;
    record.rate_loss_mb = Some(m.rate_loss_mb);
    record.rate_loss_induced = Some(m.rate_loss_induced);
    record.mean_energy = Some(m.mean_energy_per_symbol);
    record.memory_bits = m.memory_bits;
    Ok(())
}

/// Builds the LUT Hi-DM described by a search record.
pub fn build_lut_hidm(
    alphabet: &Alphabet,
    n_vec: &[usize],
    k_vec: &[usize],
    num_dms_vec: &[usize],
) -> Result<HiDm> {
    if n_vec.is_empty() || n_vec.len() != k_vec.len() || n_vec.len() != num_dms_vec.len() {
        return Err(Error::InvalidStructure(
            "N, k and num_dms vectors must have one entry per layer".into(),
        ));
    }
    let mut costs = alphabet.energies_f64();
    let mut layers: Vec<Vec<SharedDm>> = Vec::with_capacity(n_vec.len());
    for ((&n, &k), &num) in n_vec.iter().zip(k_vec).zip(num_dms_vec) {
        let family = build_lut_family(costs, n, k, num)?;
        costs = family.mean_costs().to_vec();
        layers.push(family.luts().into_iter().map(|l| Arc::new(l) as SharedDm).collect());
    }
    hidm_build(alphabet, layers)
}

/// Sorted lowest-cost prefix with symbol-count checkpoints.
struct NodeTable {
    n: usize,
    m: usize,
    seqs: Vec<Symbol>,
    stride: usize,
    /// counts of each symbol over `seqs[..i * stride]`
    checkpoints: Vec<u64>,
}

impl NodeTable {
    fn new(costs: &[f64], n: usize, t: u64) -> Result<Self> {
        let seqs = lowest_cost_flat(costs, n, t)?;
        let m = costs.len();
        let stride = if t as usize * m <= 1 << 22 { 1 } else { 64 };
        let mut checkpoints = vec![0u64; m];
        let mut running = vec![0u64; m];
        for (i, seq) in seqs.chunks(n).enumerate() {
            for &s in seq {
                running[s as usize] += 1;
            }
            if (i + 1) % stride == 0 {
                checkpoints.extend_from_slice(&running);
            }
        }
        Ok(Self {
            n,
            m,
            seqs,
            stride,
            checkpoints,
        })
    }

    fn prefix_counts(&self, pos: usize) -> Vec<u64> {
        let c = pos / self.stride;
        let mut counts = self.checkpoints[c * self.m..(c + 1) * self.m].to_vec();
        for seq in self.seqs[c * self.stride * self.n..pos * self.n].chunks(self.n) {
            for &s in seq {
                counts[s as usize] += 1;
            }
        }
        counts
    }

    /// Average symbol counts over entries `[start, start + len)`.
    fn slice_occupancy(&self, start: usize, len: usize) -> Vec<f64> {
        let hi = self.prefix_counts(start + len);
        let lo = self.prefix_counts(start);
        hi.iter()
            .zip(lo)
            .map(|(h, l)| (h - l) as f64 / len as f64)
            .collect()
    }
}

/// Virtual symbols of the layer being designed.
#[derive(Clone)]
struct Lower {
    costs: Vec<f64>,
    /// amplitude occupancy of one block of each virtual symbol
    occupancy: Vec<Vec<f64>>,
    /// input bits per block, lower layers included
    bits: u64,
    memory: u64,
    k_vec: Vec<usize>,
    num_vec: Vec<usize>,
}

/// `(memory, loss)` points with strictly decreasing loss.
#[derive(Default)]
struct Incumbent(Vec<(u64, f64)>);

impl Incumbent {
    /// Lowest loss among points using at most `memory` bits.
    fn best_within(&self, memory: u64) -> Option<f64> {
        let i = self.0.partition_point(|&(m, _)| m <= memory);
        (i > 0).then(|| self.0[i - 1].1)
    }

    fn insert(&mut self, memory: u64, loss: f64) {
        if self.best_within(memory).is_some_and(|l| l <= loss) {
            return;
        }
        let i = self.0.partition_point(|&(m, _)| m < memory);
        let mut j = i;
        while j < self.0.len() && self.0[j].1 >= loss {
            j += 1;
        }
        self.0.splice(i..j, [(memory, loss)]);
    }
}

/// Lowest mean cost of any distribution over `costs` with entropy at least
/// `bits`, approached from below.
///
/// A fixed-length code carrying `K` bits in `n` symbols has a per-position
/// average distribution `P` with `n * H(P) >= K` (subadditivity and
/// concavity of entropy), so its mean cost per symbol is at least this value
/// at `bits = K / n`.
fn min_cost_at_entropy(costs: &[f64], bits: f64) -> f64 {
    let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if bits <= 0.0 || hi - lo <= 0.0 {
        return lo;
    }
    let dist = |t: f64| {
        let w: Vec<f64> = costs.iter().map(|c| (-t * (c - lo) / (hi - lo)).exp()).collect();
        let z: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / z).collect();
        let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|x| -x * x.log2()).sum();
        (h, dot(&p, costs))
    };
    // entropy falls as t grows; keep `t_hi` on the low-entropy side
    let (mut t_lo, mut t_hi) = (0.0f64, 1e4f64);
    if dist(t_lo).0 < bits {
        return dist(t_lo).1;
    }
    if dist(t_hi).0 >= bits {
        return dist(t_hi).1;
    }
    for _ in 0..100 {
        let mid = 0.5 * (t_lo + t_hi);
        if dist(mid).0 >= bits {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    dist(t_hi).1
}

struct Search<'a> {
    params: &'a LutSearchParams,
    factors: &'a [usize],
    target_bits: u64,
    max_num: usize,
    incumbent: &'a mut Incumbent,
    out: Vec<SweepRecord>,
}

impl Search<'_> {
    /// Upper bound on the bits layers `from..` can still add, given that
    /// layer `from` sees `alphabet` virtual symbols.
    fn max_upper_bits(&self, from: usize, alphabet: usize) -> u64 {
        let mut total = 0u64;
        let mut m = alphabet;
        for j in from..self.factors.len() {
            let n = self.factors[j];
            let by_space = (n as f64 * (m as f64).log2() + 1e-9).floor() as u64;
            let b = ceil_log2(m as u64).max(1) as u64;
            let by_memory = (self.params.memory_cap as f64 / (n as u64 * b) as f64).log2().floor();
            let k = by_space
                .min(by_memory.max(0.0) as u64)
                .min(self.params.k_max as u64);
            let above: usize = self.factors[j + 1..].iter().product();
            total += k * above as u64;
            m = self.max_num;
        }
        total
    }

    /// Whether every completion of `lower` is dominated.
    fn dominated(&self, layer: usize, lower: &Lower) -> bool {
        let Some(best) = self.incumbent.best_within(lower.memory) else {
            return false;
        };
        let n_rem: usize = self.factors[layer..].iter().product();
        let Some(k_rem) = self.target_bits.checked_sub(n_rem as u64 * lower.bits) else {
            return true;
        };
        let per_symbol = k_rem as f64 / n_rem as f64;
        if per_symbol > (lower.costs.len() as f64).log2() + 1e-9 {
            return true;
        }
        let n_tot: usize = self.factors.iter().product();
        let alphabet = &self.params.alphabet;
        let energy = (min_cost_at_entropy(&lower.costs, per_symbol) * n_rem as f64 / n_tot as f64)
            .clamp(1.0, alphabet.uniform_mean_energy());
        let Ok(mb) = mb_fit(alphabet, energy) else {
            return false;
        };
        let bound = entropy(&mb) - rate_to_f64(&self.params.target) - 1e-9;
        best <= bound
    }

    fn descend(&mut self, layer: usize, lower: Lower) -> Result<()> {
        let prunable = layer > 0 && self.params.prune && self.params.mode == RateLossMode::Mb;
        if prunable && self.dominated(layer, &lower) {
            return Ok(());
        }
        let n = self.factors[layer];
        let m = lower.costs.len();
        let b = ceil_log2(m as u64) as u64;
        let space = space_size(m, n);
        let fits = |t: u64| space.is_none_or(|s| t <= s);
        let cap = self.params.memory_cap;
        let above: u64 = self.factors[layer + 1..].iter().product::<usize>() as u64;

        if layer + 1 == self.factors.len() {
            let Some(k) = self.target_bits.checked_sub(n as u64 * lower.bits) else {
                return Ok(());
            };
            if k < self.params.k_min as u64 || k > self.params.k_max as u64 || !fits(1 << k) {
                return Ok(());
            }
            let memory = lower.memory + (1u64 << k) * n as u64 * b;
            if memory > cap {
                return Ok(());
            }
            let table = NodeTable::new(&lower.costs, n, 1 << k)?;
            let counts = table.slice_occupancy(0, 1 << k);
            let mut k_vec = lower.k_vec.clone();
            k_vec.push(k as usize);
            let mut num_vec = lower.num_vec.clone();
            num_vec.push(1);
            let record = self.record(&lower, &counts, k_vec, num_vec, memory)?;
            if let Some(loss) = record.rate_loss(self.params.mode) {
                self.incumbent.insert(memory, loss);
            }
            self.out.push(record);
            return Ok(());
        }

        let mut options = Vec::new();
        for &num in &self.params.num_dms_grid {
            if num < 2 {
                continue;
            }
            for k in self.params.k_min..=self.params.k_max {
                let t = (num as u64) << k;
                let memory = lower.memory + t * n as u64 * b;
                let bits = k as u64 + n as u64 * lower.bits;
                if !fits(t) || memory > cap || above * bits > self.target_bits {
                    break;
                }
                if self.target_bits - above * bits > self.max_upper_bits(layer + 1, num) {
                    continue;
                }
                options.push((num, k, memory, bits));
            }
        }
        let Some(t_max) = options.iter().map(|&(num, k, ..)| (num as u64) << k).max() else {
            return Ok(());
        };
        let table = NodeTable::new(&lower.costs, n, t_max)?;
        for (num, k, memory, bits) in options {
            let slice = 1usize << k;
            let mut next = Lower {
                costs: Vec::with_capacity(num),
                occupancy: Vec::with_capacity(num),
                bits,
                memory,
                k_vec: lower.k_vec.clone(),
                num_vec: lower.num_vec.clone(),
            };
            next.k_vec.push(k);
            next.num_vec.push(num);
            for i in 0..num {
                let counts = table.slice_occupancy(i * slice, slice);
                next.costs.push(dot(&counts, &lower.costs));
                next.occupancy.push(mix(&counts, &lower.occupancy));
            }
            self.descend(layer + 1, next)?;
        }
        Ok(())
    }

    fn record(
        &self,
        lower: &Lower,
        top_counts: &[f64],
        k_vec: Vec<usize>,
        num_vec: Vec<usize>,
        memory: u64,
    ) -> Result<SweepRecord> {
        let n_tot: usize = self.factors.iter().product();
        let occupancy = mix(top_counts, &lower.occupancy);
        let mean_energy = dot(top_counts, &lower.costs) / n_tot as f64;
        let rate = self.params.target;
        let r = rate_to_f64(&rate);
        let alphabet = &self.params.alphabet;
        let rate_loss_mb = mb_fit(alphabet, mean_energy).ok().map(|d| entropy(&d) - r);
        let rate_loss_induced = entropy(&Distribution::from_weights(&occupancy)?) - r;
        let mut m_vec = vec![alphabet.size()];
        m_vec.extend(&num_vec[..num_vec.len() - 1]);
        Ok(SweepRecord {
            kind: RecordKind::Lut,
            n_vec: self.factors.to_vec(),
            k_vec,
            m_vec,
            num_dms_vec: num_vec,
            outer_composition: None,
            rate,
            rate_loss_mb,
            rate_loss_induced: Some(rate_loss_induced),
            mean_energy: Some(mean_energy),
            memory_bits: BigUint::from(memory),
            best: false,
        })
    }
}

fn dot(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

fn mix(weights: &[f64], rows: &[Vec<f64>]) -> Vec<f64> {
    let mut acc = vec![0.0; rows[0].len()];
    for (w, row) in weights.iter().zip(rows) {
        for (a, x) in acc.iter_mut().zip(row) {
            *a += w * x;
        }
    }
    acc
}

/// Explores all structures with `L >= 2` layers in `params.layers` and
/// block lengths multiplying to a scaled target denominator, plus the
/// single-LUT row for `L = 1`.
pub fn search_lut_hidm(params: &LutSearchParams) -> Result<LutSearchResult> {
    let m1 = params.alphabet.size();
    let mut jobs: Vec<(u64, Vec<usize>)> = Vec::new();
    let mut references = Vec::new();
    let mut evaluated = Vec::new();
    for &scale in &params.scales {
        for &l in &params.layers {
            if l == 1 {
                let reference = single_lut_reference(params, scale)?;
                if reference.rate_loss_mb.is_some() {
                    evaluated.push(reference);
                } else {
                    references.push(reference);
                }
                continue;
            }
            let n_tot = (*params.target.denom() * scale) as usize;
            for f in factorizations(n_tot, l, params.min_block_len.max(1)) {
                jobs.push((*params.target.numer() * scale, f));
            }
        }
    }
    let identity: Vec<Vec<f64>> = (0..m1)
        .map(|i| (0..m1).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let max_num = params.num_dms_grid.iter().copied().max().unwrap_or(1);
    // sequential, in canonical job order, so pruning is deterministic
    let mut incumbents: Vec<Incumbent> = Vec::new();
    for (target_bits, factors) in &jobs {
        let l = factors.len();
        if incumbents.len() <= l {
            incumbents.resize_with(l + 1, Incumbent::default);
        }
        let mut search = Search {
            params,
            factors,
            target_bits: *target_bits,
            max_num,
            incumbent: &mut incumbents[l],
            out: Vec::new(),
        };
        let root = Lower {
            costs: params.alphabet.energies_f64(),
            occupancy: identity.clone(),
            bits: 0,
            memory: 0,
            k_vec: Vec::new(),
            num_vec: Vec::new(),
        };
        search.descend(0, root)?;
        evaluated.extend(search.out);
    }
    super::sort_records(&mut evaluated);
    let frontier = pareto_frontier(&evaluated, params.mode);
    Ok(LutSearchResult {
        evaluated,
        frontier,
        references,
    })
}

//! Case-study drivers: the two-layer CCDM cloud, PPM layers over a LUT
//! family, and the LUT Hi-DM structure search.

use std::io::Write;

use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::shaping::{fmt_sig6, rate_to_f64, Rate, RateLossMode};

mod ccdm2;
mod lutsearch;
mod ppm;

pub use ccdm2::{
    build_ccdm2, default_inner_grid, inner_family, sweep_ccdm_2layer, Ccdm2Params,
};
pub use lutsearch::{
    build_lut_hidm, ess_reference, factorizations, search_lut_hidm, single_lut_reference, LutSearchParams,
    LutSearchResult,
};
pub use ppm::{best_curve, interpolate, sweep_ppm, PpmSweepParams};

/// "Kbit" as used in memory budgets.
pub const KBIT: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    /// Two-layer CCDM hierarchy.
    Ccdm2,
    Ppm,
    /// LUT Hi-DM (a single LUT when `L = 1`).
    Lut,
    /// Single ESS block, a memory reference.
    Ess,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ccdm2 => "ccdm2",
            Self::Ppm => "ppm",
            Self::Lut => "lut",
            Self::Ess => "ess",
        }
    }
}

/// One evaluated structure.
///
/// `k_vec` lists per-layer input bits. For `Ccdm2` records layer 1 has one
/// `k` per inner matcher, so `k_vec` holds the inner values followed by the
/// outer one and `outer_composition` completes the descriptor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub kind: RecordKind,
    pub n_vec: Vec<usize>,
    pub k_vec: Vec<usize>,
    pub m_vec: Vec<usize>,
    pub num_dms_vec: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_composition: Option<Vec<u32>>,
    #[serde(serialize_with = "ser_rate")]
    pub rate: Rate,
    /// `None` for reference rows that are too large to construct.
    pub rate_loss_mb: Option<f64>,
    pub rate_loss_induced: Option<f64>,
    pub mean_energy: Option<f64>,
    #[serde(serialize_with = "ser_big")]
    pub memory_bits: BigUint,
    pub best: bool,
}

fn ser_rate<S: serde::Serializer>(r: &Rate, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

fn ser_big<S: serde::Serializer>(b: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&b.to_string())
}

impl SweepRecord {
    pub fn layers(&self) -> usize {
        self.n_vec.len()
    }

    pub fn rate_loss(&self, mode: RateLossMode) -> Option<f64> {
        match mode {
            RateLossMode::Mb => self.rate_loss_mb,
            RateLossMode::Induced => self.rate_loss_induced,
        }
    }

    /// `log2` of the memory, usable when the exact value overflows `f64`.
    pub fn memory_log2(&self) -> f64 {
        crate::shaping::big_log2(&self.memory_bits)
    }

    /// `K_tot / N_tot` recomputed from the descriptor.
    pub fn descriptor_rate(&self) -> Result<Rate> {
        let n_tot: usize = self.n_vec.iter().product();
        let k_tot = match (self.kind, &self.outer_composition) {
            (RecordKind::Ccdm2, Some(counts)) => {
                let (outer, inner) = self.k_vec.split_last().ok_or_else(bad_descriptor)?;
                if inner.len() != counts.len() {
                    return Err(bad_descriptor());
                }
                outer
                    + inner
                        .iter()
                        .zip(counts)
                        .map(|(k, &c)| k * c as usize)
                        .sum::<usize>()
            }
            _ => {
                if self.k_vec.len() != self.n_vec.len() {
                    return Err(bad_descriptor());
                }
                let mut above = n_tot;
                self.k_vec
                    .iter()
                    .zip(&self.n_vec)
                    .map(|(&k, &n)| {
                        above /= n;
                        k * above
                    })
                    .sum()
            }
        };
        Ok(Rate::new(k_tot as u64, n_tot as u64))
    }

    fn csv_row(&self) -> [String; 13] {
        let join = |v: &[usize]| {
            v.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join("-")
        };
        let real = |x: Option<f64>| x.map(fmt_sig6).unwrap_or_default();
        [
            self.kind.as_str().to_string(),
            self.layers().to_string(),
            join(&self.n_vec),
            join(&self.k_vec),
            join(&self.m_vec),
            join(&self.num_dms_vec),
            format!("{}/{}", self.rate.numer(), self.rate.denom()),
            fmt_sig6(rate_to_f64(&self.rate)),
            real(self.rate_loss_mb),
            real(self.rate_loss_induced),
            real(self.mean_energy),
            self.memory_bits.to_string(),
            self.best.to_string(),
        ]
    }
}

fn bad_descriptor() -> Error {
    Error::InvalidStructure("record descriptor is inconsistent".into())
}

pub const CSV_HEADER: [&str; 13] = [
    "kind",
    "L",
    "N_vec",
    "k_vec",
    "M_vec",
    "num_dms_vec",
    "rate_exact",
    "rate",
    "rate_loss_mb",
    "rate_loss_induced",
    "mean_energy",
    "memory_bits",
    "best",
];

/// Canonical order: `(L, rate, memory)`, then the descriptor.
pub fn sort_records(records: &mut [SweepRecord]) {
    records.sort_by(|a, b| {
        a.layers()
            .cmp(&b.layers())
            .then_with(|| a.rate.cmp(&b.rate))
            .then_with(|| a.memory_bits.cmp(&b.memory_bits))
            .then_with(|| a.n_vec.cmp(&b.n_vec))
            .then_with(|| a.k_vec.cmp(&b.k_vec))
            .then_with(|| a.num_dms_vec.cmp(&b.num_dms_vec))
            .then_with(|| a.outer_composition.cmp(&b.outer_composition))
    });
}

/// Metadata written as `#` lines above the CSV header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvMeta {
    pub mode: RateLossMode,
    pub seed: u64,
    pub extra: Vec<(String, String)>,
}

impl CsvMeta {
    pub fn new(mode: RateLossMode, seed: u64) -> Self {
        Self {
            mode,
            seed,
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }
}

/// Writes records sorted canonically, preceded by metadata lines.
pub fn write_csv<W: Write>(out: W, records: &[SweepRecord], meta: &CsvMeta) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("write failed: {e}"));
    let mut out = out;
    writeln!(out, "# tool: hidm {}", env!("CARGO_PKG_VERSION")).map_err(io)?;
    writeln!(out, "# mode: {}", meta.mode).map_err(io)?;
    writeln!(out, "# kbit: {KBIT} bits").map_err(io)?;
    writeln!(out, "# memory: LUT tables only, ceil(log2 M) bits per stored symbol").map_err(io)?;
    writeln!(out, "# seed: {}", meta.seed).map_err(io)?;
    for (k, v) in &meta.extra {
        writeln!(out, "# {k}: {v}").map_err(io)?;
    }
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut writer = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Config(format!("write failed: {e}"));
    writer.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &sorted {
        writer.write_record(r.csv_row()).map_err(csv_err)?;
    }
    writer.flush().map_err(io)?;
    Ok(())
}

/// Records not dominated in `(memory, loss)`, by increasing memory. Records
/// without a loss are ignored.
pub fn pareto_frontier(records: &[SweepRecord], mode: RateLossMode) -> Vec<SweepRecord> {
    let mut candidates: Vec<&SweepRecord> = records
        .iter()
        .filter(|r| r.rate_loss(mode).is_some())
        .collect();
    candidates.sort_by(|a, b| {
        a.memory_bits
            .cmp(&b.memory_bits)
            .then_with(|| a.rate_loss(mode).unwrap().total_cmp(&b.rate_loss(mode).unwrap()))
    });
    let mut frontier: Vec<SweepRecord> = Vec::new();
    for r in candidates {
        let loss = r.rate_loss(mode).unwrap();
        let improves = frontier
            .last()
            .is_none_or(|last| loss < last.rate_loss(mode).unwrap());
        if improves {
            if frontier
                .last()
                .is_some_and(|last| last.memory_bits == r.memory_bits)
            {
                frontier.pop();
            }
            frontier.push(r.clone());
        }
    }
    frontier
}

/// Lowest loss among records with `L` layers and memory within `budget`.
pub fn min_loss_within(
    records: &[SweepRecord],
    layers: usize,
    budget: &BigUint,
    mode: RateLossMode,
) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.layers() == layers && &r.memory_bits <= budget)
        .filter_map(|r| r.rate_loss(mode))
        .min_by(f64::total_cmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(mem: u64, loss: f64) -> SweepRecord {
        SweepRecord {
            kind: RecordKind::Lut,
            n_vec: vec![4, 5],
            k_vec: vec![6, 2],
            m_vec: vec![4, 4],
            num_dms_vec: vec![4, 1],
            outer_composition: None,
            rate: Rate::new(32, 20),
            rate_loss_mb: Some(loss),
            rate_loss_induced: Some(loss),
            mean_energy: Some(1.0),
            memory_bits: BigUint::from(mem),
            best: false,
        }
    }

    #[test]
    fn frontier_is_strictly_monotone() {
        let records = vec![
            rec(10, 0.5),
            rec(10, 0.4),
            rec(20, 0.45),
            rec(30, 0.3),
            rec(40, 0.3),
            rec(5, 0.9),
        ];
        let f = pareto_frontier(&records, RateLossMode::Mb);
        let points: Vec<(u64, f64)> = f
            .iter()
            .map(|r| (r.memory_bits.to_string().parse().unwrap(), r.rate_loss_mb.unwrap()))
            .collect();
        assert_eq!(points, vec![(5, 0.9), (10, 0.4), (30, 0.3)]);
    }

    #[test]
    fn descriptor_rate_matches_layer_formula() {
        let r = rec(1, 0.1);
        // 2 + 5 * 6 = 32 bits over 20 amplitudes
        assert_eq!(r.descriptor_rate().unwrap(), r.rate);
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[rec(7, 0.25)], &CsvMeta::new(RateLossMode::Mb, 3)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines[1], "lut,2,4-5,6-2,4-4,4-1,8/5,1.60000,0.250000,0.250000,1.00000,7,false");
        assert!(text.contains("# seed: 3"));
        assert!(text.contains("# kbit: 1024 bits"));
    }
}

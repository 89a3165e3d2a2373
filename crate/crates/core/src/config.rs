//! JSON structure descriptions and their construction.
//!
//! ```json
//! {"type": "hidm", "layers": [
//!     {"dm": "lut", "N": 3, "k": 4, "num_dms": 2, "alphabet_size": 4},
//!     {"dm": "lut", "N": 3, "k": 3}
//! ]}
//! {"type": "ppm", "base": {"dm": "lut", "N": 10, "k": 12, "num_dms": 3, "alphabet_size": 4},
//!  "positions": [4, 8]}
//! ```
//!
//! Layer 1 matchers are designed against amplitude energies; every upper
//! layer is designed against the mean costs of the matchers below it.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ccdm::{CcdmMatcher, Composition};
use crate::error::{Error, Result};
use crate::ess::ess_build;
use crate::hidm::{hidm_build, verify_disjoint, DisjointReport, HiDm, MetricsReport, SharedDm};
use crate::lutdm::LutFamily;
use crate::matcher::DistributionMatcher;
use crate::ppm::{ppm_build, PpmStructure};
use crate::shaping::{Alphabet, BitWord, Rate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum StructureConfig {
    Hidm { layers: Vec<LayerSpec> },
    Ppm { base: LayerSpec, positions: Vec<usize> },
}

/// One layer: `num_dms` matchers of one kind. `alphabet_size` is required on
/// layer 1 and, when given above it, must equal the matcher count below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dm", rename_all = "lowercase", deny_unknown_fields)]
pub enum LayerSpec {
    Lut {
        #[serde(rename = "N")]
        n: usize,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        num_dms: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphabet_size: Option<usize>,
    },
    Ccdm {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        composition: Option<Vec<u32>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        compositions: Option<Vec<Vec<u32>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        num_dms: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphabet_size: Option<usize>,
    },
    Ess {
        #[serde(rename = "N")]
        n: usize,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        num_dms: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alphabet_size: Option<usize>,
    },
}

impl LayerSpec {
    fn num_dms(&self) -> usize {
        match self {
            Self::Lut { num_dms, .. } | Self::Ess { num_dms, .. } => num_dms.unwrap_or(1),
            Self::Ccdm {
                num_dms,
                compositions,
                ..
            } => num_dms.unwrap_or_else(|| compositions.as_ref().map_or(1, Vec::len)),
        }
    }

    fn alphabet_size(&self) -> Option<usize> {
        match self {
            Self::Lut { alphabet_size, .. }
            | Self::Ccdm { alphabet_size, .. }
            | Self::Ess { alphabet_size, .. } => *alphabet_size,
        }
    }

    /// The matchers of this layer over `costs`; `alphabet` is set on layer 1.
    fn build(&self, layer: usize, costs: Vec<f64>, alphabet: Option<&Alphabet>) -> Result<Vec<SharedDm>> {
        let num = self.num_dms();
        if num == 0 {
            return Err(config(layer, "num_dms must be positive"));
        }
        if let Some(m) = self.alphabet_size() {
            if m != costs.len() {
                return Err(Error::AlphabetMismatch {
                    layer,
                    expected: costs.len(),
                    found: m,
                });
            }
        }
        match self {
            Self::Lut { n, k, .. } => {
                let family = Arc::new(LutFamily::build(costs, *n, *k, num)?);
                Ok(family.luts().into_iter().map(|d| Arc::new(d) as SharedDm).collect())
            }
            Self::Ccdm {
                composition,
                compositions,
                ..
            } => {
                let list = match (composition, compositions) {
                    (Some(c), None) if num == 1 => vec![c.clone()],
                    (None, Some(cs)) if cs.len() == num => cs.clone(),
                    _ => {
                        return Err(config(
                            layer,
                            "give either one \"composition\" or num_dms \"compositions\"",
                        ))
                    }
                };
                list.into_iter()
                    .map(|c| {
                        let dm = CcdmMatcher::new(Composition::new(c)?, costs.clone())?;
                        Ok(Arc::new(dm) as SharedDm)
                    })
                    .collect()
            }
            Self::Ess { n, k, .. } => {
                let alphabet = alphabet.ok_or_else(|| config(layer, "ESS is only supported on layer 1"))?;
                if num != 1 {
                    return Err(config(layer, "ESS matchers of equal size share their support"));
                }
                Ok(vec![Arc::new(ess_build(*n, alphabet, *k)?) as SharedDm])
            }
        }
    }
}

fn config(layer: usize, msg: &str) -> Error {
    Error::Config(format!("layer {layer}: {msg}"))
}

impl StructureConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; I/O failures are returned separately from
    /// validation failures.
    pub fn from_path(path: &Path) -> std::io::Result<Result<Self>> {
        Ok(Self::from_json(&std::fs::read_to_string(path)?))
    }

    pub fn build(&self) -> Result<Structure> {
        match self {
            Self::Hidm { layers } => {
                let first = layers
                    .first()
                    .ok_or_else(|| Error::Config("at least one layer is required".into()))?;
                let m = first
                    .alphabet_size()
                    .ok_or_else(|| config(1, "\"alphabet_size\" is required"))?;
                let alphabet = Alphabet::new(m)?;
                let mut built: Vec<Vec<SharedDm>> = Vec::with_capacity(layers.len());
                for (i, spec) in layers.iter().enumerate() {
                    let dms = match built.last() {
                        None => spec.build(1, alphabet.energies_f64(), Some(&alphabet))?,
                        Some(lower) => {
                            let costs = lower.iter().map(|d| d.mean_cost()).collect();
                            spec.build(i + 1, costs, None)?
                        }
                    };
                    built.push(dms);
                }
                if built.last().is_some_and(|top| top.len() != 1) {
                    return Err(config(layers.len(), "the top layer must hold one matcher"));
                }
                Ok(Structure::Hidm(hidm_build(&alphabet, built)?))
            }
            Self::Ppm { base, positions } => {
                if !matches!(base, LayerSpec::Lut { .. }) {
                    return Err(Error::Config("PPM base must be a LUT family".into()));
                }
                let m = base
                    .alphabet_size()
                    .ok_or_else(|| config(1, "\"alphabet_size\" is required"))?;
                let alphabet = Alphabet::new(m)?;
                let dms = base.build(1, alphabet.energies_f64(), Some(&alphabet))?;
                Ok(Structure::Ppm(ppm_build(dms, positions)?))
            }
        }
    }
}

/// A constructed structure.
#[derive(Debug)]
pub enum Structure {
    Hidm(HiDm),
    Ppm(PpmStructure),
}

impl Structure {
    pub fn as_dm(&self) -> &dyn DistributionMatcher {
        match self {
            Self::Hidm(h) => h,
            Self::Ppm(p) => p,
        }
    }

    pub fn total_bits(&self) -> usize {
        self.as_dm().input_bits()
    }

    pub fn total_len(&self) -> usize {
        self.as_dm().block_len()
    }

    pub fn rate(&self) -> Rate {
        self.as_dm().rate()
    }

    /// Odd amplitude levels for one input word.
    pub fn encode_word(&self, bits: &BitWord) -> Result<Vec<u32>> {
        match self {
            Self::Hidm(h) => h.encode_word(bits),
            Self::Ppm(p) => p.encode_word(bits),
        }
    }

    pub fn decode_levels(&self, levels: &[u32]) -> Result<BitWord> {
        match self {
            Self::Hidm(h) => h.decode_levels(levels),
            Self::Ppm(p) => p.decode_levels(levels),
        }
    }

    pub fn metrics(&self) -> Result<MetricsReport> {
        match self {
            Self::Hidm(h) => h.metrics(),
            Self::Ppm(p) => p.metrics(),
        }
    }

    /// Pairwise disjointness of every layer that holds several matchers.
    pub fn disjointness(&self) -> Result<Vec<(usize, DisjointReport)>> {
        let layers: Vec<&[SharedDm]> = match self {
            Self::Hidm(h) => (0..h.num_layers()).map(|l| h.layer(l)).collect(),
            Self::Ppm(p) => vec![p.base()],
        };
        layers
            .into_iter()
            .enumerate()
            .filter(|(_, dms)| dms.len() > 1)
            .map(|(l, dms)| Ok((l + 1, verify_disjoint(dms)?)))
            .collect()
    }
}

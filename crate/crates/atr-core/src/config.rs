//! Pipeline configuration: TOML key-value file with documented defaults.
//! Unknown keys are rejected, partial files merge with the defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dtw::DtwOptions;
use crate::error::{Error, Result};
use crate::filtering::FilterParams;
use crate::forest::{FeatureSubset, ForestParams};
use crate::wavelet::{WaveletFamily, WaveletSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Maximum number of manipulated objects across the dataset (O).
    pub max_objects: usize,
    pub mirroring: bool,
    pub protocol: ProtocolConfig,
    pub filter: FilterConfig,
    pub wavelet: WaveletConfig,
    pub forest: ForestConfig,
    pub dtw: DtwConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_objects: 0,
            mirroring: false,
            protocol: ProtocolConfig::default(),
            filter: FilterConfig::default(),
            wavelet: WaveletConfig::default(),
            forest: ForestConfig::default(),
            dtw: DtwConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    /// losubo | kfold | loseqo | holdout
    pub kind: String,
    pub folds: usize,
    pub train_fraction: f64,
    pub repeat_count: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self { kind: "losubo".into(), folds: 2, train_fraction: 0.7, repeat_count: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub median_window: usize,
    pub savgol_window: usize,
    pub savgol_order: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let p = FilterParams::default();
        Self {
            median_window: p.median_window,
            savgol_window: p.savgol_window,
            savgol_order: p.savgol_order,
        }
    }
}

impl FilterConfig {
    pub fn params(&self) -> FilterParams {
        FilterParams {
            median_window: self.median_window,
            savgol_window: self.savgol_window,
            savgol_order: self.savgol_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveletConfig {
    /// daubechies | coiflet | symlet
    pub family: String,
    pub order: usize,
    pub levels: usize,
    pub autotune: bool,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self { family: "daubechies".into(), order: 4, levels: 3, autotune: false }
    }
}

impl WaveletConfig {
    pub fn spec(&self) -> Result<WaveletSpec> {
        let family = parse_family(&self.family)?;
        WaveletSpec::new(family, self.order, self.levels)
    }
}

pub fn parse_family(name: &str) -> Result<WaveletFamily> {
    match name.to_ascii_lowercase().as_str() {
        "daubechies" | "db" => Ok(WaveletFamily::Daubechies),
        "coiflet" | "coif" => Ok(WaveletFamily::Coiflet),
        "symlet" | "sym" => Ok(WaveletFamily::Symlet),
        other => Err(Error::ConfigError(format!("unknown wavelet family '{other}'"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// "sqrt" or an explicit integer.
    pub features_per_split: FeaturesPerSplit,
    /// 0 means unlimited.
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeaturesPerSplit {
    Named(String),
    Count(usize),
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            features_per_split: FeaturesPerSplit::Named("sqrt".into()),
            max_depth: 0,
            min_samples_leaf: 1,
        }
    }
}

impl ForestConfig {
    pub fn params(&self, seed: u64) -> Result<ForestParams> {
        let features_per_split = match &self.features_per_split {
            FeaturesPerSplit::Named(s) if s == "sqrt" => FeatureSubset::Sqrt,
            FeaturesPerSplit::Named(s) => {
                return Err(Error::ConfigError(format!(
                    "forest.features_per_split must be \"sqrt\" or an integer, got '{s}'"
                )))
            }
            FeaturesPerSplit::Count(0) => {
                return Err(Error::ConfigError(
                    "forest.features_per_split must be positive".into(),
                ))
            }
            FeaturesPerSplit::Count(c) => FeatureSubset::Count(*c),
        };
        Ok(ForestParams {
            n_trees: self.n_trees,
            features_per_split,
            max_depth: if self.max_depth == 0 { None } else { Some(self.max_depth) },
            min_samples_leaf: self.min_samples_leaf.max(1),
            rng_seed: seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DtwConfig {
    /// Sakoe-Chiba band half-width; 0 disables the band.
    pub band: usize,
}

impl Default for DtwConfig {
    fn default() -> Self {
        Self { band: 0 }
    }
}

impl DtwConfig {
    pub fn options(&self) -> DtwOptions {
        DtwOptions { band: if self.band == 0 { None } else { Some(self.band) } }
    }
}

pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Error::MissingFile(path.display().to_string()))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let config: PipelineConfig =
        toml::from_str(text).map_err(|e| Error::ConfigError(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.wavelet.spec()?;
        self.forest.params(self.seed)?;
        match self.protocol.kind.as_str() {
            "losubo" | "kfold" | "loseqo" | "holdout" => {}
            other => {
                return Err(Error::ConfigError(format!("unknown protocol kind '{other}'")))
            }
        }
        if !(0.0..1.0).contains(&self.protocol.train_fraction) {
            return Err(Error::ConfigError(
                "protocol.train_fraction must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gan::GanConfig;
use crate::gbt::{GbtConfig, TuneSpace};
use crate::ingest::{CleanOptions, REPORT_CLASSES};
use crate::preprocess::{Directive, SplitRatios};

/// Everything a pipeline run needs, read from one TOML file.
///
/// Relative paths resolve against the directory holding the config file.
/// Module seeds are derived from the top-level `seed`; `seed` keys inside
/// the `gbt` and `gan` tables are overwritten.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub clean: CleanSection,
    #[serde(default)]
    pub labels: LabelSection,
    #[serde(default)]
    pub encoder: EncoderSection,
    #[serde(default)]
    pub split: SplitRatios,
    #[serde(default)]
    pub gbt: GbtConfig,
    #[serde(default)]
    pub tune: TuneSection,
    #[serde(default)]
    pub isoforest: IsoSection,
    #[serde(default)]
    pub gan: GanConfig,
    #[serde(default)]
    pub augment: AugmentSection,
    #[serde(default)]
    pub eda: EdaSection,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub dataset: PathBuf,
    /// Column schema; the built-in NSL-KDD schema when absent.
    pub schema: Option<PathBuf>,
    /// Raw-to-report label map; the built-in map when absent.
    pub label_map: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanSection {
    pub sentinels: Vec<String>,
    pub drop_missing: bool,
}

impl Default for CleanSection {
    fn default() -> Self {
        let d = CleanOptions::default();
        CleanSection {
            sentinels: d.sentinels.into_iter().collect(),
            drop_missing: d.drop_missing,
        }
    }
}

impl CleanSection {
    pub fn options(&self) -> CleanOptions {
        CleanOptions {
            sentinels: self.sentinels.iter().cloned().collect(),
            drop_missing: self.drop_missing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelSection {
    /// Report classes retained after mapping.
    pub keep: Vec<String>,
}

impl Default for LabelSection {
    fn default() -> Self {
        LabelSection {
            keep: REPORT_CLASSES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    /// Categorical columns to one-hot encode; the rest are ordinal.
    pub onehot: Vec<String>,
    pub overrides: BTreeMap<String, Directive>,
}

impl Default for EncoderSection {
    fn default() -> Self {
        EncoderSection {
            onehot: vec!["protocol_type".into()],
            overrides: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    /// Random-search trials; 0 trains the `gbt` table as given.
    pub budget: usize,
    pub space: TuneSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsoSection {
    pub trees: usize,
    /// Capped at the number of training rows.
    pub psi: usize,
}

impl Default for IsoSection {
    fn default() -> Self {
        IsoSection { trees: 100, psi: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    /// Class left out of the default targets.
    pub majority: String,
    /// Explicit per-class row targets; empty selects the default targets.
    pub targets: BTreeMap<String, usize>,
}

impl Default for AugmentSection {
    fn default() -> Self {
        AugmentSection {
            majority: "normal".into(),
            targets: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdaSection {
    /// Features to summarise; empty selects the ten most important features
    /// of the baseline model, or every feature when no model exists.
    pub features: Vec<String>,
    /// Classes to summarise; empty selects all.
    pub classes: Vec<String>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.gbt.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.gan.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.isoforest.trees == 0 || self.isoforest.psi < 2 {
            return Err(Error::Config("isoforest needs trees >= 1 and psi >= 2".into()));
        }
        if self.labels.keep.is_empty() {
            return Err(Error::Config("labels.keep is empty".into()));
        }
        Ok(())
    }

    /// Rewrites relative paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.dataset);
        fix(&mut self.paths.out);
        if let Some(p) = self.paths.schema.as_mut() {
            fix(p);
        }
        if let Some(p) = self.paths.label_map.as_mut() {
            fix(p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = PipelineConfig::from_toml("[paths]\ndataset = \"d.txt\"\n").unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.gbt, GbtConfig::default());
        assert_eq!(cfg.split, SplitRatios::default());
        assert_eq!(cfg.paths.out, PathBuf::from("out"));
    }

    #[test]
    fn unknown_key_rejected() {
        let err = PipelineConfig::from_toml("[paths]\ndataset = \"d\"\n[gbt]\nrounds = 3\n");
        assert!(err.is_err());
        let err = PipelineConfig::from_toml("bogus = 1\n[paths]\ndataset = \"d\"\n");
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn bad_split_rejected() {
        let text = "[paths]\ndataset = \"d\"\n[split]\ntrain = 0.5\nval = 0.2\ntest = 0.2\n";
        assert!(matches!(PipelineConfig::from_toml(text), Err(Error::Config(_))));
    }

    #[test]
    fn relative_paths_resolve() {
        let mut cfg = PipelineConfig::from_toml("[paths]\ndataset = \"d.txt\"\nout = \"/abs\"\n").unwrap();
        cfg.resolve_paths(Path::new("/cfg"));
        assert_eq!(cfg.paths.dataset, PathBuf::from("/cfg/d.txt"));
        assert_eq!(cfg.paths.out, PathBuf::from("/abs"));
    }
}

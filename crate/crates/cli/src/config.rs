//! Run configuration file. Every key has a default, and command-line flags
//! override whatever the file says.
//!
//! ```toml
//! top_n = 10
//!
//! [io]
//! media_dir = "media"
//!
//! [tier_map]
//! include_patterns = ["*"]
//! role_map = [{ pattern = "%eng", role = "translation" }]
//!
//! [qc]
//! seed = 1
//!
//! [mining]
//! similarity_threshold = 0.2
//!
//! [compare]
//! bin_width_ms = 100
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use turnkit::compare::CompareConfig;
use turnkit::mining::MiningConfig;
use turnkit::qc::QcConfig;
use turnkit::text::TagPolicy;
use turnkit::unify::TierMapConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub media_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Length of the continuer and repair-initiator lists.
    pub top_n: usize,
    pub io: IoConfig,
    pub tier_map: TierMapConfig,
    pub tag_policy: TagPolicy,
    pub qc: QcConfig,
    pub mining: MiningConfig,
    pub compare: CompareConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            top_n: 10,
            io: IoConfig::default(),
            tier_map: TierMapConfig::default(),
            tag_policy: TagPolicy::default(),
            qc: QcConfig::default(),
            mining: MiningConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
    }

    pub fn validate(&self) -> Result<()> {
        self.tier_map.validate()?;
        self.tag_policy.validate()?;
        self.qc.validate()?;
        self.mining.validate()?;
        self.compare.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }
}

/// A tier map file holds a bare `[tier_map]` table's contents.
pub fn load_tier_map(path: &Path) -> Result<TierMapConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading tier map {}", path.display()))?;
    let cfg: TierMapConfig = toml::from_str(&text).with_context(|| format!("parsing tier map {}", path.display()))?;
    cfg.validate()?;
    Ok(cfg)
}

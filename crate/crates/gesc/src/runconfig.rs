//! Run configuration files: the flat model/training object plus an
//! optional dataset source. Command-line flags override file values, which
//! override defaults.

use std::path::{Path, PathBuf};

use gesc_core::graph::{generate_synthetic, make_splits};
use gesc_core::{Dataset, GescConfig, SyntheticSpec};
use serde::{Deserialize, Serialize};

use crate::bundle::{load_bundle, read_json, write_json};
use crate::citation::load_content_cites;
use crate::error::IoResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Bundle { path: PathBuf },
    Citation { content: PathBuf, cites: PathBuf },
    Synthetic(SyntheticSpec),
}

impl Default for DatasetSource {
    fn default() -> Self {
        Self::Synthetic(SyntheticSpec::default())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub gesc: GescConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSource>,
}

impl RunConfig {
    pub fn load(path: &Path) -> IoResult<Self> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> IoResult<()> {
        write_json(path, self)
    }
}

/// A loaded dataset and any loader warnings.
pub struct Loaded {
    pub data: Dataset,
    pub warnings: Vec<String>,
}

/// Loads a source. Datasets without stored splits get
/// `per_class_train`-per-class splits drawn from `seed`.
pub fn load_dataset(source: &DatasetSource, per_class_train: usize, seed: u64) -> IoResult<Loaded> {
    let (data, warnings) = match source {
        DatasetSource::Bundle { path } => (load_bundle(path)?, Vec::new()),
        DatasetSource::Citation { content, cites } => {
            let (data, report) = load_content_cites(content, cites)?;
            (data, report.warnings())
        }
        DatasetSource::Synthetic(spec) => (generate_synthetic(spec)?, Vec::new()),
    };
    let data = if data.has_splits() { data } else { make_splits(&data, per_class_train, seed)? };
    Ok(Loaded { data, warnings })
}

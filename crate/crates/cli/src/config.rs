use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use efo1::grounder::SamplingConfig;
use efo1::metrics::MetricOptions;
use efo1::rewrite::FormKind;
use efo1::typegen::GenerationConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything a run depends on. Read from a TOML file, then patched by
/// command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub kg_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// One of off, error, warn, info, debug, trace.
    pub log_level: Option<String>,
    pub graph: GraphFiles,
    pub generation: GenerationConfig,
    pub sampling: SamplingConfig,
    pub forms: FormSelection,
    pub metrics: MetricOptions,
}

/// Triple files inside the graph directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphFiles {
    pub train: Vec<String>,
    pub full: Vec<String>,
}

impl Default for GraphFiles {
    fn default() -> Self {
        GraphFiles {
            train: vec!["train.txt".into()],
            full: vec!["train.txt".into(), "valid.txt".into(), "test.txt".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormSelection {
    pub kinds: Vec<FormKind>,
}

impl Default for FormSelection {
    fn default() -> Self {
        FormSelection {
            kinds: FormKind::ALL.to_vec(),
        }
    }
}

/// The part of the configuration that determines generated data. Paths
/// and verbosity are left out so that moving a run does not change it.
#[derive(Serialize)]
struct Provenance<'a> {
    generation: &'a GenerationConfig,
    sampling: &'a SamplingConfig,
    forms: &'a FormSelection,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// The provenance sections as TOML, written next to generated data.
    pub fn provenance_toml(&self) -> String {
        toml::to_string(&Provenance {
            generation: &self.generation,
            sampling: &self.sampling,
            forms: &self.forms,
        })
        .expect("config serializes")
    }

    pub fn provenance_sha256(&self) -> String {
        hex::encode(Sha256::digest(self.provenance_toml().as_bytes()))
    }

    pub fn log_filter(&self) -> Result<log::LevelFilter> {
        match &self.log_level {
            None => Ok(log::LevelFilter::Info),
            Some(s) => s.parse().map_err(|_| anyhow::anyhow!("unknown log level `{s}`")),
        }
    }

    pub fn kg_dir(&self) -> Result<&Path> {
        match &self.kg_dir {
            Some(p) => Ok(p),
            None => bail!("no graph directory; pass --kg-dir or set kg_dir in the config file"),
        }
    }

    pub fn out_dir(&self) -> Result<&Path> {
        match &self.out_dir {
            Some(p) => Ok(p),
            None => bail!("no output directory; pass --out-dir or set out_dir in the config file"),
        }
    }
}

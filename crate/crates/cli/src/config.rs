use std::path::Path;

use affinity_core::trace::SyntheticTraceConfig;
use serde::Deserialize;

use crate::Failure;

/// Optional TOML defaults. Every key may be omitted.
///
/// ```toml
/// seed = 7
/// threads = 4
/// strict = false
/// interval_micros = 300000000
/// runs = 10
/// model = "ensemble"
///
/// [gen]
/// n_nodes = 200
/// n_jobs = 300
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub strict: Option<bool>,
    pub interval_micros: Option<u64>,
    pub runs: Option<usize>,
    pub model: Option<String>,
    pub gen: Option<SyntheticTraceConfig>,
}

/// Global options after flags have been laid over the config file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub threads: usize,
    pub strict: bool,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage("InvalidConfig", format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| {
            let msg = e.to_string();
            Failure::usage("InvalidConfig", format!("{}: {}", path.display(), msg.trim()))
        })
    }

    pub fn settings(&self, seed: Option<u64>, threads: Option<usize>, strict: bool) -> Settings {
        Settings {
            seed: seed.or(self.seed).unwrap_or(0),
            threads: threads.or(self.threads).unwrap_or(0),
            strict: strict || self.strict.unwrap_or(false),
        }
    }
}

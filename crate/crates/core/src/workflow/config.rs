use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{ClusteringMethod, ClusteringParams};
use crate::preprocess::{MsLevel, PreprocParams};
use crate::similarity::{SimilarityFunctionId, SimilarityParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("the configured grid has no setups")]
    EmptyGrid,
}

/// Numeric parameters of every pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub pad_width: usize,
    pub sigma_pp: f64,
    pub sigma_ms: f64,
    pub otsu_bins: usize,
    pub window: usize,
    pub regularization: f64,
    pub bins: usize,
    pub hierarchical_c: f64,
    pub ap_convergence: usize,
    pub ap_max_iter: usize,
    pub ap_damping: f64,
}

impl Default for Params {
    fn default() -> Self {
        let p = PreprocParams::default();
        let s = SimilarityParams::default();
        let c = ClusteringParams::default();
        Self {
            pad_width: p.pad_width,
            sigma_pp: p.sigma_pp,
            sigma_ms: p.sigma_ms,
            otsu_bins: p.otsu_bins,
            window: s.window,
            regularization: s.regularization,
            bins: s.bins,
            hierarchical_c: c.hierarchical_c,
            ap_convergence: c.ap_convergence,
            ap_max_iter: c.ap_max_iter,
            ap_damping: c.ap_damping,
        }
    }
}

impl Params {
    pub fn preproc(&self) -> PreprocParams {
        PreprocParams {
            pad_width: self.pad_width,
            sigma_pp: self.sigma_pp,
            sigma_ms: self.sigma_ms,
            otsu_bins: self.otsu_bins,
        }
    }

    pub fn similarity(&self) -> SimilarityParams {
        SimilarityParams {
            window: self.window,
            regularization: self.regularization,
            bins: self.bins,
        }
    }

    pub fn clustering(&self) -> ClusteringParams {
        ClusteringParams {
            hierarchical_c: self.hierarchical_c,
            ap_convergence: self.ap_convergence,
            ap_max_iter: self.ap_max_iter,
            ap_damping: self.ap_damping,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if !(self.sigma_pp > 0.0 && self.sigma_pp.is_finite()) || !(self.sigma_ms > 0.0 && self.sigma_ms.is_finite()) {
            return bad("sigmas must be positive");
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return bad("window must be odd");
        }
        if self.bins == 0 || self.bins > u16::MAX as usize || self.otsu_bins < 2 {
            return bad("bins must be in 1..=65535 and otsu_bins at least 2");
        }
        if !(self.ap_damping >= 0.5 && self.ap_damping < 1.0) {
            return bad("ap_damping must be in [0.5, 1)");
        }
        if self.ap_convergence == 0 || self.ap_max_iter == 0 {
            return bad("affinity propagation iteration counts must be positive");
        }
        if !(self.regularization >= 0.0) || !self.hierarchical_c.is_finite() {
            return bad("regularization and hierarchical_c must be finite and non-negative");
        }
        Ok(())
    }
}

fn all_functions() -> Vec<SimilarityFunctionId> {
    SimilarityFunctionId::ALL.to_vec()
}

fn all_pp() -> Vec<bool> {
    vec![false, true]
}

fn all_ms() -> Vec<u8> {
    vec![0, 1, 2]
}

fn all_clusterings() -> Vec<ClusteringMethod> {
    ClusteringMethod::ALL.to_vec()
}

fn yes() -> bool {
    true
}

/// Run configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowConfig {
    /// Stack container (`.sorc`) or per-pixel CSV table.
    pub input: PathBuf,
    pub output: PathBuf,
    /// Dataset name shown in reports; defaults to the input file stem.
    #[serde(default)]
    pub dataset: Option<String>,
    #[serde(default = "all_functions")]
    pub functions: Vec<SimilarityFunctionId>,
    #[serde(default = "all_pp")]
    pub pp: Vec<bool>,
    #[serde(default = "all_ms")]
    pub ms: Vec<u8>,
    #[serde(default = "all_clusterings")]
    pub clusterings: Vec<ClusteringMethod>,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "yes")]
    pub cache: bool,
    /// Rows per bar-chart table; all rows when absent.
    #[serde(default)]
    pub top_n: Option<usize>,
    #[serde(default)]
    pub params: Params,
}

impl WorkflowConfig {
    /// Default grid over `input`, writing into `output`.
    pub fn new(input: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            output: output.into(),
            dataset: None,
            functions: all_functions(),
            pp: all_pp(),
            ms: all_ms(),
            clusterings: all_clusterings(),
            threads: 0,
            cache: true,
            top_n: None,
            params: Params::default(),
        }
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.input.is_relative() {
            cfg.input = base.join(&cfg.input);
        }
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn ms_levels(&self) -> Result<Vec<MsLevel>, ConfigError> {
        self.ms
            .iter()
            .map(|&k| MsLevel::from_index(k).ok_or_else(|| ConfigError::Invalid(format!("ms level {k} not in 0..=2"))))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.ms_levels()?;
        self.params.validate()?;
        if self.top_n == Some(0) {
            return Err(ConfigError::Invalid("top_n must be positive".into()));
        }
        Ok(())
    }

    pub fn dataset_name(&self) -> String {
        self.dataset.clone().unwrap_or_else(|| {
            self.input
                .file_stem()
                .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = WorkflowConfig::parse("input = \"a.sorc\"\noutput = \"out\"\n", Path::new("/tmp/x/run.toml")).unwrap();
        assert_eq!(cfg.input, PathBuf::from("/tmp/x/a.sorc"));
        assert_eq!(cfg.output, PathBuf::from("/tmp/x/out"));
        assert_eq!(cfg.functions.len(), 13);
        assert_eq!(cfg.params, Params::default());
        assert_eq!(cfg.dataset_name(), "a");
        assert!(cfg.cache);
    }

    #[test]
    fn overrides_and_errors() {
        let text = "input = \"/d/a.csv\"\noutput = \"o\"\nfunctions = [\"cosine\"]\nms = [0]\n[params]\nsigma_ms = 2.0\n";
        let cfg = WorkflowConfig::parse(text, Path::new("c.toml")).unwrap();
        assert_eq!(cfg.functions, vec![SimilarityFunctionId::Cosine]);
        assert_eq!(cfg.params.sigma_ms, 2.0);
        assert_eq!(cfg.params.window, 13);
        assert!(matches!(
            WorkflowConfig::parse("input = \"a\"\noutput = \"o\"\nms = [3]\n", Path::new("c.toml")),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            WorkflowConfig::parse("input = \"a\"\noutput = \"o\"\nbogus = 1\n", Path::new("c.toml")),
            Err(ConfigError::Parse { .. })
        ));
        assert!(matches!(
            WorkflowConfig::parse("input = \"a\"\noutput = \"o\"\n[params]\nwindow = 12\n", Path::new("c.toml")),
            Err(ConfigError::Invalid(_))
        ));
    }
}

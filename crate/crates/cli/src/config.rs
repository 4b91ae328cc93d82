//! Pipeline configuration (TOML).
//!
//! Only `SPELLMAP_OUT_DIR` and `SPELLMAP_SEED` may override the file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spellmap::dataset::{Bins, CodingSpec, QUALITATIVE_VARIABLES};
use spellmap::som::{Decay, GridTopology, InitStrategy, TrainingMode, TrainingSchedule, WinnerRule};
use std::path::{Path, PathBuf};

pub const ENV_OUT_DIR: &str = "SPELLMAP_OUT_DIR";
pub const ENV_SEED: &str = "SPELLMAP_SEED";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    /// Dotted field path, or the file / variable concerned.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default)]
    pub input: Option<InputConfig>,
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default)]
    pub coding: CodingConfig,
    #[serde(default)]
    pub som: SomConfig,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub transitions: TransitionsConfig,
    #[serde(default)]
    pub mca: McaConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// Delimited spell file; relative paths are taken from the config file's directory.
    pub path: PathBuf,
    #[serde(default = "defaults::delimiter")]
    pub delimiter: String,
    /// Optional `FIELD = header` mapping file.
    #[serde(default)]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    #[serde(default = "defaults::n_records")]
    pub n_records: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodingConfig {
    /// Replacement bins for individual derived variables.
    #[serde(default)]
    pub bins: Vec<Bins>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SomConfig {
    pub rows: usize,
    pub cols: usize,
    pub init: InitStrategy,
    pub mode: TrainingMode,
    pub epochs: usize,
    pub radius_start: f64,
    pub radius_end: f64,
    pub learning_rate_start: f64,
    pub learning_rate_end: f64,
    pub decay: Decay,
    pub plateau: usize,
    pub winner: WinnerRule,
}

impl Default for SomConfig {
    fn default() -> Self {
        let s = TrainingSchedule::default();
        let t = GridTopology::default();
        Self {
            rows: t.rows,
            cols: t.cols,
            init: InitStrategy::PcaPlane,
            mode: s.mode,
            epochs: s.epochs,
            radius_start: s.radius_start,
            radius_end: s.radius_end,
            learning_rate_start: s.learning_rate_start,
            learning_rate_end: s.learning_rate_end,
            decay: s.decay,
            plateau: s.plateau,
            winner: s.winner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub k: usize,
    /// Weight code vectors by unit occupancy.
    pub weighted: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { k: 5, weighted: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransitionsConfig {
    /// Significance thresholds, percent of all transitions.
    pub registration_to_exit_threshold: f64,
    pub exit_to_registration_threshold: f64,
}

impl Default for TransitionsConfig {
    fn default() -> Self {
        Self {
            registration_to_exit_threshold: 8.0,
            exit_to_registration_threshold: 4.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McaConfig {
    pub variables: Vec<String>,
    pub axes: usize,
    /// Axis pairs (1-based) to export and plot.
    pub planes: Vec<[usize; 2]>,
}

impl Default for McaConfig {
    fn default() -> Self {
        Self {
            variables: QUALITATIVE_VARIABLES.iter().map(|s| s.to_string()).collect(),
            axes: 3,
            planes: vec![[1, 2], [1, 3]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// `csv` is always produced; `svg` adds the figures to `all`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec!["csv".into(), "svg".into()],
        }
    }
}

mod defaults {
    pub fn seed() -> u64 {
        1
    }
    pub fn delimiter() -> String {
        ",".into()
    }
    pub fn n_records() -> usize {
        19246
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: defaults::seed(),
            input: None,
            synthetic: Some(SyntheticConfig {
                n_records: defaults::n_records(),
            }),
            coding: CodingConfig::default(),
            som: SomConfig::default(),
            cluster: ClusterConfig::default(),
            transitions: TransitionsConfig::default(),
            mca: McaConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let path = match e.span() {
                Some(span) => format!("config (line {})", text[..span.start].lines().count().max(1)),
                None => "config".to_string(),
            };
            ConfigError::new(path, message)
        })
    }

    /// Reads, applies environment overrides, resolves relative input paths against the
    /// file's directory and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(path.display().to_string(), e.to_string()))?;
        let mut config = Self::from_toml(&text)?;
        config.apply_env(|k| std::env::var(k).ok())?;
        if let (Some(input), Some(base)) = (config.input.as_mut(), path.parent()) {
            if input.path.is_relative() {
                input.path = base.join(&input.path);
            }
            if let Some(schema) = input.schema.as_mut().filter(|s| s.is_relative()) {
                *schema = base.join(&*schema);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(dir) = get(ENV_OUT_DIR).filter(|d| !d.is_empty()) {
            self.output.dir = PathBuf::from(dir);
        }
        if let Some(seed) = get(ENV_SEED).filter(|s| !s.is_empty()) {
            self.seed = seed
                .trim()
                .parse()
                .map_err(|_| ConfigError::new(ENV_SEED, format!("'{seed}' is not an unsigned 64-bit integer")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |p: &str, m: &str| Err(ConfigError::new(p, m));
        match (&self.input, &self.synthetic) {
            (Some(_), Some(_)) => return err("input", "set either [input] or [synthetic], not both"),
            (None, None) => return err("input", "one of [input] or [synthetic] is required"),
            _ => {}
        }
        if let Some(input) = &self.input {
            if input.delimiter.len() != 1 {
                return err("input.delimiter", "must be a single ASCII character");
            }
        }
        if let Some(s) = &self.synthetic {
            if s.n_records == 0 {
                return err("synthetic.n_records", "must be positive");
            }
        }
        self.coding_spec()?;
        for (i, b) in self.coding.bins.iter().enumerate() {
            if b.modalities().iter().any(|l| l.is_empty() || l.contains([',', '"', '\n', '\r'])) {
                return err(&format!("coding.bins[{i}].labels"), "labels must be non-empty and free of commas, quotes and newlines");
            }
        }
        let som = &self.som;
        if som.rows == 0 {
            return err("som.rows", "must be positive");
        }
        if som.cols == 0 {
            return err("som.cols", "must be positive");
        }
        self.schedule()
            .validate()
            .map_err(|e| ConfigError::new("som", e.to_string()))?;
        let units = som.rows * som.cols;
        if self.cluster.k == 0 || self.cluster.k > units {
            return err("cluster.k", &format!("must lie in 1..={units}"));
        }
        for (name, t) in [
            ("transitions.registration_to_exit_threshold", self.transitions.registration_to_exit_threshold),
            ("transitions.exit_to_registration_threshold", self.transitions.exit_to_registration_threshold),
        ] {
            if !(0.0..=100.0).contains(&t) {
                return err(name, "must be a percentage in [0, 100]");
            }
        }
        if self.mca.variables.is_empty() {
            return err("mca.variables", "must not be empty");
        }
        for (i, v) in self.mca.variables.iter().enumerate() {
            if !QUALITATIVE_VARIABLES.contains(&v.as_str()) {
                return err(&format!("mca.variables[{i}]"), &format!("unknown variable '{v}'"));
            }
            if self.mca.variables[..i].contains(v) {
                return err(&format!("mca.variables[{i}]"), &format!("'{v}' listed twice"));
            }
        }
        if self.mca.axes < 2 {
            return err("mca.axes", "must be at least 2");
        }
        for (i, [a, b]) in self.mca.planes.iter().enumerate() {
            if *a == 0 || *b == 0 || *a > self.mca.axes || *b > self.mca.axes || a == b {
                return err(&format!("mca.planes[{i}]"), &format!("axes must be distinct and in 1..={}", self.mca.axes));
            }
        }
        for (i, f) in self.output.formats.iter().enumerate() {
            if f != "csv" && f != "svg" {
                return err(&format!("output.formats[{i}]"), &format!("unknown format '{f}' (csv, svg)"));
            }
        }
        if !self.output.formats.iter().any(|f| f == "csv") {
            return err("output.formats", "csv is required");
        }
        Ok(())
    }

    pub fn coding_spec(&self) -> Result<CodingSpec, ConfigError> {
        let mut spec = CodingSpec::default();
        for b in &self.coding.bins {
            spec = spec.with_bins(b.clone());
        }
        spec.validate()
            .map_err(|e| ConfigError::new("coding.bins", e.to_string()))?;
        Ok(spec)
    }

    pub fn topology(&self) -> GridTopology {
        GridTopology {
            rows: self.som.rows,
            cols: self.som.cols,
        }
    }

    /// Training schedule with the stage seed already derived.
    pub fn schedule(&self) -> TrainingSchedule {
        let s = &self.som;
        TrainingSchedule {
            mode: s.mode,
            epochs: s.epochs,
            radius_start: s.radius_start,
            radius_end: s.radius_end,
            learning_rate_start: s.learning_rate_start,
            learning_rate_end: s.learning_rate_end,
            decay: s.decay,
            plateau: s.plateau,
            winner: s.winner,
            seed: derive_seed(self.seed, "train"),
        }
    }

    pub fn svg_enabled(&self) -> bool {
        self.output.formats.iter().any(|f| f == "svg")
    }

    /// SHA-256 of the canonical JSON form, with the output directory left out so that
    /// the same run written to two places has the same hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Per-stage seed: the first eight bytes (little endian) of SHA-256("spellmap:<label>:<seed>").
pub fn derive_seed(global: u64, label: &str) -> u64 {
    let digest = Sha256::digest(format!("spellmap:{label}:{global}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

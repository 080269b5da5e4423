//! The run configuration: one TOML file describing the input, the split, the
//! Katz parameters and which models to evaluate.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spatial_katz::geo::DEFAULT_DENSE_MAX_NODES;
use spatial_katz::graph::{AdjacencyMode, ColumnSchema, IngestOptions, RowErrorPolicy, SplitSpec, YearRange};
use spatial_katz::katz::{CombineRule, KatzConfig};
use spatial_katz::synth::SynthConfig;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Model {
    KI,
    WKI,
    EWKI,
    KIWKI,
    KIEWKI,
    WKIEWKI,
}

impl Model {
    pub const ALL: [Model; 6] = [Model::KI, Model::WKI, Model::EWKI, Model::KIWKI, Model::KIEWKI, Model::WKIEWKI];

    pub fn name(self) -> &'static str {
        match self {
            Model::KI => "KI",
            Model::WKI => "WKI",
            Model::EWKI => "EWKI",
            Model::KIWKI => "KIWKI",
            Model::KIEWKI => "KIEWKI",
            Model::WKIEWKI => "WKIEWKI",
        }
    }

    /// The two base models a combined model is built from.
    pub fn parts(self) -> Option<(Model, Model)> {
        match self {
            Model::KIWKI => Some((Model::KI, Model::WKI)),
            Model::KIEWKI => Some((Model::KI, Model::EWKI)),
            Model::WKIEWKI => Some((Model::WKI, Model::EWKI)),
            _ => None,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which network the test-split scores are computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ScoreBasis {
    #[default]
    #[serde(rename = "train")]
    Train,
    #[serde(rename = "train+val")]
    TrainVal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitName {
    #[default]
    Val,
    Test,
}

/// Grid search of the EWKI decay rate on the validation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaTuning {
    pub enabled: bool,
    /// Candidate decay rates per km; defaults to 10^(-4 + k/4), k = 0..=12.
    pub grid: Vec<f64>,
}

impl Default for GammaTuning {
    fn default() -> Self {
        GammaTuning {
            enabled: true,
            grid: (0..=12).map(|k| 10f64.powf(-4.0 + f64::from(k) / 4.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportOptions {
    /// Write per-pair score tables for the evaluated split.
    pub scores: bool,
    /// Write ROC and PR curve points.
    pub curves: bool,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions { scores: true, curves: true }
    }
}

/// Settings for the `eval` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// Score table written by `run` or `score`.
    pub scores: PathBuf,
    /// Split whose links label the table.
    #[serde(default = "default_eval_split")]
    pub split: SplitName,
    /// Fixed threshold on normalized scores; tuned on the table itself when absent.
    #[serde(default)]
    pub threshold: Option<f64>,
}

fn default_eval_split() -> SplitName {
    SplitName::Test
}

fn default_delimiter() -> char {
    ','
}

fn default_years() -> YearRange {
    YearRange::new(1900, 2100)
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_models() -> Vec<Model> {
    Model::ALL.to_vec()
}

fn default_dense_max() -> usize {
    DEFAULT_DENSE_MAX_NODES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Movement file; relative paths resolve against the config file.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Generate the movements instead of reading them.
    #[serde(default)]
    pub synth: Option<SynthConfig>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub on_error: RowErrorPolicy,
    #[serde(default = "default_years")]
    pub valid_years: YearRange,
    #[serde(default)]
    pub schema: ColumnSchema,
    #[serde(default)]
    pub split: Option<SplitSpec>,
    #[serde(default)]
    pub adjacency: AdjacencyMode,
    #[serde(default)]
    pub katz: KatzConfig,
    #[serde(default)]
    pub gamma_tuning: GammaTuning,
    #[serde(default)]
    pub score_basis: ScoreBasis,
    #[serde(default)]
    pub combination: CombineRule,
    #[serde(default)]
    pub tune_on: SplitName,
    #[serde(default = "default_models")]
    pub models: Vec<Model>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses one per core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_dense_max")]
    pub distance_dense_max_nodes: usize,
    #[serde(default)]
    pub export: ExportOptions,
    #[serde(default)]
    pub eval: Option<EvalSection>,
}

/// A parsed config together with the exact text it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub text: String,
}

impl LoadedConfig {
    /// Reads and parses `path`, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|source| CliError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(LoadedConfig { config, text })
    }

    pub fn from_text(text: &str, base: &Path) -> Result<Self> {
        let mut config: RunConfig = toml::from_str(text).map_err(|source| CliError::Toml {
            path: PathBuf::from("<inline>"),
            source,
        })?;
        config.resolve_paths(base);
        Ok(LoadedConfig { config, text: text.to_owned() })
    }
}

impl RunConfig {
    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.input.as_mut() {
            join(p);
        }
        if let Some(e) = self.eval.as_mut() {
            join(&mut e.scores);
        }
        join(&mut self.output_dir);
    }

    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            delimiter: self.delimiter as u8,
            on_error: self.on_error,
            years: (self.valid_years.start, self.valid_years.end),
        }
    }

    pub fn split_spec(&self) -> Result<SplitSpec> {
        self.split
            .ok_or_else(|| CliError::Config("a [split] section is required".into()))
    }

    /// Checks everything that can be checked without reading data.
    pub fn validate(&self) -> Result<()> {
        match (&self.input, &self.synth) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("give either `input` or a [synth] block, not both".into()))
            }
            (None, None) => return Err(CliError::Config("one of `input` or [synth] is required".into())),
            (Some(p), None) if !p.is_file() => {
                return Err(CliError::Config(format!("input file {} does not exist", p.display())))
            }
            (None, Some(s)) => s.validate()?,
            _ => {}
        }
        if !self.delimiter.is_ascii() {
            return Err(CliError::Config(format!("delimiter {:?} is not ASCII", self.delimiter)));
        }
        if self.valid_years.start > self.valid_years.end {
            return Err(CliError::Config("valid_years is reversed".into()));
        }
        self.split_spec()?.validate()?;
        if self.models.is_empty() {
            return Err(CliError::Config("model list is empty".into()));
        }
        let distinct: BTreeSet<_> = self.models.iter().collect();
        if distinct.len() != self.models.len() {
            return Err(CliError::Config("model list has duplicates".into()));
        }
        if !(self.katz.gamma >= 0.0 && self.katz.gamma.is_finite()) {
            return Err(CliError::Config(format!("gamma {} must be finite and non-negative", self.katz.gamma)));
        }
        if self.gamma_tuning.enabled {
            if self.gamma_tuning.grid.is_empty() {
                return Err(CliError::Config("gamma_tuning.grid is empty".into()));
            }
            if let Some(g) = self.gamma_tuning.grid.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
                return Err(CliError::Config(format!("gamma grid value {g} must be finite and non-negative")));
            }
        }
        if let Some(t) = self.eval.as_ref().and_then(|e| e.threshold) {
            if !t.is_finite() {
                return Err(CliError::Config("eval.threshold must be finite".into()));
            }
        }
        Ok(())
    }

    /// The base models whose score tables the requested models need.
    pub fn required_bases(&self) -> BTreeSet<Model> {
        let mut out = BTreeSet::new();
        for &m in &self.models {
            match m.parts() {
                Some((a, b)) => {
                    out.insert(a);
                    out.insert(b);
                }
                None => {
                    out.insert(m);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
input = "data.csv"
models = ["KI", "KIEWKI"]
score_basis = "train+val"

[split]
train = [2010, 2021]
val = [2022, 2022]
test = [2023, 2023]

[katz]
max_walk_length = 4
beta_mode = { kind = "explicit", beta = 0.05 }
"#;

    #[test]
    fn parses_minimal_config() {
        let c = LoadedConfig::from_text(MINIMAL, Path::new("/data")).unwrap().config;
        assert_eq!(c.input.as_deref(), Some(Path::new("/data/data.csv")));
        assert_eq!(c.output_dir, Path::new("/data/out"));
        assert_eq!(c.models, [Model::KI, Model::KIEWKI]);
        assert_eq!(c.score_basis, ScoreBasis::TrainVal);
        assert_eq!(c.tune_on, SplitName::Val);
        assert_eq!(c.katz.max_walk_length, 4);
        assert_eq!(c.gamma_tuning.grid.len(), 13);
        assert!((c.gamma_tuning.grid[12] - 0.1).abs() < 1e-15);
        let bases: Vec<_> = c.required_bases().into_iter().collect();
        assert_eq!(bases, [Model::KI, Model::EWKI]);
    }

    #[test]
    fn rejects_unknown_keys_and_models() {
        let bad = MINIMAL.replace("score_basis", "scoring_basis");
        assert!(LoadedConfig::from_text(&bad, Path::new(".")).is_err());
        let bad = MINIMAL.replace("\"KIEWKI\"", "\"KIKI\"");
        assert!(LoadedConfig::from_text(&bad, Path::new(".")).is_err());
    }

    #[test]
    fn overlapping_split_is_a_config_error() {
        let text = MINIMAL.replace("input = \"data.csv\"", "").replace("val = [2022, 2022]", "val = [2021, 2022]")
            + "\n[synth]\nn_nodes = 10\n";
        let c = LoadedConfig::from_text(&text, Path::new(".")).unwrap().config;
        let err = c.validate().unwrap_err();
        assert_eq!(err.exit_code(), 1, "{err}");
    }
}

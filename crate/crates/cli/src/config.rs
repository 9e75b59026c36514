//! Config-file loading. Files mirror the command-line flags; flags given on
//! the command line win over file values.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use stabgnn::circuit::Family;
use stabgnn::dataset::GenConfig;
use stabgnn::harness::{SplitSpec, Task, TrainConfig};
use stabgnn::nn::ModelConfig;
use stabgnn::{Error, Result};

/// Parse a TOML or JSON file, chosen by extension.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = std::fs::read_to_string(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "toml" => toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
        "json" => serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display()))),
        _ => Err(Error::Config(format!("{}: config files must end in .toml or .json", path.display()))),
    }
}

pub fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing `{what}` (give it as a flag or in the config file)")))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSettings {
    pub family: Option<Family>,
    pub out: Option<PathBuf>,
    /// Replace stabilizer labels by median-M₂ classes (drops stabilizer records).
    pub threshold: bool,
    #[serde(flatten)]
    pub config: GenConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodeSettings {
    /// Defaults to the largest qubit count in the dataset.
    pub d_q: Option<usize>,
    pub calibration: Option<PathBuf>,
    pub angle_onehot: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodeCommand {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    #[serde(flatten)]
    pub encode: EncodeSettings,
}

/// Shared by `train`, `repeat` and `ablate`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub dataset: Option<PathBuf>,
    /// Optional graph cache written by `encode`, index-aligned with `dataset`.
    pub graphs: Option<PathBuf>,
    pub task: Option<Task>,
    pub out: Option<PathBuf>,
    pub runs: Option<usize>,
    pub split: SplitSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub encode: EncodeSettings,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    pub checkpoint: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub task: Option<Task>,
    pub out: Option<PathBuf>,
    pub encode: EncodeSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    #[default]
    CliffordDepth,
    M2Bins,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveSettings {
    pub kind: CurveKind,
    pub checkpoint: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub task: Option<Task>,
    pub out: Option<PathBuf>,
    pub bins: usize,
    /// Defaults to [0, 0.24] in density mode and [0, max M₂] otherwise.
    pub range: Option<(f64, f64)>,
    pub density: bool,
    pub max_depth: usize,
    pub encode: EncodeSettings,
}

impl Default for CurveSettings {
    fn default() -> Self {
        CurveSettings {
            kind: CurveKind::default(),
            checkpoint: None,
            dataset: None,
            task: None,
            out: None,
            bins: 30,
            range: None,
            density: false,
            max_depth: 25,
            encode: EncodeSettings::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("run.toml");
        let json_path = dir.path().join("run.json");
        std::fs::write(
            &toml_path,
            "task = \"sre-reg\"\n[split]\nkind = \"extrapolation\"\naxis = \"qubits\"\ntrain_bounds = [2, 5]\ntest_bounds = [6, 6]\n[train]\nepochs = 3\n[model]\ntc_dims = [8, 8]\n",
        )
        .unwrap();
        std::fs::write(
            &json_path,
            r#"{"task": "sre-reg", "split": {"kind": "extrapolation", "axis": "qubits", "train_bounds": [2, 5], "test_bounds": [6, 6]}, "train": {"epochs": 3}, "model": {"tc_dims": [8, 8]}}"#,
        )
        .unwrap();
        let a: RunSettings = load(Some(&toml_path)).unwrap();
        let b: RunSettings = load(Some(&json_path)).unwrap();
        assert_eq!(serde_json::to_value(&a).unwrap(), serde_json::to_value(&b).unwrap());
        assert_eq!(a.task, Some(Task::SreReg));
        assert_eq!(a.split.train_bounds, Some((2, 5)));
        assert_eq!(a.model.tc_dims, vec![8, 8]);
        assert_eq!(a.train.batch_size, 64);
    }

    #[test]
    fn unknown_extension_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.yaml");
        std::fs::write(&path, "task: stab").unwrap();
        assert!(matches!(load::<RunSettings>(Some(&path)), Err(Error::Config(_))));
    }

    #[test]
    fn gen_settings_flatten_the_generator_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gen.toml");
        std::fs::write(&path, "family = \"RQC\"\nper_cell = 7\nrqc_gates = [0, 20]\n").unwrap();
        let s: GenSettings = load(Some(&path)).unwrap();
        assert_eq!(s.family, Some(Family::RQC));
        assert_eq!(s.config.per_cell, 7);
        assert_eq!(s.config.rqc_gates, (0, 20));
        assert_eq!(s.config.max_qubits, GenConfig::default().max_qubits);
    }
}

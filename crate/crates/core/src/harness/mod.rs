//! Experiment protocols: splits, training, evaluation, curves, repeated runs
//! and ablation.

pub mod eval;
pub mod protocols;
pub mod split;
pub mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetRecord;
use crate::encode::{encode, CircuitGraph, EncodeConfig};
use crate::error::{Error, Result};
use crate::nn::Mode;
use crate::par::Exec;

pub use eval::{
    baseline_metrics, clifford_depth_curve, evaluate, m2_bin_analysis, BinAnalysis, BinRow, CurveRow, Metrics,
    Prediction,
};
pub use protocols::{ablation_suite, grid_search, run_experiment, run_repeated, AblationReport, AblationRow, ExperimentResult, GridResult, RunAggregate};
pub use split::{split, AxisKind, Split, SplitKind, SplitSpec};
pub use train::{train, EpochRecord, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "stab")]
    Stab,
    #[serde(rename = "sre-class")]
    SreClass,
    #[serde(rename = "sre-reg")]
    SreReg,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Stab => "stab",
            Task::SreClass => "sre-class",
            Task::SreReg => "sre-reg",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            Task::SreReg => Mode::Regression,
            _ => Mode::Classification,
        }
    }

    pub fn is_classification(self) -> bool {
        self.mode() == Mode::Classification
    }

    /// Training target of `record` for this task.
    pub fn target(self, record: &DatasetRecord) -> Result<f64> {
        let value = match self {
            Task::Stab => record.stab_label.map(f64::from),
            Task::SreClass => record.cls_sre_label.map(f64::from),
            Task::SreReg => record.m2_value(),
        };
        value.ok_or_else(|| Error::Validation(format!("record `{}` has no {} label", record.id(), self.name())))
    }

    pub fn default_epochs(self) -> usize {
        if self.is_classification() {
            100
        } else {
            200
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "stab" => Ok(Task::Stab),
            "sre-class" => Ok(Task::SreClass),
            "sre-reg" => Ok(Task::SreReg),
            _ => Err(Error::Config(format!("unknown task `{s}` (expected stab, sre-class or sre-reg)"))),
        }
    }
}

/// Records with their encoded graphs, index-aligned.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub records: Vec<DatasetRecord>,
    pub graphs: Vec<CircuitGraph>,
}

impl Corpus {
    pub fn encode(records: Vec<DatasetRecord>, cfg: &EncodeConfig, exec: Exec) -> Result<Self> {
        let graphs = exec.map(&records, |r| encode(&r.circuit, cfg)).into_iter().collect::<Result<Vec<_>>>()?;
        Ok(Corpus { records, graphs })
    }

    pub fn from_parts(records: Vec<DatasetRecord>, graphs: Vec<CircuitGraph>) -> Result<Self> {
        if records.len() != graphs.len() {
            return Err(Error::Dimension(format!("{} records but {} graphs", records.len(), graphs.len())));
        }
        for (r, g) in records.iter().zip(&graphs) {
            if r.id() != g.id {
                return Err(Error::Validation(format!("record `{}` is paired with graph `{}`", r.id(), g.id)));
            }
        }
        Ok(Corpus { records, graphs })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn node_dim(&self) -> Option<usize> {
        self.graphs.first().map(CircuitGraph::node_dim)
    }

    pub fn targets(&self, idx: &[usize], task: Task) -> Result<Vec<f64>> {
        idx.iter().map(|&i| task.target(&self.records[i])).collect()
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

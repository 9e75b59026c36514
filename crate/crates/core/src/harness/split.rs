//! Train/test partitions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{seeded_shuffle, DatasetRecord};
use crate::error::{Error, Result};
use crate::harness::Task;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    RandomRatio,
    Extrapolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    Qubits,
    GateCount,
    TrotterSteps,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::Qubits => "qubits",
            AxisKind::GateCount => "gate_count",
            AxisKind::TrotterSteps => "trotter_steps",
        }
    }

    pub fn value(self, record: &DatasetRecord) -> Result<usize> {
        let c = &record.circuit;
        match self {
            AxisKind::Qubits => Ok(c.n_qubits),
            AxisKind::GateCount => Ok(c.len()),
            AxisKind::TrotterSteps => c
                .meta
                .trotter
                .map(|t| t.steps)
                .ok_or_else(|| Error::Split(format!("record `{}` has no Trotter step count", record.id()))),
        }
    }
}

impl fmt::Display for AxisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AxisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "qubits" => Ok(AxisKind::Qubits),
            "gate_count" | "gates" => Ok(AxisKind::GateCount),
            "trotter_steps" | "steps" => Ok(AxisKind::TrotterSteps),
            _ => Err(Error::Config(format!("unknown split axis `{s}`"))),
        }
    }
}

/// How to partition a corpus.
///
/// `RandomRatio` puts a `ratio` share into train and the rest into test.
/// `Extrapolation` keeps records whose axis value lies in `train_bounds`
/// (inclusive) for training, holding back a `1 − ratio` share of them as an
/// in-range test set, and sends records in `test_bounds` to the
/// extrapolation side. Records outside both ranges are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub ratio: f64,
    pub axis: Option<AxisKind>,
    pub train_bounds: Option<(usize, usize)>,
    pub test_bounds: Option<(usize, usize)>,
    pub stratify_by_label: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            kind: SplitKind::RandomRatio,
            ratio: 0.7,
            axis: None,
            train_bounds: None,
            test_bounds: None,
            stratify_by_label: false,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn random(ratio: f64, seed: u64) -> Self {
        SplitSpec { ratio, seed, ..Default::default() }
    }

    pub fn extrapolation(axis: AxisKind, train: (usize, usize), test: (usize, usize), ratio: f64, seed: u64) -> Self {
        SplitSpec {
            kind: SplitKind::Extrapolation,
            ratio,
            axis: Some(axis),
            train_bounds: Some(train),
            test_bounds: Some(test),
            stratify_by_label: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Split(format!("ratio {} must lie in (0, 1)", self.ratio)));
        }
        if self.kind == SplitKind::Extrapolation {
            let (Some(_), Some(tr), Some(te)) = (self.axis, self.train_bounds, self.test_bounds) else {
                return Err(Error::Split("extrapolation needs an axis and train/test bounds".into()));
            };
            for (name, (lo, hi)) in [("train", tr), ("test", te)] {
                if lo > hi {
                    return Err(Error::Split(format!("{name} bounds [{lo}, {hi}] are empty")));
                }
            }
            if tr.0 <= te.1 && te.0 <= tr.1 {
                return Err(Error::Split(format!(
                    "train bounds [{}, {}] overlap test bounds [{}, {}]",
                    tr.0, tr.1, te.0, te.1
                )));
            }
        }
        Ok(())
    }

    fn describe(&self) -> String {
        match (self.kind, self.axis, self.train_bounds, self.test_bounds) {
            (SplitKind::Extrapolation, Some(a), Some(tr), Some(te)) => {
                format!("{a} train [{}, {}] / test [{}, {}]", tr.0, tr.1, te.0, te.1)
            }
            _ => format!("random ratio {}", self.ratio),
        }
    }
}

/// Indices into the record slice. `holdout` is the in-range test share of
/// an extrapolation split and is empty for random splits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Split {
    pub train: Vec<usize>,
    pub holdout: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// FNV-1a over the three index lists; equal fingerprints mean equal splits.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (tag, part) in [(1u64, &self.train), (2, &self.holdout), (3, &self.test)] {
            for v in std::iter::once(tag << 60).chain(part.iter().map(|&i| i as u64)) {
                for b in v.to_le_bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}

fn ratio_count(n: usize, ratio: f64) -> usize {
    ((n as f64) * ratio).round() as usize
}

/// Shuffle `idx` and cut it at `ratio`, per label when `labels` is given.
fn cut(idx: Vec<usize>, ratio: f64, seed: u64, labels: Option<&[u8]>) -> (Vec<usize>, Vec<usize>) {
    let groups: Vec<Vec<usize>> = match labels {
        None => vec![idx],
        Some(labels) => {
            let (mut zero, mut one) = (Vec::new(), Vec::new());
            for i in idx {
                if labels[i] == 0 {
                    zero.push(i)
                } else {
                    one.push(i)
                }
            }
            vec![zero, one]
        }
    };
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (g, mut group) in groups.into_iter().enumerate() {
        seeded_shuffle(&mut group, seed.wrapping_add(g as u64));
        let k = ratio_count(group.len(), ratio);
        b.extend_from_slice(&group[k..]);
        group.truncate(k);
        a.extend(group);
    }
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// Partition `records` according to `spec`. Deterministic in `spec.seed`.
/// `task` supplies the labels used for stratification.
pub fn split(records: &[DatasetRecord], spec: &SplitSpec, task: Task) -> Result<Split> {
    spec.validate()?;
    if records.is_empty() {
        return Err(Error::Split("cannot split an empty corpus".into()));
    }
    let labels: Option<Vec<u8>> = if spec.stratify_by_label {
        if !task.is_classification() {
            return Err(Error::Split(format!("cannot stratify a {task} task")));
        }
        let labels = records.iter().map(|r| task.target(r).map(|v| v as u8)).collect::<Result<Vec<u8>>>()?;
        if !(labels.contains(&0) && labels.contains(&1)) {
            return Err(Error::Split("stratified split needs both labels present".into()));
        }
        Some(labels)
    } else {
        None
    };

    let out = match spec.kind {
        SplitKind::RandomRatio => {
            let (train, test) = cut((0..records.len()).collect(), spec.ratio, spec.seed, labels.as_deref());
            Split { train, holdout: Vec::new(), test }
        }
        SplitKind::Extrapolation => {
            let axis = spec.axis.expect("validated");
            let (tr, te) = (spec.train_bounds.expect("validated"), spec.test_bounds.expect("validated"));
            let (mut in_range, mut test) = (Vec::new(), Vec::new());
            for (i, r) in records.iter().enumerate() {
                let v = axis.value(r)?;
                if (tr.0..=tr.1).contains(&v) {
                    in_range.push(i);
                } else if (te.0..=te.1).contains(&v) {
                    test.push(i);
                }
            }
            let (train, holdout) = cut(in_range, spec.ratio, spec.seed, labels.as_deref());
            Split { train, holdout, test }
        }
    };
    if out.train.is_empty() || out.test.is_empty() {
        return Err(Error::Split(format!(
            "{} leaves {} training and {} test records",
            spec.describe(),
            out.train.len(),
            out.test.len()
        )));
    }
    Ok(out)
}

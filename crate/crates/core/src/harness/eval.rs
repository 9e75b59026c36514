//! Metrics, baselines and evaluation curves.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dataset::{median, DatasetRecord};
use crate::error::{Error, Result};
use crate::harness::{Corpus, Task};
use crate::nn::{model::predict, Checkpoint, PreparedGraph};
use crate::par::Exec;

/// One row of the predictions file. For classification `prediction` is the
/// class at threshold 0.5 and `score` the logit; for regression both hold
/// the predicted value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub label: f64,
    pub prediction: f64,
    pub score: f64,
}

impl Prediction {
    pub fn is_correct(&self) -> bool {
        self.label == self.prediction
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub dataset: String,
    pub task: Task,
    pub n: usize,
    pub accuracy: Option<f64>,
    pub accuracy_class0: Option<f64>,
    pub accuracy_class1: Option<f64>,
    pub n_class0: Option<usize>,
    pub n_class1: Option<usize>,
    pub mse: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Metrics implied by a predictions list.
pub fn metrics_from_predictions(dataset: &str, task: Task, preds: &[Prediction]) -> Metrics {
    let n = preds.len();
    let mut m = Metrics {
        dataset: dataset.to_string(),
        task,
        n,
        accuracy: None,
        accuracy_class0: None,
        accuracy_class1: None,
        n_class0: None,
        n_class1: None,
        mse: None,
    };
    if task.is_classification() {
        let mut count = [0usize; 2];
        let mut correct = [0usize; 2];
        for p in preds {
            let c = usize::from(p.label != 0.0);
            count[c] += 1;
            correct[c] += usize::from(p.is_correct());
        }
        m.accuracy = ratio(correct[0] + correct[1], n);
        m.accuracy_class0 = ratio(correct[0], count[0]);
        m.accuracy_class1 = ratio(correct[1], count[1]);
        m.n_class0 = Some(count[0]);
        m.n_class1 = Some(count[1]);
    } else if n > 0 {
        m.mse = Some(preds.iter().map(|p| (p.prediction - p.label).powi(2)).sum::<f64>() / n as f64);
    }
    m
}

fn to_prediction(task: Task, id: &str, label: f64, output: f64) -> Prediction {
    let prediction = if task.is_classification() { f64::from(u8::from(output > 0.0)) } else { output };
    Prediction { id: id.to_string(), label, prediction, score: output }
}

/// Raw model outputs for `corpus[idx]`.
pub fn model_outputs(ck: &Checkpoint, corpus: &Corpus, idx: &[usize], exec: Exec) -> Result<Vec<f64>> {
    let graphs = exec
        .map(idx, |&i| PreparedGraph::new(&corpus.graphs[i], &ck.normalizer))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    predict(&ck.params, &graphs, exec)
}

pub fn evaluate(
    ck: &Checkpoint,
    corpus: &Corpus,
    idx: &[usize],
    task: Task,
    dataset: &str,
    exec: Exec,
) -> Result<(Metrics, Vec<Prediction>)> {
    if ck.params.config.mode != task.mode() {
        return Err(Error::Config(format!("checkpoint was trained for {:?}, not {task}", ck.params.config.mode)));
    }
    let labels = corpus.targets(idx, task)?;
    let outputs = model_outputs(ck, corpus, idx, exec)?;
    let preds: Vec<Prediction> = idx
        .iter()
        .zip(labels)
        .zip(outputs)
        .map(|((&i, label), out)| to_prediction(task, corpus.records[i].id(), label, out))
        .collect();
    Ok((metrics_from_predictions(dataset, task, &preds), preds))
}

/// Constant-mean (regression) or majority-class (classification) predictor
/// fitted on `train_targets`, applied to `corpus[idx]`.
pub fn baseline_metrics(
    train_targets: &[f64],
    corpus: &Corpus,
    idx: &[usize],
    task: Task,
    dataset: &str,
) -> Result<(Metrics, Vec<Prediction>)> {
    if train_targets.is_empty() {
        return Err(Error::Precondition("baseline needs training targets".into()));
    }
    let mean = train_targets.iter().sum::<f64>() / train_targets.len() as f64;
    let output = if task.is_classification() { if mean >= 0.5 { 1.0 } else { -1.0 } } else { mean };
    let labels = corpus.targets(idx, task)?;
    let preds: Vec<Prediction> =
        idx.iter().zip(labels).map(|(&i, label)| to_prediction(task, corpus.records[i].id(), label, output)).collect();
    Ok((metrics_from_predictions(dataset, task, &preds), preds))
}

pub fn write_predictions<W: Write>(out: W, preds: &[Prediction]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in preds {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions<R: Read>(input: R) -> Result<Vec<Prediction>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub depth: usize,
    pub class: u8,
    pub accuracy: Option<f64>,
    pub count: usize,
}

/// Per-depth, per-class accuracy over Clifford-evolved records. Emits one
/// row for every depth in `1..=max_depth` and both classes.
pub fn clifford_depth_curve(records: &[&DatasetRecord], preds: &[Prediction], max_depth: usize) -> Result<Vec<CurveRow>> {
    if records.len() != preds.len() {
        return Err(Error::Dimension(format!("{} records but {} predictions", records.len(), preds.len())));
    }
    let mut count = vec![[0usize; 2]; max_depth + 1];
    let mut correct = vec![[0usize; 2]; max_depth + 1];
    for (r, p) in records.iter().zip(preds) {
        let d = r
            .circuit
            .meta
            .clifford_depth
            .ok_or_else(|| Error::Validation(format!("record `{}` has no Clifford depth", r.id())))?;
        if d == 0 || d > max_depth {
            return Err(Error::Validation(format!("record `{}` has depth {d} outside 1..={max_depth}", r.id())));
        }
        let c = usize::from(p.label != 0.0);
        count[d][c] += 1;
        correct[d][c] += usize::from(p.is_correct());
    }
    let mut rows = Vec::with_capacity(2 * max_depth);
    for d in 1..=max_depth {
        for c in 0..2 {
            rows.push(CurveRow { depth: d, class: c as u8, accuracy: ratio(correct[d][c], count[d][c]), count: count[d][c] });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub misclassified: usize,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinAnalysis {
    pub rows: Vec<BinRow>,
    pub median_all: Option<f64>,
    pub median_misclassified: Option<f64>,
    pub out_of_range: usize,
}

impl BinAnalysis {
    pub fn bin_width(&self) -> f64 {
        self.rows.first().map_or(f64::NAN, |r| r.hi - r.lo)
    }

    /// Index of the bin with the highest misclassification ratio.
    pub fn peak(&self) -> Option<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.ratio.map(|v| (i, v)))
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((i, v)),
            })
            .map(|(i, _)| i)
    }

    pub fn bin_of(&self, value: f64) -> Option<usize> {
        let lo = self.rows.first()?.lo;
        let hi = self.rows.last()?.hi;
        bin_index(value, lo, hi, self.rows.len())
    }
}

fn bin_index(value: f64, lo: f64, hi: f64, bins: usize) -> Option<usize> {
    if !(value >= lo && value <= hi) {
        return None;
    }
    let k = ((value - lo) / (hi - lo) * bins as f64).floor() as usize;
    Some(k.min(bins - 1))
}

/// Misclassification ratio per M₂ bin. With `density_mode` the binned value
/// is M₂/n and only records labeled magic (`stab = 1`) are considered;
/// otherwise the absolute M₂ of every record is used.
pub fn m2_bin_analysis(
    records: &[&DatasetRecord],
    preds: &[Prediction],
    bins: usize,
    range: (f64, f64),
    density_mode: bool,
) -> Result<BinAnalysis> {
    if records.len() != preds.len() {
        return Err(Error::Dimension(format!("{} records but {} predictions", records.len(), preds.len())));
    }
    if bins == 0 || !(range.1 > range.0) {
        return Err(Error::Config(format!("bad binning: {bins} bins over [{}, {}]", range.0, range.1)));
    }
    let width = (range.1 - range.0) / bins as f64;
    let mut rows: Vec<BinRow> = (0..bins)
        .map(|k| BinRow {
            lo: range.0 + k as f64 * width,
            hi: if k + 1 == bins { range.1 } else { range.0 + (k + 1) as f64 * width },
            count: 0,
            misclassified: 0,
            ratio: None,
        })
        .collect();
    let (mut all, mut wrong, mut out_of_range) = (Vec::new(), Vec::new(), 0);
    for (r, p) in records.iter().zip(preds) {
        if density_mode && r.stab_label != Some(1) {
            continue;
        }
        let m2 = r.m2_value().ok_or_else(|| Error::Validation(format!("record `{}` has no m2", r.id())))?;
        let v = if density_mode { m2 / r.circuit.n_qubits as f64 } else { m2 };
        all.push(v);
        if !p.is_correct() {
            wrong.push(v);
        }
        match bin_index(v, range.0, range.1, bins) {
            Some(k) => {
                rows[k].count += 1;
                rows[k].misclassified += usize::from(!p.is_correct());
            }
            None => out_of_range += 1,
        }
    }
    for row in &mut rows {
        row.ratio = ratio(row.misclassified, row.count);
    }
    let med = |v: &[f64]| (!v.is_empty()).then(|| median(v));
    Ok(BinAnalysis { rows, median_all: med(&all), median_misclassified: med(&wrong), out_of_range })
}

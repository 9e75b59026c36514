//! Composite protocols: one split-train-evaluate experiment, repeated runs
//! over seeds, and the graph-branch ablation.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::eval::{baseline_metrics, evaluate, Metrics, Prediction};
use crate::harness::split::{split, Split, SplitKind, SplitSpec};
use crate::harness::train::{train, TrainConfig, TrainOutcome};
use crate::harness::{mean_std, Corpus, Task};
use crate::nn::ModelConfig;
use crate::par::Exec;

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub split: Split,
    pub outcome: TrainOutcome,
    /// Model metrics per evaluated set, then baseline metrics.
    pub metrics: Vec<Metrics>,
    pub predictions: Vec<(String, Vec<Prediction>)>,
}

impl ExperimentResult {
    pub fn metric(&self, dataset: &str) -> Option<&Metrics> {
        self.metrics.iter().find(|m| m.dataset == dataset)
    }

    /// Flat `{dataset}_{metric}` view of every reported value.
    pub fn summary(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for m in &self.metrics {
            let fields = [
                ("accuracy", m.accuracy),
                ("accuracy_class0", m.accuracy_class0),
                ("accuracy_class1", m.accuracy_class1),
                ("mse", m.mse),
            ];
            for (name, v) in fields {
                if let Some(v) = v {
                    out.insert(format!("{}_{name}", m.dataset), v);
                }
            }
        }
        out
    }
}

/// Names of the evaluated sets: the test side of an extrapolation split is
/// reported as "extrapolation" and its in-range holdout as "test".
fn named_sets<'a>(spec: &SplitSpec, s: &'a Split) -> Vec<(&'static str, &'a [usize])> {
    let mut sets = vec![("train", s.train.as_slice())];
    match spec.kind {
        SplitKind::RandomRatio => sets.push(("test", s.test.as_slice())),
        SplitKind::Extrapolation => {
            if !s.holdout.is_empty() {
                sets.push(("test", s.holdout.as_slice()));
            }
            sets.push(("extrapolation", s.test.as_slice()));
        }
    }
    sets
}

pub fn run_experiment(
    corpus: &Corpus,
    spec: &SplitSpec,
    task: Task,
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<ExperimentResult> {
    let s = split(&corpus.records, spec, task)?;
    let outcome = train(corpus, &s.train, task, model, cfg)?;
    let train_targets = corpus.targets(&outcome.fit_idx, task)?;
    let mut metrics = Vec::new();
    let mut baselines = Vec::new();
    let mut predictions = Vec::new();
    for (name, idx) in named_sets(spec, &s) {
        let (m, p) = evaluate(&outcome.checkpoint, corpus, idx, task, name, cfg.exec)?;
        metrics.push(m);
        predictions.push((name.to_string(), p));
        let (b, _) = baseline_metrics(&train_targets, corpus, idx, task, &format!("baseline_{name}"))?;
        baselines.push(b);
    }
    metrics.extend(baselines);
    Ok(ExperimentResult { split: s, outcome, metrics, predictions })
}

#[derive(Debug, Clone)]
pub struct GridResult {
    /// Best validation loss of every candidate, in grid order.
    pub val_losses: Vec<f64>,
    pub best: usize,
    pub outcome: TrainOutcome,
}

/// Train every (model, optimiser) candidate on `corpus[idx]` and keep the one
/// with the lowest validation loss. All candidates share the validation
/// split when their seeds agree. Test data is never consulted.
pub fn grid_search(
    corpus: &Corpus,
    idx: &[usize],
    task: Task,
    grid: &[(ModelConfig, TrainConfig)],
) -> Result<GridResult> {
    let mut best: Option<(usize, f64, TrainOutcome)> = None;
    let mut val_losses = Vec::with_capacity(grid.len());
    for (i, (model, cfg)) in grid.iter().enumerate() {
        if cfg.val_fraction <= 0.0 {
            return Err(Error::Config("grid search needs a validation split".into()));
        }
        let outcome = train(corpus, idx, task, model, cfg)?;
        let loss = outcome.history[outcome.best_epoch].val_loss.unwrap_or(f64::INFINITY);
        val_losses.push(loss);
        if best.as_ref().map_or(true, |b| loss < b.1) {
            best = Some((i, loss, outcome));
        }
    }
    let (best, _, outcome) = best.ok_or_else(|| Error::Config("empty grid".into()))?;
    Ok(GridResult { val_losses, best, outcome })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunAggregate {
    pub seeds: Vec<u64>,
    pub runs: Vec<BTreeMap<String, f64>>,
    pub mean: BTreeMap<String, f64>,
    pub std: BTreeMap<String, f64>,
}

impl RunAggregate {
    /// One row per run, then a `summary` row carrying means in the metric
    /// columns and standard deviations in the `*_std` columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let keys: Vec<&String> = self.mean.keys().collect();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["run".to_string(), "seed".to_string()];
        for k in &keys {
            header.push((*k).clone());
            header.push(format!("{k}_std"));
        }
        w.write_record(&header)?;
        for (i, (seed, run)) in self.seeds.iter().zip(&self.runs).enumerate() {
            let mut row = vec![i.to_string(), seed.to_string()];
            for k in &keys {
                row.push(run.get(*k).map_or(String::new(), |v| v.to_string()));
                row.push(String::new());
            }
            w.write_record(&row)?;
        }
        let mut row = vec!["summary".to_string(), String::new()];
        for k in &keys {
            row.push(self.mean[*k].to_string());
            row.push(self.std[*k].to_string());
        }
        w.write_record(&row)?;
        w.flush()?;
        Ok(())
    }
}

/// Run `run(index, seed)` for seeds `base_seed + index`, then aggregate every
/// metric that all runs report. The first failing run aborts with its index.
pub fn run_repeated<F>(n_runs: usize, base_seed: u64, exec: Exec, run: F) -> Result<RunAggregate>
where
    F: Fn(usize, u64) -> Result<BTreeMap<String, f64>> + Sync + Send,
{
    if n_runs == 0 {
        return Err(Error::Config("need at least one run".into()));
    }
    let seeds: Vec<u64> = (0..n_runs).map(|i| base_seed.wrapping_add(i as u64)).collect();
    let results = exec.map_range(n_runs, |i| run(i, seeds[i]));
    let mut runs = Vec::with_capacity(n_runs);
    for (index, r) in results.into_iter().enumerate() {
        runs.push(r.map_err(|e| Error::Run { index, source: Box::new(e) })?);
    }
    let mut mean = BTreeMap::new();
    let mut std = BTreeMap::new();
    for key in runs[0].keys() {
        let values: Option<Vec<f64>> = runs.iter().map(|r| r.get(key).copied()).collect();
        if let Some(values) = values {
            let (m, s) = mean_std(&values);
            mean.insert(key.clone(), m);
            std.insert(key.clone(), s);
        }
    }
    Ok(RunAggregate { seeds, runs, mean, std })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub dataset: String,
    pub variant: String,
    pub train_mse: Option<f64>,
    pub test_mse: Option<f64>,
    pub extrapolation_mse: Option<f64>,
    pub split_fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    /// (ablated − full) / ablated on the extrapolation MSE.
    pub relative_difference: Option<f64>,
}

impl AblationReport {
    pub fn full(&self) -> &AblationRow {
        &self.rows[0]
    }

    pub fn ablated(&self) -> &AblationRow {
        &self.rows[1]
    }
}

/// Train the full model and the global-features-only model on the same
/// split with the same seed.
pub fn ablation_suite(
    corpus: &Corpus,
    spec: &SplitSpec,
    model: &ModelConfig,
    cfg: &TrainConfig,
    dataset: &str,
) -> Result<AblationReport> {
    let mut rows = Vec::new();
    for (variant, ablate) in [("gnn", false), ("ablated", true)] {
        let m = ModelConfig { ablate_graph: ablate, ..model.clone() };
        let r = run_experiment(corpus, spec, Task::SreReg, &m, cfg)?;
        let mse = |name: &str| r.metric(name).and_then(|m| m.mse);
        rows.push(AblationRow {
            dataset: dataset.to_string(),
            variant: variant.to_string(),
            train_mse: mse("train"),
            test_mse: mse("test"),
            extrapolation_mse: mse("extrapolation"),
            split_fingerprint: r.split.fingerprint(),
        });
    }
    if rows[0].split_fingerprint != rows[1].split_fingerprint {
        return Err(Error::Split("ablation variants saw different splits".into()));
    }
    let relative_difference = match (rows[0].extrapolation_mse, rows[1].extrapolation_mse) {
        (Some(full), Some(abl)) if abl > 0.0 => Some((abl - full) / abl),
        _ => None,
    };
    Ok(AblationReport { rows, relative_difference })
}

//! Mini-batch Adam training with best-validation checkpointing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::seeded_shuffle;
use crate::error::{Error, Result};
use crate::harness::{Corpus, Task};
use crate::nn::model::batch_loss;
use crate::nn::{adam_step, loss_and_grad, AdamConfig, AdamState, Checkpoint, ModelConfig, ModelParams, Normalizer, PreparedGraph};
use crate::par::Exec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Defaults to 100 for classification and 200 for regression.
    pub epochs: Option<usize>,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub patience: usize,
    pub val_fraction: f64,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: None,
            batch_size: 64,
            adam: AdamConfig::default(),
            patience: 20,
            val_fraction: 0.1,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!("val_fraction {} must lie in [0, 1)", self.val_fraction)));
        }
        if !(self.adam.lr > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    /// Epoch 0 holds the losses of the initial parameters.
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub fit_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
}

impl TrainOutcome {
    pub fn initial_train_loss(&self) -> f64 {
        self.history[0].train_loss
    }

    pub fn final_train_loss(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.train_loss)
    }
}

fn as_batch(set: &[(PreparedGraph, f64)]) -> Vec<(&PreparedGraph, f64)> {
    set.iter().map(|(g, t)| (g, *t)).collect()
}

fn check_finite(loss: f64, epoch: usize, what: &str) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Divergence { epoch, message: format!("{what} loss became {loss}") })
    }
}

/// Train a fresh model on `corpus[idx]` for `task`.
///
/// `model.node_dim` and `model.mode` are taken from the corpus and task. A
/// seed-derived `val_fraction` of `idx` is held out for checkpoint selection
/// and early stopping; the global-feature normaliser is fitted on the rest.
pub fn train(corpus: &Corpus, idx: &[usize], task: Task, model: &ModelConfig, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if idx.is_empty() {
        return Err(Error::Split("no training records".into()));
    }
    let mut model = model.clone();
    model.mode = task.mode();
    model.node_dim = corpus.graphs[idx[0]].node_dim();
    model.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (split_seed, init_seed, order_seed): (u64, u64, u64) = (rng.gen(), rng.gen(), rng.gen());

    let mut shuffled = idx.to_vec();
    seeded_shuffle(&mut shuffled, split_seed);
    let n_val = if idx.len() >= 10 { ((idx.len() as f64 * cfg.val_fraction).round() as usize).min(idx.len() - 1) } else { 0 };
    let mut val_idx = shuffled.split_off(idx.len() - n_val);
    let mut fit_idx = shuffled;
    fit_idx.sort_unstable();
    val_idx.sort_unstable();

    let norm = Normalizer::fit(fit_idx.iter().map(|&i| corpus.graphs[i].global_features.as_slice()))?;
    let prepare = |ids: &[usize]| -> Result<Vec<(PreparedGraph, f64)>> {
        let graphs = cfg.exec.map(ids, |&i| PreparedGraph::new(&corpus.graphs[i], &norm));
        ids.iter().zip(graphs).map(|(&i, g)| Ok((g?, task.target(&corpus.records[i])?))).collect()
    };
    let fit = prepare(&fit_idx)?;
    let val = prepare(&val_idx)?;
    let fit_all = as_batch(&fit);
    let val_all = as_batch(&val);

    let mut params = ModelParams::init(&model, init_seed)?;
    let mut state = AdamState::new(params.len(), cfg.adam);
    let evaluate = |p: &ModelParams, epoch: usize| -> Result<(f64, Option<f64>)> {
        let tl = batch_loss(p, &fit_all, cfg.exec)?;
        check_finite(tl, epoch, "training")?;
        let vl = if val_all.is_empty() { None } else { Some(batch_loss(p, &val_all, cfg.exec)?) };
        Ok((tl, vl))
    };
    let (tl, vl) = evaluate(&params, 0)?;
    let mut history = vec![EpochRecord { epoch: 0, train_loss: tl, val_loss: vl }];
    let mut best = (vl.unwrap_or(tl), 0usize, params.clone(), state.clone());

    let epochs = cfg.epochs.unwrap_or_else(|| task.default_epochs());
    let mut order: Vec<usize> = (0..fit.len()).collect();
    for epoch in 1..=epochs {
        seeded_shuffle(&mut order, order_seed.wrapping_add(epoch as u64));
        let mut weighted = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<_> = chunk.iter().map(|&k| fit_all[k]).collect();
            let (loss, grads) = loss_and_grad(&params, &batch, cfg.exec)?;
            check_finite(loss, epoch, "batch")?;
            weighted += loss * batch.len() as f64;
            adam_step(&mut params, &grads, &mut state)?;
        }
        if params.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { epoch, message: "parameters became non-finite".into() });
        }
        let train_loss = weighted / fit.len() as f64;
        let val_loss = if val_all.is_empty() { None } else { Some(batch_loss(&params, &val_all, cfg.exec)?) };
        history.push(EpochRecord { epoch, train_loss, val_loss });
        let score = val_loss.unwrap_or(train_loss);
        if score < best.0 {
            best = (score, epoch, params.clone(), state.clone());
        } else if epoch - best.1 >= cfg.patience {
            log::info!("early stop at epoch {epoch}; best epoch {}", best.1);
            break;
        }
    }

    let extra = serde_json::json!({ "task": task, "train": cfg, "best_epoch": best.1 }).to_string();
    let checkpoint = Checkpoint { params: best.2, normalizer: norm, optimizer: Some(best.3), seed: cfg.seed, extra };
    Ok(TrainOutcome { checkpoint, history, best_epoch: best.1, fit_idx, val_idx })
}

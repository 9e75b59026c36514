//! Finite-difference check of the hand-written gradients.

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::model::{batch_loss, loss_and_grad, PreparedGraph};
use crate::nn::{ModelConfig, ModelParams};
use crate::par::Exec;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_CHECK_NODES: usize = 10;
/// Entries checked per block; smaller blocks are checked exhaustively.
pub const MAX_ENTRIES_PER_BLOCK: usize = 48;
/// Denominator floor of the relative error, so entries whose true gradient
/// is zero are judged by absolute error.
pub const REL_ERR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub name: String,
    pub checked: usize,
    pub max_rel_err: f64,
    pub max_abs_analytic: f64,
    pub max_abs_numeric: f64,
}

impl BlockReport {
    pub fn is_exact_zero(&self) -> bool {
        self.max_abs_analytic == 0.0 && self.max_abs_numeric == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockReport>,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_rel_err).fold(0.0, f64::max)
    }

    pub fn failing(&self, tol: f64) -> Vec<&str> {
        self.blocks.iter().filter(|b| !(b.max_rel_err < tol)).map(|b| b.name.as_str()).collect()
    }

    pub fn block(&self, name: &str) -> Option<&BlockReport> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

/// Random DAG over `n` nodes in topological order; every non-root node has
/// one to three in-edges.
pub fn random_graph(cfg: &ModelConfig, n: usize, rng: &mut impl Rng) -> Result<PreparedGraph> {
    let x = Array2::from_shape_fn((n, cfg.node_dim), |_| rng.gen_range(-1.0..1.0));
    let mut edges = Vec::new();
    for v in 1..n {
        let k = rng.gen_range(1..=3usize.min(v));
        for u in sample(rng, v, k) {
            edges.push((u as u32, v as u32));
        }
    }
    let global = Array1::from_shape_fn(cfg.global_dim, |_| rng.gen_range(-1.5..1.5));
    PreparedGraph::from_parts(x, &edges, global)
}

pub fn grad_check(config: &ModelConfig, seed: u64) -> Result<GradCheckReport> {
    grad_check_with(config, seed, |_| {})
}

/// As [`grad_check`], with `corrupt` applied to the analytic gradient before
/// comparison.
pub fn grad_check_with(
    config: &ModelConfig,
    seed: u64,
    corrupt: impl Fn(&mut ModelParams),
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(config, rng.gen())?;
    let graph = random_graph(config, GRAD_CHECK_NODES, &mut rng)?;
    let target = match config.mode {
        crate::nn::Mode::Classification => f64::from(rng.gen_bool(0.5)),
        crate::nn::Mode::Regression => rng.gen_range(-0.5..0.5),
    };
    let batch = [(&graph, target)];
    let (_, mut grads) = loss_and_grad(&params, &batch, Exec::Sequential)?;
    corrupt(&mut grads);

    let mut blocks = Vec::new();
    for block in params.layout.blocks.clone() {
        let len = block.len();
        let idx: Vec<usize> = if len <= MAX_ENTRIES_PER_BLOCK {
            (0..len).collect()
        } else {
            let mut v = sample(&mut rng, len, MAX_ENTRIES_PER_BLOCK).into_vec();
            v.sort_unstable();
            v
        };
        let mut report = BlockReport {
            name: block.name.clone(),
            checked: idx.len(),
            max_rel_err: 0.0,
            max_abs_analytic: 0.0,
            max_abs_numeric: 0.0,
        };
        for i in idx {
            let at = block.offset + i;
            let orig = params.data[at];
            params.data[at] = orig + FD_STEP;
            let up = batch_loss(&params, &batch, Exec::Sequential)?;
            params.data[at] = orig - FD_STEP;
            let down = batch_loss(&params, &batch, Exec::Sequential)?;
            params.data[at] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let analytic = grads.data[at];
            let denom = analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR);
            let rel = (analytic - numeric).abs() / denom;
            report.max_rel_err = report.max_rel_err.max(rel);
            report.max_abs_analytic = report.max_abs_analytic.max(analytic.abs());
            report.max_abs_numeric = report.max_abs_numeric.max(numeric.abs());
        }
        blocks.push(report);
    }
    Ok(GradCheckReport { blocks })
}

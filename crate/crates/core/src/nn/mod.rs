//! Dual-branch graph neural network with hand-written reverse-mode gradients.
//!
//! Graph branch: three TransformerConv layers with ReLU between them, then
//! mean pooling over nodes. Global branch: affine+ReLU stack over the
//! standardised 152-entry gate-count vector. The two embeddings are
//! concatenated and fed to a three-layer head (affine, ReLU, affine, ReLU,
//! affine) that emits one scalar: a logit for classification or the M₂
//! estimate for regression.
//!
//! All parameters live in one flat `f64` buffer described by a [`Layout`] of
//! named blocks; gradients and optimizer moments share the same layout.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod tc;

use ndarray::{ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encode::GLOBAL_DIM;
use crate::error::{Error, Result};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::Checkpoint;
pub use gradcheck::{grad_check, grad_check_with, GradCheckReport};
pub use loss::{bce_loss, huber_loss, sigmoid};
pub use model::{loss_and_grad, model_forward, Normalizer, PreparedGraph};
pub use tc::{mean_pool, tc_forward, Adjacency, TcLayerParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Classification,
    Regression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub node_dim: usize,
    pub global_dim: usize,
    /// Output width of each TransformerConv layer.
    pub tc_dims: Vec<usize>,
    pub heads: usize,
    pub global_dims: Vec<usize>,
    /// Hidden widths of the head; a final width-1 layer is appended.
    pub head_dims: Vec<usize>,
    pub mode: Mode,
    pub ablate_graph: bool,
    pub relu_after_last_tc: bool,
    pub huber_delta: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            node_dim: 13,
            global_dim: GLOBAL_DIM,
            tc_dims: vec![64, 64, 64],
            heads: 1,
            global_dims: vec![128, 64],
            head_dims: vec![128, 64],
            mode: Mode::Regression,
            ablate_graph: false,
            relu_after_last_tc: false,
            huber_delta: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.node_dim == 0 || self.global_dim == 0 {
            return err("input widths must be positive".into());
        }
        if self.tc_dims.is_empty() || self.global_dims.is_empty() {
            return err("both branches need at least one layer".into());
        }
        if self.heads == 0 || self.tc_dims.iter().any(|&d| d == 0 || d % self.heads != 0) {
            return err(format!("head count {} must divide every TC width {:?}", self.heads, self.tc_dims));
        }
        if self.global_dims.iter().chain(&self.head_dims).any(|&d| d == 0) {
            return err("layer widths must be positive".into());
        }
        if !(self.huber_delta > 0.0) {
            return err("huber_delta must be positive".into());
        }
        Ok(())
    }

    pub fn graph_width(&self) -> usize {
        *self.tc_dims.last().unwrap_or(&0)
    }

    pub fn global_width(&self) -> usize {
        *self.global_dims.last().unwrap_or(&0)
    }

    /// Block layout implied by this configuration.
    pub fn layout(&self) -> Layout {
        let mut layout = Layout::default();
        let mut d_in = self.node_dim;
        for (l, &d_out) in self.tc_dims.iter().enumerate() {
            layout.push(format!("tc{l}.w_root"), vec![d_out, d_in]);
            layout.push(format!("tc{l}.b_root"), vec![d_out]);
            layout.push(format!("tc{l}.w_msg"), vec![d_out, d_in]);
            layout.push(format!("tc{l}.b_msg"), vec![d_out]);
            layout.push(format!("tc{l}.w_query"), vec![d_out, d_in]);
            layout.push(format!("tc{l}.w_key"), vec![d_out, d_in]);
            d_in = d_out;
        }
        let mut d_in = self.global_dim;
        for (i, &d_out) in self.global_dims.iter().enumerate() {
            layout.push(format!("global{i}.w"), vec![d_out, d_in]);
            layout.push(format!("global{i}.b"), vec![d_out]);
            d_in = d_out;
        }
        let mut d_in = self.graph_width() + self.global_width();
        for (i, &d_out) in self.head_dims.iter().chain(std::iter::once(&1)).enumerate() {
            layout.push(format!("head{i}.w"), vec![d_out, d_in]);
            layout.push(format!("head{i}.b"), vec![d_out]);
            d_in = d_out;
        }
        layout
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn fan_in(&self) -> usize {
        *self.shape.last().unwrap_or(&1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Layout {
    pub blocks: Vec<Block>,
    pub len: usize,
}

impl Layout {
    fn push(&mut self, name: String, shape: Vec<usize>) {
        let block = Block { name, shape, offset: self.len };
        self.len += block.len();
        self.blocks.push(block);
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    fn index(&self, name: &str) -> &Block {
        self.block(name).unwrap_or_else(|| panic!("no parameter block `{name}`"))
    }
}

/// Parameters (or gradients, or optimizer moments) of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let layout = config.layout();
        let data = vec![0.0; layout.len];
        ModelParams { config: config.clone(), layout, data }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams { config: self.config.clone(), layout: self.layout.clone(), data: vec![0.0; self.data.len()] }
    }

    /// Uniform in ±1/√fan_in for every weight and bias.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut p = ModelParams::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for block in &p.layout.blocks {
            let fan_in = if block.shape.len() == 1 {
                // biases share the fan-in of their weight matrix
                p.layout.blocks[..]
                    .iter()
                    .rev()
                    .find(|b| b.offset < block.offset && b.shape.len() == 2 && b.shape[0] == block.shape[0])
                    .map_or(1, Block::fan_in)
            } else {
                block.fan_in()
            };
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut p.data[block.range()] {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block_slice(&self, name: &str) -> &[f64] {
        &self.data[self.layout.index(name).range()]
    }

    pub fn block_slice_mut(&mut self, name: &str) -> &mut [f64] {
        let range = self.layout.index(name).range();
        &mut self.data[range]
    }

    pub fn mat(&self, name: &str) -> ArrayView2<'_, f64> {
        let b = self.layout.index(name);
        ArrayView2::from_shape((b.shape[0], b.shape[1]), &self.data[b.range()]).expect("matrix block")
    }

    pub fn vec(&self, name: &str) -> ArrayView1<'_, f64> {
        let b = self.layout.index(name);
        ArrayView1::from(&self.data[b.range()])
    }

    /// Accumulate `values` (row-major, block-shaped) into block `name`.
    pub fn add_to<'a>(&mut self, name: &str, values: impl IntoIterator<Item = &'a f64>) {
        for (dst, v) in self.block_slice_mut(name).iter_mut().zip(values) {
            *dst += v;
        }
    }

    pub fn tc_layer(&self, l: usize) -> TcLayerParams<'_> {
        TcLayerParams {
            w_root: self.mat(&format!("tc{l}.w_root")),
            b_root: self.vec(&format!("tc{l}.b_root")),
            w_msg: self.mat(&format!("tc{l}.w_msg")),
            b_msg: self.vec(&format!("tc{l}.b_msg")),
            w_query: self.mat(&format!("tc{l}.w_query")),
            w_key: self.mat(&format!("tc{l}.w_key")),
            heads: self.config.heads,
        }
    }
}

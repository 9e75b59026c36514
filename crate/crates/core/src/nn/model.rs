//! Forward and reverse passes of the full model.

use ndarray::{Array1, Array2};

use crate::encode::CircuitGraph;
use crate::error::{Error, Result};
use crate::nn::loss::{bce_grad, bce_loss, huber_grad, huber_loss};
use crate::nn::tc::{mean_pool, tc_backward, tc_forward_cached, Adjacency, TcCache};
use crate::nn::{Mode, ModelParams};
use crate::par::Exec;

/// Graphs per gradient accumulation chunk. Fixed so the summation order does
/// not depend on the number of worker threads.
const GRAD_CHUNK: usize = 8;

/// Per-dimension standardisation of the global feature vector. Dimensions
/// with zero variance on the fitting set map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Normalizer { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let first = rows.first().ok_or_else(|| Error::Dimension("cannot fit a normaliser on no rows".into()))?;
        let dim = first.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("ragged global feature rows".into()));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(*r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(*r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Normalizer { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Result<Array1<f64>> {
        if row.len() != self.mean.len() {
            return Err(Error::Dimension(format!(
                "global features have {} entries, normaliser expects {}",
                row.len(),
                self.mean.len()
            )));
        }
        Ok(row
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect())
    }
}

/// A graph ready for the model: features, in-neighbour lists and the
/// standardised global vector.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub x: Array2<f64>,
    pub adj: Adjacency,
    pub global: Array1<f64>,
}

impl PreparedGraph {
    pub fn new(graph: &CircuitGraph, norm: &Normalizer) -> Result<Self> {
        Ok(PreparedGraph {
            x: graph.node_features.clone(),
            adj: Adjacency::from_edges(graph.n_nodes(), &graph.edges)?,
            global: norm.apply(&graph.global_features)?,
        })
    }

    pub fn from_parts(x: Array2<f64>, edges: &[(u32, u32)], global: Array1<f64>) -> Result<Self> {
        let adj = Adjacency::from_edges(x.nrows(), edges)?;
        Ok(PreparedGraph { x, adj, global })
    }
}

struct Cache {
    tc: Vec<(TcCache, Array2<f64>)>,
    n_nodes: usize,
    /// (input, pre-activation) per global layer.
    global: Vec<(Array1<f64>, Array1<f64>)>,
    head: Vec<(Array1<f64>, Array1<f64>)>,
}

fn relu1(z: &Array1<f64>) -> Array1<f64> {
    z.mapv(|v| v.max(0.0))
}

fn check_inputs(params: &ModelParams, g: &PreparedGraph) -> Result<()> {
    let cfg = &params.config;
    if g.x.ncols() != cfg.node_dim || g.global.len() != cfg.global_dim {
        return Err(Error::Dimension(format!(
            "graph has node width {} and global width {}, model expects {} and {}",
            g.x.ncols(),
            g.global.len(),
            cfg.node_dim,
            cfg.global_dim
        )));
    }
    if g.x.nrows() == 0 {
        return Err(Error::Dimension("graph has no nodes".into()));
    }
    Ok(())
}

fn forward_impl(params: &ModelParams, g: &PreparedGraph) -> Result<(f64, Cache)> {
    check_inputs(params, g)?;
    let cfg = &params.config;
    let n_tc = cfg.tc_dims.len();

    let mut tc = Vec::new();
    let pooled = if cfg.ablate_graph {
        Array1::zeros(cfg.graph_width())
    } else {
        let mut h = g.x.clone();
        for l in 0..n_tc {
            let (out, cache) = tc_forward_cached(h.view(), &g.adj, &params.tc_layer(l))?;
            h = if l + 1 < n_tc || cfg.relu_after_last_tc { out.mapv(|v| v.max(0.0)) } else { out.clone() };
            tc.push((cache, out));
        }
        mean_pool(h.view())?
    };

    let mut global = Vec::new();
    let mut a = g.global.clone();
    for i in 0..cfg.global_dims.len() {
        let z = params.mat(&format!("global{i}.w")).dot(&a) + params.vec(&format!("global{i}.b"));
        let next = relu1(&z);
        global.push((a, z));
        a = next;
    }

    let mut head = Vec::new();
    let mut a = ndarray::concatenate![ndarray::Axis(0), pooled, a];
    let n_head = cfg.head_dims.len() + 1;
    for i in 0..n_head {
        let z = params.mat(&format!("head{i}.w")).dot(&a) + params.vec(&format!("head{i}.b"));
        let next = if i + 1 < n_head { relu1(&z) } else { z.clone() };
        head.push((a, z));
        a = next;
    }
    Ok((a[0], Cache { tc, n_nodes: g.x.nrows(), global, head }))
}

pub fn model_forward(params: &ModelParams, graph: &PreparedGraph) -> Result<f64> {
    Ok(forward_impl(params, graph)?.0)
}

fn dense_backward(grads: &mut ModelParams, prefix: &str, dz: &Array1<f64>, input: &Array1<f64>) {
    let (rows, cols) = (dz.len(), input.len());
    let block = grads.block_slice_mut(&format!("{prefix}.w"));
    for r in 0..rows {
        if dz[r] == 0.0 {
            continue;
        }
        for c in 0..cols {
            block[r * cols + c] += dz[r] * input[c];
        }
    }
    grads.add_to(&format!("{prefix}.b"), dz.iter());
}

/// Accumulate d(scale·output)/dθ into `grads`.
fn backward_impl(params: &ModelParams, g: &PreparedGraph, cache: &Cache, dy: f64, grads: &mut ModelParams) {
    let cfg = &params.config;
    let n_head = cfg.head_dims.len() + 1;

    let mut d = Array1::from_elem(1, dy);
    for i in (0..n_head).rev() {
        let (input, z) = &cache.head[i];
        let dz = if i + 1 < n_head { &d * &z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }) } else { d.clone() };
        dense_backward(grads, &format!("head{i}"), &dz, input);
        d = params.mat(&format!("head{i}.w")).t().dot(&dz);
    }
    let gw = cfg.graph_width();
    let d_pooled = d.slice(ndarray::s![..gw]).to_owned();
    let mut d_global = d.slice(ndarray::s![gw..]).to_owned();

    for i in (0..cfg.global_dims.len()).rev() {
        let (input, z) = &cache.global[i];
        let dz = &d_global * &z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        dense_backward(grads, &format!("global{i}"), &dz, input);
        if i > 0 {
            d_global = params.mat(&format!("global{i}.w")).t().dot(&dz);
        }
    }

    if cfg.ablate_graph {
        return;
    }
    let n_tc = cfg.tc_dims.len();
    let inv_n = 1.0 / cache.n_nodes as f64;
    let mut dh = Array2::from_shape_fn((cache.n_nodes, gw), |(_, c)| d_pooled[c] * inv_n);
    for l in (0..n_tc).rev() {
        let (tc_cache, out) = &cache.tc[l];
        if l + 1 < n_tc || cfg.relu_after_last_tc {
            dh.zip_mut_with(out, |d, &o| {
                if o <= 0.0 {
                    *d = 0.0
                }
            });
        }
        let (dx, tg) = tc_backward(&dh, tc_cache, &g.adj, &params.tc_layer(l));
        grads.add_to(&format!("tc{l}.w_root"), tg.w_root.iter());
        grads.add_to(&format!("tc{l}.b_root"), tg.b_root.iter());
        grads.add_to(&format!("tc{l}.w_msg"), tg.w_msg.iter());
        grads.add_to(&format!("tc{l}.b_msg"), tg.b_msg.iter());
        grads.add_to(&format!("tc{l}.w_query"), tg.w_query.iter());
        grads.add_to(&format!("tc{l}.w_key"), tg.w_key.iter());
        dh = dx;
    }
}

/// Loss of one prediction and its derivative with respect to the output.
pub fn sample_loss(mode: Mode, output: f64, target: f64, delta: f64) -> (f64, f64) {
    match mode {
        Mode::Classification => (bce_loss(output, target), bce_grad(output, target)),
        Mode::Regression => (huber_loss(output, target, delta), huber_grad(output, target, delta)),
    }
}

/// Mean loss over `batch` and its exact gradient.
///
/// Graphs are processed in fixed-size chunks (possibly in parallel); chunk
/// results are summed in chunk order so the result does not depend on the
/// thread count.
pub fn loss_and_grad(
    params: &ModelParams,
    batch: &[(&PreparedGraph, f64)],
    exec: Exec,
) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Ok((0.0, params.zeros_like()));
    }
    let cfg = &params.config;
    let scale = 1.0 / batch.len() as f64;
    let chunks: Vec<&[(&PreparedGraph, f64)]> = batch.chunks(GRAD_CHUNK).collect();
    let partial = exec.map(&chunks, |chunk| -> Result<(f64, ModelParams)> {
        let mut grads = params.zeros_like();
        let mut loss = 0.0;
        for (g, target) in chunk.iter() {
            let (y, cache) = forward_impl(params, g)?;
            let (l, dl) = sample_loss(cfg.mode, y, *target, cfg.huber_delta);
            loss += l;
            backward_impl(params, g, &cache, dl * scale, &mut grads);
        }
        Ok((loss, grads))
    });
    let mut total = 0.0;
    let mut grads = params.zeros_like();
    for p in partial {
        let (l, g) = p?;
        total += l;
        grads.data.iter_mut().zip(&g.data).for_each(|(a, b)| *a += b);
    }
    Ok((total * scale, grads))
}

/// Mean loss without gradients.
pub fn batch_loss(params: &ModelParams, batch: &[(&PreparedGraph, f64)], exec: Exec) -> Result<f64> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let cfg = &params.config;
    let losses = exec.map(batch, |(g, t)| {
        model_forward(params, g).map(|y| sample_loss(cfg.mode, y, *t, cfg.huber_delta).0)
    });
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / batch.len() as f64)
}

pub fn predict(params: &ModelParams, graphs: &[PreparedGraph], exec: Exec) -> Result<Vec<f64>> {
    exec.map(graphs, |g| model_forward(params, g)).into_iter().collect()
}

//! TransformerConv message passing.
//!
//! Query comes from the destination node, key and value from the source:
//!
//! ```text
//! α[v,u] = softmax_{u ∈ N(v)} (W_q x_v)·(W_k x_u) / √d_head
//! h_v    = W_root x_v + b_root + Σ_u α[v,u] (W_msg x_u + b_msg)
//! ```
//!
//! evaluated per head on disjoint column slices and concatenated.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Borrowed view of one layer's parameters.
#[derive(Debug, Clone)]
pub struct TcLayerParams<'a> {
    pub w_root: ArrayView2<'a, f64>,
    pub b_root: ArrayView1<'a, f64>,
    pub w_msg: ArrayView2<'a, f64>,
    pub b_msg: ArrayView1<'a, f64>,
    pub w_query: ArrayView2<'a, f64>,
    pub w_key: ArrayView2<'a, f64>,
    pub heads: usize,
}

impl TcLayerParams<'_> {
    pub fn d_in(&self) -> usize {
        self.w_root.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.w_root.nrows()
    }

    pub fn d_k(&self) -> usize {
        self.w_query.nrows()
    }

    pub fn check(&self) -> Result<()> {
        let (d_out, d_in, d_k) = (self.d_out(), self.d_in(), self.d_k());
        let ok = self.w_msg.dim() == (d_out, d_in)
            && self.w_key.dim() == (d_k, d_in)
            && self.w_query.ncols() == d_in
            && self.b_root.len() == d_out
            && self.b_msg.len() == d_out
            && self.heads > 0
            && d_out % self.heads == 0
            && d_k % self.heads == 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "inconsistent TC layer: d_in={d_in} d_out={d_out} d_k={d_k} heads={}",
                self.heads
            )))
        }
    }
}

/// In-neighbour lists in CSR form; sources keep edge-list order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    pub n_nodes: usize,
    pub offsets: Vec<usize>,
    pub sources: Vec<usize>,
}

impl Adjacency {
    pub fn from_edges(n_nodes: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut counts = vec![0usize; n_nodes + 1];
        for &(u, v) in edges {
            if u as usize >= n_nodes || v as usize >= n_nodes {
                return Err(Error::Dimension(format!("edge ({u},{v}) outside {n_nodes} nodes")));
            }
            counts[v as usize + 1] += 1;
        }
        for i in 0..n_nodes {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut sources = vec![0; edges.len()];
        for &(u, v) in edges {
            sources[fill[v as usize]] = u as usize;
            fill[v as usize] += 1;
        }
        Ok(Adjacency { n_nodes, offsets: counts, sources })
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.sources[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn n_edges(&self) -> usize {
        self.sources.len()
    }
}

/// Values kept from the forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct TcCache {
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Attention weights, edge-major then head, in CSR order.
    alpha: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TcGrads {
    pub w_root: Array2<f64>,
    pub b_root: Array1<f64>,
    pub w_msg: Array2<f64>,
    pub b_msg: Array1<f64>,
    pub w_query: Array2<f64>,
    pub w_key: Array2<f64>,
}

fn affine(x: &ArrayView2<f64>, w: &ArrayView2<f64>, b: Option<&ArrayView1<f64>>) -> Array2<f64> {
    let mut y = x.dot(&w.t());
    if let Some(b) = b {
        y += b;
    }
    y
}

pub fn tc_forward(x: ArrayView2<f64>, edges: &[(u32, u32)], layer: &TcLayerParams) -> Result<Array2<f64>> {
    let adj = Adjacency::from_edges(x.nrows(), edges)?;
    Ok(tc_forward_cached(x, &adj, layer)?.0)
}

pub(crate) fn tc_forward_cached(
    x: ArrayView2<f64>,
    adj: &Adjacency,
    p: &TcLayerParams,
) -> Result<(Array2<f64>, TcCache)> {
    p.check()?;
    if x.ncols() != p.d_in() || x.nrows() != adj.n_nodes {
        return Err(Error::Dimension(format!(
            "node features {:?} do not match layer input {} over {} nodes",
            x.dim(),
            p.d_in(),
            adj.n_nodes
        )));
    }
    let h = p.heads;
    let (dh_out, dh_k) = (p.d_out() / h, p.d_k() / h);
    let scale = 1.0 / (dh_k as f64).sqrt();

    let mut out = affine(&x, &p.w_root, Some(&p.b_root));
    let q = affine(&x, &p.w_query, None);
    let k = affine(&x, &p.w_key, None);
    let v = affine(&x, &p.w_msg, Some(&p.b_msg));
    let mut alpha = vec![0.0; adj.n_edges() * h];

    let mut scores = Vec::new();
    for node in 0..adj.n_nodes {
        let nbrs = adj.in_neighbors(node);
        if nbrs.is_empty() {
            continue;
        }
        let base = adj.offsets[node];
        for head in 0..h {
            let qs = q.slice(s![node, head * dh_k..(head + 1) * dh_k]);
            scores.clear();
            scores.extend(nbrs.iter().map(|&u| qs.dot(&k.slice(s![u, head * dh_k..(head + 1) * dh_k])) * scale));
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for sc in &mut scores {
                *sc = (*sc - max).exp();
                z += *sc;
            }
            let cols = head * dh_out..(head + 1) * dh_out;
            for (e, (&u, &w)) in nbrs.iter().zip(&scores).enumerate() {
                let a = w / z;
                alpha[(base + e) * h + head] = a;
                let mut row = out.slice_mut(s![node, cols.clone()]);
                row.scaled_add(a, &v.slice(s![u, cols.clone()]));
            }
        }
    }
    Ok((out, TcCache { x: x.to_owned(), q, k, v, alpha }))
}

/// Returns the gradient with respect to the layer input and the parameters.
pub(crate) fn tc_backward(
    dout: &Array2<f64>,
    cache: &TcCache,
    adj: &Adjacency,
    p: &TcLayerParams,
) -> (Array2<f64>, TcGrads) {
    let h = p.heads;
    let (dh_out, dh_k) = (p.d_out() / h, p.d_k() / h);
    let scale = 1.0 / (dh_k as f64).sqrt();
    let n = adj.n_nodes;

    let mut dq = Array2::<f64>::zeros((n, p.d_k()));
    let mut dk = Array2::<f64>::zeros((n, p.d_k()));
    let mut dv = Array2::<f64>::zeros((n, p.d_out()));
    let mut dalpha = Vec::new();
    for node in 0..n {
        let nbrs = adj.in_neighbors(node);
        if nbrs.is_empty() {
            continue;
        }
        let base = adj.offsets[node];
        for head in 0..h {
            let oc = head * dh_out..(head + 1) * dh_out;
            let kc = head * dh_k..(head + 1) * dh_k;
            let g = dout.slice(s![node, oc.clone()]);
            dalpha.clear();
            let mut weighted = 0.0;
            for (e, &u) in nbrs.iter().enumerate() {
                let a = cache.alpha[(base + e) * h + head];
                let da = g.dot(&cache.v.slice(s![u, oc.clone()]));
                dalpha.push(da);
                weighted += a * da;
                dv.slice_mut(s![u, oc.clone()]).scaled_add(a, &g);
            }
            for (e, &u) in nbrs.iter().enumerate() {
                let a = cache.alpha[(base + e) * h + head];
                let ds = a * (dalpha[e] - weighted) * scale;
                if ds == 0.0 {
                    continue;
                }
                let ku = cache.k.slice(s![u, kc.clone()]).to_owned();
                let qv = cache.q.slice(s![node, kc.clone()]).to_owned();
                dq.slice_mut(s![node, kc.clone()]).scaled_add(ds, &ku);
                dk.slice_mut(s![u, kc.clone()]).scaled_add(ds, &qv);
            }
        }
    }

    let x = &cache.x;
    let grads = TcGrads {
        w_root: dout.t().dot(x),
        b_root: dout.sum_axis(Axis(0)),
        w_msg: dv.t().dot(x),
        b_msg: dv.sum_axis(Axis(0)),
        w_query: dq.t().dot(x),
        w_key: dk.t().dot(x),
    };
    let mut dx = dout.dot(&p.w_root);
    dx += &dv.dot(&p.w_msg);
    dx += &dq.dot(&p.w_query);
    dx += &dk.dot(&p.w_key);
    (dx, grads)
}

pub fn mean_pool(x: ArrayView2<f64>) -> Result<Array1<f64>> {
    if x.nrows() == 0 {
        return Err(Error::Dimension("mean pooling over an empty graph".into()));
    }
    Ok(x.sum_axis(Axis(0)) / x.nrows() as f64)
}

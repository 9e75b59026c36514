//! Circuit → attributed DAG encoding.
//!
//! Each wire is a path `INPUT → gate → … → gate → OUTPUT`; CNOT nodes sit on
//! two wires. A node's feature vector is
//!
//! ```text
//! [ gate type one-hot (7) | acted qubits (d_q) | hardware block (0 or 7) ]
//! ```
//!
//! with the gate types ordered INPUT, OUTPUT, CNOT, H, RX, RY, RZ. Rotation
//! angles do not enter node features; they are binned into the 152-entry
//! global vector `[CNOT, H, RX bins ×50, RY bins ×50, RZ bins ×50]`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::circuit::{canonicalize, Circuit, GateKind};
use crate::error::{Error, Result};

pub const GATE_TYPES: [GateKind; 7] = [
    GateKind::INPUT,
    GateKind::OUTPUT,
    GateKind::CNOT,
    GateKind::H,
    GateKind::RX,
    GateKind::RY,
    GateKind::RZ,
];
pub const D_GATE: usize = GATE_TYPES.len();
pub const D_HARDWARE: usize = 7;
pub const ANGLE_BINS: usize = 50;
pub const GLOBAL_DIM: usize = 2 + 3 * ANGLE_BINS;

pub fn gate_type_index(kind: GateKind) -> Option<usize> {
    GATE_TYPES.iter().position(|&k| k == kind)
}

/// Bin of `theta` after reduction to [0, 2π); values on a bin edge go to the
/// upper bin.
pub fn angle_bin(theta: f64) -> Result<usize> {
    if !theta.is_finite() {
        return Err(Error::Validation(format!("non-finite angle {theta}")));
    }
    let mut t = theta.rem_euclid(TAU);
    if t >= TAU {
        t = 0.0;
    }
    let bin = (t * ANGLE_BINS as f64 / TAU).floor() as usize;
    Ok(bin.min(ANGLE_BINS - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DagNode {
    pub kind: GateKind,
    /// First acted qubit; CNOT control.
    pub qubit_a: usize,
    /// CNOT target.
    pub qubit_b: Option<usize>,
    /// Index into the circuit's gate list for gate nodes.
    pub gate_index: Option<usize>,
}

impl DagNode {
    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.qubit_a).chain(self.qubit_b)
    }
}

/// Nodes ordered as INPUTs by qubit, gates by position, OUTPUTs by qubit;
/// edges follow each wire forward in time.
pub fn build_dag(circuit: &Circuit) -> Result<(Vec<DagNode>, Vec<(usize, usize)>)> {
    let n = circuit.n_qubits;
    let g = circuit.gates.len();
    let mut nodes = Vec::with_capacity(g + 2 * n);
    let mut edges = Vec::with_capacity(g * 2 + n);
    nodes.extend((0..n).map(|q| DagNode { kind: GateKind::INPUT, qubit_a: q, qubit_b: None, gate_index: None }));
    let mut last: Vec<usize> = (0..n).collect();
    for (i, gate) in circuit.gates.iter().enumerate() {
        if gate_type_index(gate.kind).is_none() {
            return Err(Error::Validation(format!(
                "gate {i}: {} is not canonical; canonicalize before encoding",
                gate.kind
            )));
        }
        if let Some(msg) = crate::circuit::validate_gate(gate, n).into_iter().next() {
            return Err(Error::Validation(format!("gate {i}: {msg}")));
        }
        let id = nodes.len();
        nodes.push(DagNode {
            kind: gate.kind,
            qubit_a: gate.qubits[0],
            qubit_b: gate.qubits.get(1).copied(),
            gate_index: Some(i),
        });
        for &q in &gate.qubits {
            edges.push((last[q], id));
            last[q] = id;
        }
    }
    for (q, &prev) in last.iter().enumerate() {
        let id = nodes.len();
        nodes.push(DagNode { kind: GateKind::OUTPUT, qubit_a: q, qubit_b: None, gate_index: None });
        edges.push((prev, id));
    }
    Ok((nodes, edges))
}

/// Gate-count vector with rotation angles binned per axis.
pub fn global_features(circuit: &Circuit) -> Result<Vec<f64>> {
    let mut v = vec![0.0; GLOBAL_DIM];
    for (i, gate) in circuit.gates.iter().enumerate() {
        let slot = match gate.kind {
            GateKind::CNOT => 0,
            GateKind::H => 1,
            GateKind::RX | GateKind::RY | GateKind::RZ => {
                let axis = match gate.kind {
                    GateKind::RX => 0,
                    GateKind::RY => 1,
                    _ => 2,
                };
                let angle = gate
                    .angle
                    .ok_or_else(|| Error::Validation(format!("gate {i}: missing angle")))?;
                2 + axis * ANGLE_BINS + angle_bin(angle)?
            }
            other => {
                return Err(Error::Validation(format!("gate {i}: {other} has no global feature slot")))
            }
        };
        v[slot] += 1.0;
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitCalibration {
    pub t1_us: f64,
    pub t2_us: f64,
    pub readout: f64,
}

/// Backend calibration snapshot used for the hardware block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub qubits: Vec<QubitCalibration>,
    pub gate_errors: BTreeMap<String, f64>,
}

impl CalibrationTable {
    pub fn from_json(text: &str) -> Result<Self> {
        let table: CalibrationTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits.is_empty() {
            return Err(Error::Validation("calibration lists no qubits".into()));
        }
        for (q, c) in self.qubits.iter().enumerate() {
            if !(c.t1_us > 0.0 && c.t2_us > 0.0) {
                return Err(Error::Validation(format!("qubit {q}: T1/T2 must be positive")));
            }
            if !(0.0..=1.0).contains(&c.readout) {
                return Err(Error::Validation(format!("qubit {q}: readout error outside [0, 1]")));
            }
        }
        for (k, &e) in &self.gate_errors {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::Validation(format!("gate error for {k} outside [0, 1]")));
            }
        }
        Ok(())
    }

    fn max_t1(&self) -> f64 {
        self.qubits.iter().map(|c| c.t1_us).fold(0.0, f64::max)
    }

    /// (T1, T2, readout) of qubit `q`, times divided by the largest T1.
    fn triple(&self, q: usize) -> Result<[f64; 3]> {
        let c = self
            .qubits
            .get(q)
            .ok_or_else(|| Error::Validation(format!("no calibration entry for qubit {q}")))?;
        let scale = self.max_t1();
        Ok([c.t1_us / scale, c.t2_us / scale, c.readout])
    }

    fn gate_error(&self, kind: GateKind) -> Result<f64> {
        match kind {
            GateKind::INPUT | GateKind::OUTPUT => Ok(0.0),
            _ => self
                .gate_errors
                .get(kind.name())
                .copied()
                .ok_or_else(|| Error::Validation(format!("no gate error for {kind}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EncodeConfig {
    pub d_q: usize,
    pub calibration: Option<CalibrationTable>,
    /// Append a 50-way angle-bin one-hot to rotation nodes.
    pub angle_onehot: bool,
}

impl EncodeConfig {
    pub fn new(d_q: usize) -> Self {
        EncodeConfig { d_q, calibration: None, angle_onehot: false }
    }

    pub fn node_dim(&self) -> usize {
        D_GATE
            + self.d_q
            + if self.calibration.is_some() { D_HARDWARE } else { 0 }
            + if self.angle_onehot { ANGLE_BINS } else { 0 }
    }
}

/// Feature vector of one DAG node.
pub fn node_features(node: &DagNode, d_q: usize, calibration: Option<&CalibrationTable>) -> Result<Vec<f64>> {
    let d_h = if calibration.is_some() { D_HARDWARE } else { 0 };
    let mut x = vec![0.0; D_GATE + d_q + d_h];
    let t = gate_type_index(node.kind)
        .ok_or_else(|| Error::Validation(format!("{} has no node type", node.kind)))?;
    x[t] = 1.0;
    for q in node.qubits() {
        if q >= d_q {
            return Err(Error::Validation(format!("qubit {q} does not fit d_q = {d_q}")));
        }
        x[D_GATE + q] = 1.0;
    }
    if let Some(cal) = calibration {
        let base = D_GATE + d_q;
        x[base..base + 3].copy_from_slice(&cal.triple(node.qubit_a)?);
        if let Some(b) = node.qubit_b {
            x[base + 3..base + 6].copy_from_slice(&cal.triple(b)?);
        }
        x[base + 6] = cal.gate_error(node.kind)?;
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGraph {
    pub id: String,
    pub n_qubits: usize,
    pub node_features: Array2<f64>,
    pub edges: Vec<(u32, u32)>,
    pub global_features: Vec<f64>,
    pub d_q: usize,
    pub d_h: usize,
}

impl CircuitGraph {
    pub fn n_nodes(&self) -> usize {
        self.node_features.nrows()
    }

    pub fn node_dim(&self) -> usize {
        self.node_features.ncols()
    }
}

pub fn encode(circuit: &Circuit, cfg: &EncodeConfig) -> Result<CircuitGraph> {
    if circuit.n_qubits > cfg.d_q {
        return Err(Error::Validation(format!(
            "{}: {} qubits exceed d_q = {}",
            circuit.meta.id, circuit.n_qubits, cfg.d_q
        )));
    }
    let canonical = canonicalize(circuit, false);
    let (nodes, edges) = build_dag(&canonical)?;
    let dim = cfg.node_dim();
    let mut x = Array2::zeros((nodes.len(), dim));
    for (i, node) in nodes.iter().enumerate() {
        let f = node_features(node, cfg.d_q, cfg.calibration.as_ref())?;
        let mut row = x.row_mut(i);
        for (dst, v) in row.iter_mut().zip(&f) {
            *dst = *v;
        }
        if cfg.angle_onehot {
            if let Some(angle) = node.gate_index.and_then(|g| canonical.gates[g].angle) {
                row[f.len() + angle_bin(angle)?] = 1.0;
            }
        }
    }
    Ok(CircuitGraph {
        id: circuit.meta.id.clone(),
        n_qubits: circuit.n_qubits,
        node_features: x,
        edges: edges.into_iter().map(|(a, b)| (a as u32, b as u32)).collect(),
        global_features: global_features(&canonical)?,
        d_q: cfg.d_q,
        d_h: if cfg.calibration.is_some() { D_HARDWARE } else { 0 },
    })
}

/// Kahn's algorithm; true when the edge list has no directed cycle.
pub fn is_acyclic(n_nodes: usize, edges: &[(u32, u32)]) -> bool {
    let mut indeg = vec![0usize; n_nodes];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for &(a, b) in edges {
        indeg[b as usize] += 1;
        out[a as usize].push(b as usize);
    }
    let mut stack: Vec<usize> = (0..n_nodes).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for &w in &out[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                stack.push(w);
            }
        }
    }
    seen == n_nodes
}

const CACHE_MAGIC: &[u8; 8] = b"SGNNGRPH";
const CACHE_VERSION: u32 = 1;

/// Binary graph cache.
///
/// Layout (little-endian): magic `SGNNGRPH`, `u32` version, `u64` record
/// count, then per record: `u32` id length + UTF-8 id, `u32` n_qubits,
/// `u32` d_q, `u32` d_h, `u32` nodes, `u32` node dim, nodes×dim `f64`
/// row-major, `u32` edge count + `(u32, u32)` pairs, `u32` global length +
/// `f64` entries.
pub fn write_graph_cache<W: Write>(mut out: W, graphs: &[CircuitGraph]) -> Result<()> {
    out.write_all(CACHE_MAGIC)?;
    out.write_u32::<LittleEndian>(CACHE_VERSION)?;
    out.write_u64::<LittleEndian>(graphs.len() as u64)?;
    for g in graphs {
        out.write_u32::<LittleEndian>(g.id.len() as u32)?;
        out.write_all(g.id.as_bytes())?;
        for v in [g.n_qubits, g.d_q, g.d_h, g.n_nodes(), g.node_dim()] {
            out.write_u32::<LittleEndian>(v as u32)?;
        }
        for v in g.node_features.iter() {
            out.write_f64::<LittleEndian>(*v)?;
        }
        out.write_u32::<LittleEndian>(g.edges.len() as u32)?;
        for &(a, b) in &g.edges {
            out.write_u32::<LittleEndian>(a)?;
            out.write_u32::<LittleEndian>(b)?;
        }
        out.write_u32::<LittleEndian>(g.global_features.len() as u32)?;
        for v in &g.global_features {
            out.write_f64::<LittleEndian>(*v)?;
        }
    }
    Ok(())
}

pub fn read_graph_cache<R: Read>(mut input: R) -> Result<Vec<CircuitGraph>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Format("not a graph cache (bad magic)".into()));
    }
    let version = input.read_u32::<LittleEndian>()?;
    if version != CACHE_VERSION {
        return Err(Error::Format(format!("unsupported graph cache version {version}")));
    }
    let count = input.read_u64::<LittleEndian>()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let len = input.read_u32::<LittleEndian>()? as usize;
        let mut id = vec![0u8; len];
        input.read_exact(&mut id)?;
        let id = String::from_utf8(id).map_err(|e| Error::Format(e.to_string()))?;
        let mut dims = [0usize; 5];
        for d in &mut dims {
            *d = input.read_u32::<LittleEndian>()? as usize;
        }
        let [n_qubits, d_q, d_h, rows, cols] = dims;
        let mut data = vec![0.0; rows * cols];
        input.read_f64_into::<LittleEndian>(&mut data)?;
        let node_features =
            Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Format(e.to_string()))?;
        let n_edges = input.read_u32::<LittleEndian>()? as usize;
        let mut edges = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            let a = input.read_u32::<LittleEndian>()?;
            let b = input.read_u32::<LittleEndian>()?;
            if a as usize >= rows || b as usize >= rows {
                return Err(Error::Format(format!("{id}: edge ({a}, {b}) out of range")));
            }
            edges.push((a, b));
        }
        let glen = input.read_u32::<LittleEndian>()? as usize;
        let mut global_features = vec![0.0; glen];
        input.read_f64_into::<LittleEndian>(&mut global_features)?;
        out.push(CircuitGraph { id, n_qubits, node_features, edges, global_features, d_q, d_h });
    }
    Ok(out)
}

//! Seed-reproducible generation of the labelled circuit families.
//!
//! * PS: product states from single-qubit rotations, balanced between
//!   stabilizer (label 0) and magic (label 1) circuits.
//! * CS: PS circuits extended by 1..=25 random Clifford gates.
//! * ES: PS circuits with 1..=20 CNOTs spliced in.
//! * RQC: random circuits over {CNOT, RX, RY, RZ}.
//! * TIM: Trotterised transverse-field Ising evolution.
//!
//! Every record draws from its own RNG, seeded from
//! `(master_seed, family, cell, index)`, so any subset of cells regenerates
//! byte-identically regardless of order or thread count.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    canonicalize, is_clifford_angle, Circuit, CircuitMeta, Family, Gate, GateKind, TrotterParams,
};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::sre::{sre_full, sre_product, SreMethod, SreResult, DEFAULT_FULL_CAP};
use crate::statevector::run;

pub type Rng64 = ChaCha8Rng;

/// Magic PS circuits must carry at least this much M₂.
pub const MAGIC_MIN_M2: f64 = 1e-9;

const ES_RETRIES: usize = 10_000;
const PS_RETRIES: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub circuit: Circuit,
    pub stab_label: Option<u8>,
    pub m2: Option<SreResult>,
    pub cls_sre_label: Option<u8>,
}

impl DatasetRecord {
    pub fn unlabeled(circuit: Circuit) -> Self {
        DatasetRecord { circuit, stab_label: None, m2: None, cls_sre_label: None }
    }

    pub fn id(&self) -> &str {
        &self.circuit.meta.id
    }

    pub fn m2_value(&self) -> Option<f64> {
        self.m2.map(|r| r.m2)
    }

    /// Label-consistency violations of this record.
    pub fn check(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(m2) = self.m2_value() {
            match self.stab_label {
                Some(0) if m2 >= MAGIC_MIN_M2 => {
                    out.push(format!("{}: stabilizer label with m2 = {m2}", self.id()))
                }
                Some(1) if m2 <= 0.0 => {
                    out.push(format!("{}: magic label with m2 = {m2}", self.id()))
                }
                _ => {}
            }
        }
        for label in [self.stab_label, self.cls_sre_label].into_iter().flatten() {
            if label > 1 {
                out.push(format!("{}: label {label} is not binary", self.id()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsTailMode {
    /// One 25-gate tail per parent; depth k keeps its first k gates.
    #[default]
    Cumulative,
    /// A fresh tail of length k for every depth.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub master_seed: u64,
    pub min_qubits: usize,
    pub max_qubits: usize,
    /// Records per cell; a PS cell is one (qubits, label) pair.
    pub per_cell: usize,
    pub ps_gates: (usize, usize),
    pub r_m: (f64, f64),
    pub cs_max_depth: usize,
    pub cs_tail: CsTailMode,
    pub es_cnots: (usize, usize),
    pub rqc_gates: (usize, usize),
    pub tim_steps: (usize, usize),
    pub tim_theta: (f64, f64),
    pub tim_phi: (f64, f64),
    pub full_cap: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            master_seed: 0,
            min_qubits: 2,
            max_qubits: 6,
            per_cell: 100,
            ps_gates: (10, 100),
            r_m: (0.3, 1.0),
            cs_max_depth: 25,
            cs_tail: CsTailMode::Cumulative,
            es_cnots: (1, 20),
            rqc_gates: (0, 100),
            tim_steps: (1, 5),
            tim_theta: (0.0, PI),
            tim_phi: (0.0, PI),
            full_cap: DEFAULT_FULL_CAP,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{what} range is empty or invalid")));
        if self.min_qubits == 0 || self.min_qubits > self.max_qubits {
            return bad("qubit");
        }
        if self.per_cell == 0 {
            return Err(Error::Config("per_cell must be positive".into()));
        }
        if self.ps_gates.0 > self.ps_gates.1 || self.ps_gates.1 < 2 {
            return bad("PS gate count");
        }
        if !(0.0..=1.0).contains(&self.r_m.0) || self.r_m.0 > self.r_m.1 || self.r_m.1 > 1.0 || self.r_m.1 <= 0.0 {
            return bad("r_M");
        }
        if self.cs_max_depth == 0 || self.cs_max_depth > 25 {
            return bad("CS depth");
        }
        if self.es_cnots.0 == 0 || self.es_cnots.0 > self.es_cnots.1 {
            return bad("ES CNOT");
        }
        if self.rqc_gates.0 > self.rqc_gates.1 {
            return bad("RQC gate count");
        }
        if self.tim_steps.0 == 0 || self.tim_steps.0 > self.tim_steps.1 {
            return bad("Trotter step");
        }
        if self.tim_theta.0 > self.tim_theta.1 || self.tim_phi.0 > self.tim_phi.1 {
            return bad("TIM angle");
        }
        Ok(())
    }
}

/// A generation cell: qubit count, plus the class for PS-derived families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub n_qubits: usize,
    pub label: Option<u8>,
}

impl Cell {
    fn key(&self) -> u64 {
        (self.n_qubits as u64) << 8 | self.label.map_or(0xff, u64::from)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one record, stable across platforms and releases.
pub fn record_seed(master_seed: u64, family: Family, cell: Cell, index: usize) -> u64 {
    let mut h = splitmix64(master_seed);
    for word in [family as u64 + 1, cell.key(), index as u64] {
        h = splitmix64(h ^ word);
    }
    h
}

pub fn record_rng(master_seed: u64, family: Family, cell: Cell, index: usize) -> Rng64 {
    Rng64::seed_from_u64(record_seed(master_seed, family, cell, index))
}

/// One gate from the stabilizer set {RX, RY, RZ}×{±π/2, ±π, ±3π/2} ∪ {H, S},
/// in canonical rotation form. H expands to two gates.
fn clifford_ps_gate(rng: &mut Rng64, q: usize, room: usize) -> Vec<Gate> {
    const ANGLES: [f64; 6] = [FRAC_PI_2, -FRAC_PI_2, PI, -PI, 3.0 * FRAC_PI_2, -3.0 * FRAC_PI_2];
    const AXES: [GateKind; 3] = [GateKind::RX, GateKind::RY, GateKind::RZ];
    loop {
        let pick = rng.gen_range(0..ANGLES.len() * AXES.len() + 2);
        let native = match pick {
            18 => Gate::h(q),
            19 => Gate::s(q),
            _ => Gate::rotation(AXES[pick / ANGLES.len()], q, ANGLES[pick % ANGLES.len()]),
        };
        let expanded = canonicalize(&Circuit::anonymous(q + 1, vec![native]), true).gates;
        if expanded.len() <= room {
            return expanded;
        }
    }
}

/// Rotation about a random axis by a non-Clifford angle in (0, 2π).
fn magic_gate(rng: &mut Rng64, q: usize) -> Gate {
    const AXES: [GateKind; 3] = [GateKind::RX, GateKind::RY, GateKind::RZ];
    let kind = AXES[rng.gen_range(0..3)];
    loop {
        let theta: f64 = rng.gen_range(0.0..TAU);
        if theta > 0.0 && !is_clifford_angle(theta, 1e-12) {
            return Gate::rotation(kind, q, theta);
        }
    }
}

/// A product-state circuit of the requested class.
///
/// The canonical gate list holds exactly G ~ U[ps_gates] gates. Magic circuits
/// draw each gate as a random-angle rotation with probability r_M and are
/// resampled until M₂ > [`MAGIC_MIN_M2`].
pub fn gen_ps_circuit(id: &str, n: usize, label: u8, rng: &mut Rng64, cfg: &GenConfig) -> Result<DatasetRecord> {
    if n == 0 {
        return Err(Error::Precondition("PS circuits need at least one qubit".into()));
    }
    let target = rng.gen_range(cfg.ps_gates.0..=cfg.ps_gates.1);
    let r_m = (label == 1).then(|| rng.gen_range(cfg.r_m.0..=cfg.r_m.1));
    for _ in 0..PS_RETRIES {
        let mut gates = Vec::with_capacity(target);
        let mut magic = 0usize;
        while gates.len() < target {
            let q = rng.gen_range(0..n);
            if r_m.is_some_and(|p| rng.gen_bool(p)) {
                gates.push(magic_gate(rng, q));
                magic += 1;
            } else {
                gates.extend(clifford_ps_gate(rng, q, target - gates.len()));
            }
        }
        let mut meta = CircuitMeta::new(id, Family::PS);
        meta.r_m = r_m;
        let circuit = Circuit::new(n, gates, meta);
        let m2 = sre_product(&circuit)?;
        if label == 1 && (magic == 0 || m2 <= MAGIC_MIN_M2) {
            continue;
        }
        return Ok(DatasetRecord {
            circuit,
            stab_label: Some(label),
            m2: Some(SreResult { m2, method: SreMethod::Product, n_qubits: n }),
            cls_sre_label: None,
        });
    }
    Err(Error::Precondition(format!("could not draw a magic PS circuit for {id}")))
}

fn random_clifford_gate(rng: &mut Rng64, n: usize) -> Gate {
    let choices = if n >= 2 { 3 } else { 2 };
    match rng.gen_range(0..choices) {
        0 => Gate::h(rng.gen_range(0..n)),
        1 => Gate::s(rng.gen_range(0..n)),
        _ => {
            let (c, t) = random_pair(rng, n);
            Gate::cnot(c, t)
        }
    }
}

fn random_pair(rng: &mut Rng64, n: usize) -> (usize, usize) {
    let c = rng.gen_range(0..n);
    let mut t = rng.gen_range(0..n - 1);
    if t >= c {
        t += 1;
    }
    (c, t)
}

fn require_ps(record: &DatasetRecord) -> Result<()> {
    if record.circuit.meta.family != Family::PS {
        return Err(Error::Precondition(format!(
            "{} is a {} record, expected PS",
            record.id(),
            record.circuit.meta.family
        )));
    }
    Ok(())
}

/// Clifford-evolved copies of a PS record at depths 1..=cs_max_depth.
pub fn derive_cs(record: &DatasetRecord, rng: &mut Rng64, cfg: &GenConfig) -> Result<Vec<DatasetRecord>> {
    require_ps(record)?;
    let n = record.circuit.n_qubits;
    let depth = cfg.cs_max_depth;
    let shared: Vec<Gate> = (0..depth).map(|_| random_clifford_gate(rng, n)).collect();
    let m2 = record.m2.map(|r| SreResult { m2: r.m2, method: SreMethod::Inherited, n_qubits: n });
    let mut out = Vec::with_capacity(depth);
    for k in 1..=depth {
        let tail: Vec<Gate> = match cfg.cs_tail {
            CsTailMode::Cumulative => shared[..k].to_vec(),
            CsTailMode::Independent => (0..k).map(|_| random_clifford_gate(rng, n)).collect(),
        };
        let mut gates = record.circuit.gates.clone();
        gates.extend(tail);
        let mut meta = CircuitMeta::new(format!("{}-cs{k}", record.id()), Family::CS);
        meta.parent_id = Some(record.id().to_string());
        meta.clifford_depth = Some(k);
        meta.r_m = record.circuit.meta.r_m;
        out.push(DatasetRecord {
            circuit: Circuit::new(n, gates, meta),
            stab_label: record.stab_label,
            m2,
            cls_sre_label: record.cls_sre_label,
        });
    }
    Ok(out)
}

/// A PS record with CNOTs spliced in at random positions. A CNOT control must
/// already carry a gate before the insertion point.
pub fn derive_es(record: &DatasetRecord, rng: &mut Rng64, cfg: &GenConfig) -> Result<DatasetRecord> {
    require_ps(record)?;
    let n = record.circuit.n_qubits;
    if n < 2 {
        return Err(Error::Precondition(format!("{}: ES needs at least 2 qubits", record.id())));
    }
    let k = rng.gen_range(cfg.es_cnots.0..=cfg.es_cnots.1);
    let mut gates = record.circuit.gates.clone();
    for _ in 0..k {
        let mut placed = false;
        for _ in 0..ES_RETRIES {
            let pos = rng.gen_range(0..=gates.len());
            let mut touched = vec![false; n];
            for g in &gates[..pos] {
                for &q in &g.qubits {
                    touched[q] = true;
                }
            }
            if !touched.iter().any(|&t| t) {
                continue;
            }
            let (c, t) = loop {
                let (c, t) = random_pair(rng, n);
                if touched[c] {
                    break (c, t);
                }
            };
            gates.insert(pos, Gate::cnot(c, t));
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Precondition(format!("{}: no eligible CNOT placement", record.id())));
        }
    }
    let mut meta = CircuitMeta::new(format!("{}-es", record.id()), Family::ES);
    meta.parent_id = Some(record.id().to_string());
    meta.r_m = record.circuit.meta.r_m;
    let circuit = Circuit::new(n, gates, meta);
    let m2 = if n <= cfg.full_cap {
        Some(SreResult { m2: sre_full(&run(&circuit)?, cfg.full_cap)?, method: SreMethod::Full, n_qubits: n })
    } else {
        None
    };
    Ok(DatasetRecord { circuit, stab_label: record.stab_label, m2, cls_sre_label: None })
}

/// Random circuit over {CNOT, RX, RY, RZ} labelled by full enumeration.
pub fn gen_rqc(id: &str, n: usize, rng: &mut Rng64, cfg: &GenConfig) -> Result<DatasetRecord> {
    if n < 2 {
        return Err(Error::Precondition("RQC circuits need at least 2 qubits".into()));
    }
    let count = rng.gen_range(cfg.rqc_gates.0..=cfg.rqc_gates.1);
    let mut gates = Vec::with_capacity(count);
    for _ in 0..count {
        let gate = match rng.gen_range(0..4) {
            0 => {
                let (c, t) = random_pair(rng, n);
                Gate::cnot(c, t)
            }
            axis => {
                let kind = [GateKind::RX, GateKind::RY, GateKind::RZ][axis - 1];
                Gate::rotation(kind, rng.gen_range(0..n), rng.gen_range(0.0..TAU))
            }
        };
        gates.push(gate);
    }
    let circuit = Circuit::new(n, gates, CircuitMeta::new(id, Family::RQC));
    let m2 = sre_full(&run(&circuit)?, cfg.full_cap)?;
    Ok(DatasetRecord {
        circuit,
        stab_label: None,
        m2: Some(SreResult { m2, method: SreMethod::Full, n_qubits: n }),
        cls_sre_label: None,
    })
}

/// First-order Trotter circuit of the 1-D transverse-field Ising model.
///
/// Each step applies CNOT(i,i+1)·RZ(2θ)ᵢ₊₁·CNOT(i,i+1) along the chain and
/// then RX(2φ) on every qubit. Δt is taken as 1, so J = θ and h = φ.
pub fn gen_tim(n: usize, steps: usize, theta: f64, phi: f64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::Precondition("TIM circuits need at least 2 qubits".into()));
    }
    if !(1..=5).contains(&steps) {
        return Err(Error::Precondition(format!("Trotter steps {steps} outside [1, 5]")));
    }
    let mut gates = Vec::with_capacity(steps * (4 * n - 3));
    for _ in 0..steps {
        for i in 0..n - 1 {
            gates.push(Gate::cnot(i, i + 1));
            gates.push(Gate::rz(i + 1, 2.0 * theta));
            gates.push(Gate::cnot(i, i + 1));
        }
        gates.extend((0..n).map(|q| Gate::rx(q, 2.0 * phi)));
    }
    let mut meta = CircuitMeta::new(format!("TIM-n{n}-t{steps}"), Family::TIM);
    meta.trotter = Some(TrotterParams { steps, theta, phi, j: theta, h: phi });
    Ok(Circuit::new(n, gates, meta))
}

fn gen_tim_record(id: &str, n: usize, rng: &mut Rng64, cfg: &GenConfig) -> Result<DatasetRecord> {
    let steps = rng.gen_range(cfg.tim_steps.0..=cfg.tim_steps.1);
    let theta = rng.gen_range(cfg.tim_theta.0..=cfg.tim_theta.1);
    let phi = rng.gen_range(cfg.tim_phi.0..=cfg.tim_phi.1);
    let mut circuit = gen_tim(n, steps, theta, phi)?;
    circuit.meta.id = id.to_string();
    let m2 = sre_full(&run(&circuit)?, cfg.full_cap)?;
    Ok(DatasetRecord {
        circuit,
        stab_label: None,
        m2: Some(SreResult { m2, method: SreMethod::Full, n_qubits: n }),
        cls_sre_label: None,
    })
}

/// All cells of a family under `cfg`, in output order.
pub fn cells(family: Family, cfg: &GenConfig) -> Vec<Cell> {
    let lo = match family {
        Family::ES | Family::RQC | Family::TIM => cfg.min_qubits.max(2),
        _ => cfg.min_qubits,
    };
    let mut out = Vec::new();
    for n in lo..=cfg.max_qubits {
        match family {
            Family::PS | Family::CS | Family::ES => {
                out.extend([0, 1].map(|label| Cell { n_qubits: n, label: Some(label) }))
            }
            Family::RQC | Family::TIM => out.push(Cell { n_qubits: n, label: None }),
        }
    }
    out
}

fn ps_id(cell: Cell, index: usize) -> String {
    format!("PS-n{}-l{}-{index}", cell.n_qubits, cell.label.unwrap_or(0))
}

fn generate_one(family: Family, cfg: &GenConfig, cell: Cell, index: usize) -> Result<Vec<DatasetRecord>> {
    let seed = cfg.master_seed;
    let parent = || -> Result<DatasetRecord> {
        let label = cell.label.ok_or_else(|| Error::Config(format!("{family} cells need a label")))?;
        let mut rng = record_rng(seed, Family::PS, cell, index);
        gen_ps_circuit(&ps_id(cell, index), cell.n_qubits, label, &mut rng, cfg)
    };
    let mut rng = record_rng(seed, family, cell, index);
    match family {
        Family::PS => Ok(vec![parent()?]),
        Family::CS => derive_cs(&parent()?, &mut rng, cfg),
        Family::ES => Ok(vec![derive_es(&parent()?, &mut rng, cfg)?]),
        Family::RQC => {
            let id = format!("RQC-n{}-{index}", cell.n_qubits);
            Ok(vec![gen_rqc(&id, cell.n_qubits, &mut rng, cfg)?])
        }
        Family::TIM => {
            let id = format!("TIM-n{}-{index}", cell.n_qubits);
            Ok(vec![gen_tim_record(&id, cell.n_qubits, &mut rng, cfg)?])
        }
    }
}

/// Generate the given cells, `per_cell` parents each, in cell/index order.
pub fn generate_cells(family: Family, cfg: &GenConfig, cells: &[Cell], exec: Exec) -> Result<Vec<DatasetRecord>> {
    cfg.validate()?;
    let jobs: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|&c| (0..cfg.per_cell).map(move |i| (c, i)))
        .collect();
    let batches = exec.map(&jobs, |&(cell, index)| generate_one(family, cfg, cell, index));
    let mut out = Vec::new();
    for batch in batches {
        out.extend(batch?);
    }
    Ok(out)
}

pub fn generate(family: Family, cfg: &GenConfig, exec: Exec) -> Result<Vec<DatasetRecord>> {
    generate_cells(family, cfg, &cells(family, cfg), exec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSplit {
    pub threshold_m2: f64,
    pub n_low: usize,
    pub n_high: usize,
    /// True when ties at the median unbalance the classes.
    pub degenerate: bool,
}

/// Drop stabilizer records, then label the rest by M₂ against the median:
/// 1 iff M₂ > median. Even counts use the midpoint of the central pair.
pub fn sre_threshold_labels(records: &[DatasetRecord]) -> Result<(ThresholdSplit, Vec<DatasetRecord>)> {
    let mut kept: Vec<DatasetRecord> =
        records.iter().filter(|r| r.stab_label != Some(0)).cloned().collect();
    if kept.is_empty() {
        return Err(Error::Precondition("no non-stabilizer records to threshold".into()));
    }
    let mut values = Vec::with_capacity(kept.len());
    for r in &kept {
        values.push(r.m2_value().ok_or_else(|| {
            Error::Precondition(format!("{} has no m2 label to threshold", r.id()))
        })?);
    }
    let threshold = median(&values);
    let mut n_high = 0;
    for r in &mut kept {
        let high = r.m2_value().unwrap_or(0.0) > threshold;
        n_high += usize::from(high);
        r.cls_sre_label = Some(u8::from(high));
    }
    let n_low = kept.len() - n_high;
    let degenerate = n_low.abs_diff(n_high) > 1;
    if degenerate {
        log::warn!("median threshold {threshold} is degenerate: {n_low} low vs {n_high} high");
    }
    Ok((ThresholdSplit { threshold_m2: threshold, n_low, n_high, degenerate }, kept))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n_qubits: usize,
    pub label: Option<u8>,
    pub count: usize,
    pub m2_min: Option<f64>,
    pub m2_median: Option<f64>,
    pub m2_max: Option<f64>,
}

/// Sidecar describing how a dataset file was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub family: Family,
    pub master_seed: u64,
    pub config: GenConfig,
    pub cells: Vec<CellSummary>,
    pub total: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdSplit>,
    pub format_version: u32,
}

impl DatasetManifest {
    pub fn build(family: Family, cfg: &GenConfig, records: &[DatasetRecord], threshold: Option<ThresholdSplit>) -> Self {
        let mut groups: BTreeMap<Cell, Vec<Option<f64>>> = BTreeMap::new();
        for r in records {
            let cell = Cell { n_qubits: r.circuit.n_qubits, label: r.stab_label };
            groups.entry(cell).or_default().push(r.m2_value());
        }
        let cells = groups
            .into_iter()
            .map(|(cell, m2s)| {
                let known: Vec<f64> = m2s.iter().flatten().copied().collect();
                let (lo, med, hi) = if known.is_empty() {
                    (None, None, None)
                } else {
                    (
                        known.iter().copied().reduce(f64::min),
                        Some(median(&known)),
                        known.iter().copied().reduce(f64::max),
                    )
                };
                CellSummary {
                    n_qubits: cell.n_qubits,
                    label: cell.label,
                    count: m2s.len(),
                    m2_min: lo,
                    m2_median: med,
                    m2_max: hi,
                }
            })
            .collect();
        DatasetManifest {
            family,
            master_seed: cfg.master_seed,
            config: cfg.clone(),
            cells,
            total: records.len(),
            threshold,
            format_version: 1,
        }
    }
}

/// Shuffle helper with an explicit seed, used by splits and training.
pub fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    items.shuffle(&mut Rng64::seed_from_u64(seed));
}

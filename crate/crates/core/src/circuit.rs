//! Circuit intermediate representation.
//!
//! Circuits are ordered gate lists over `{H, S, RX, RY, RZ, CNOT}` acting on
//! `n_qubits` wires initialised to `|0…0⟩`. Qubit 0 is the least-significant
//! bit of a computational-basis index everywhere in this crate.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    S,
    RX,
    RY,
    RZ,
    CNOT,
    /// Wire start; only ever produced by graph construction.
    INPUT,
    /// Wire end (measurement); only ever produced by graph construction.
    OUTPUT,
}

impl GateKind {
    pub const CIRCUIT_KINDS: [GateKind; 6] = [
        GateKind::H,
        GateKind::S,
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::CNOT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CNOT => "CNOT",
            GateKind::INPUT => "INPUT",
            GateKind::OUTPUT => "OUTPUT",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::CNOT => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "H" => GateKind::H,
            "S" => GateKind::S,
            "RX" => GateKind::RX,
            "RY" => GateKind::RY,
            "RZ" => GateKind::RZ,
            "CNOT" => GateKind::CNOT,
            "INPUT" => GateKind::INPUT,
            "OUTPUT" => GateKind::OUTPUT,
            other => return Err(Error::Validation(format!("unknown gate kind `{other}`"))),
        })
    }
}

/// A gate application. Fields are public so malformed gates can be
/// represented and reported by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    /// `[q]` for single-qubit gates, `[control, target]` for CNOT.
    pub qubits: Vec<usize>,
    /// Radians, present iff `kind` is a rotation. Stored unnormalised.
    pub angle: Option<f64>,
}

impl Gate {
    pub fn h(q: usize) -> Self {
        Gate { kind: GateKind::H, qubits: vec![q], angle: None }
    }

    pub fn s(q: usize) -> Self {
        Gate { kind: GateKind::S, qubits: vec![q], angle: None }
    }

    pub fn rx(q: usize, theta: f64) -> Self {
        Gate { kind: GateKind::RX, qubits: vec![q], angle: Some(theta) }
    }

    pub fn ry(q: usize, theta: f64) -> Self {
        Gate { kind: GateKind::RY, qubits: vec![q], angle: Some(theta) }
    }

    pub fn rz(q: usize, theta: f64) -> Self {
        Gate { kind: GateKind::RZ, qubits: vec![q], angle: Some(theta) }
    }

    pub fn rotation(kind: GateKind, q: usize, theta: f64) -> Self {
        debug_assert!(kind.is_rotation());
        Gate { kind, qubits: vec![q], angle: Some(theta) }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate { kind: GateKind::CNOT, qubits: vec![control, target], angle: None }
    }

    pub fn is_multi_qubit(&self) -> bool {
        self.qubits.len() > 1
    }

    /// H, S, CNOT, and rotations by integer multiples of π/2.
    pub fn is_clifford(&self) -> bool {
        match self.kind {
            GateKind::H | GateKind::S | GateKind::CNOT => true,
            GateKind::RX | GateKind::RY | GateKind::RZ => {
                self.angle.is_some_and(|a| is_clifford_angle(a, 1e-12))
            }
            GateKind::INPUT | GateKind::OUTPUT => false,
        }
    }
}

/// True when `theta` lies within `tol` of an integer multiple of π/2.
pub fn is_clifford_angle(theta: f64, tol: f64) -> bool {
    let k = (theta / FRAC_PI_2).round();
    (theta - k * FRAC_PI_2).abs() <= tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    PS,
    CS,
    ES,
    RQC,
    TIM,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::PS, Family::CS, Family::ES, Family::RQC, Family::TIM];

    pub fn name(self) -> &'static str {
        match self {
            Family::PS => "PS",
            Family::CS => "CS",
            Family::ES => "ES",
            Family::RQC => "RQC",
            Family::TIM => "TIM",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown family `{s}`")))
    }
}

/// Trotterised transverse-field Ising parameters, with `theta = J·Δt` and
/// `phi = h·Δt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrotterParams {
    pub steps: usize,
    pub theta: f64,
    pub phi: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitMeta {
    pub id: String,
    pub family: Family,
    pub parent_id: Option<String>,
    pub clifford_depth: Option<usize>,
    pub r_m: Option<f64>,
    pub trotter: Option<TrotterParams>,
}

impl CircuitMeta {
    pub fn new(id: impl Into<String>, family: Family) -> Self {
        CircuitMeta {
            id: id.into(),
            family,
            parent_id: None,
            clifford_depth: None,
            r_m: None,
            trotter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub meta: CircuitMeta,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>, meta: CircuitMeta) -> Self {
        Circuit { n_qubits, gates, meta }
    }

    /// Unlabelled circuit, mostly for tests and ad-hoc use.
    pub fn anonymous(n_qubits: usize, gates: Vec<Gate>) -> Self {
        Circuit::new(n_qubits, gates, CircuitMeta::new("anon", Family::RQC))
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn has_multi_qubit_gates(&self) -> bool {
        self.gates.iter().any(Gate::is_multi_qubit)
    }

    /// Error out on the first invariant violation.
    pub fn ensure_valid(&self) -> Result<()> {
        match validate(self).into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::Validation(v.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub gate_index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.gate_index {
            Some(i) => write!(f, "gate {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Check a single gate against a qubit count.
pub fn validate_gate(gate: &Gate, n_qubits: usize) -> Vec<String> {
    let mut out = Vec::new();
    match gate.kind {
        GateKind::INPUT | GateKind::OUTPUT => {
            out.push(format!("{} is not a circuit gate", gate.kind));
            return out;
        }
        _ => {}
    }
    let arity = gate.kind.arity();
    if gate.qubits.len() != arity {
        out.push(format!(
            "{} expects {arity} qubit(s), got {}",
            gate.kind,
            gate.qubits.len()
        ));
    }
    for &q in &gate.qubits {
        if q >= n_qubits {
            out.push(format!("qubit index {q} out of range for {n_qubits} qubits"));
        }
    }
    if gate.kind == GateKind::CNOT && gate.qubits.len() == 2 && gate.qubits[0] == gate.qubits[1] {
        out.push(format!("CNOT control equals target ({})", gate.qubits[0]));
    }
    match (gate.kind.is_rotation(), gate.angle) {
        (true, None) => out.push("missing angle".to_string()),
        (true, Some(a)) if !a.is_finite() => out.push(format!("non-finite angle {a}")),
        (false, Some(_)) => out.push(format!("unexpected angle on {}", gate.kind)),
        _ => {}
    }
    out
}

/// Every invariant violation of `circuit`; empty means valid.
pub fn validate(circuit: &Circuit) -> Vec<Violation> {
    let mut out = Vec::new();
    if circuit.n_qubits == 0 {
        out.push(Violation { gate_index: None, message: "n_qubits must be positive".into() });
    }
    for (i, gate) in circuit.gates.iter().enumerate() {
        for message in validate_gate(gate, circuit.n_qubits) {
            out.push(Violation { gate_index: Some(i), message });
        }
    }
    let meta = &circuit.meta;
    match meta.family {
        Family::CS => {
            if meta.parent_id.is_none() {
                out.push(Violation { gate_index: None, message: "CS circuit without parent_id".into() });
            }
            match meta.clifford_depth {
                Some(d) if (1..=25).contains(&d) => {}
                Some(d) => out.push(Violation {
                    gate_index: None,
                    message: format!("clifford_depth {d} outside [1, 25]"),
                }),
                None => out.push(Violation {
                    gate_index: None,
                    message: "CS circuit without clifford_depth".into(),
                }),
            }
        }
        Family::TIM if meta.trotter.is_none() => {
            out.push(Violation { gate_index: None, message: "TIM circuit without trotter parameters".into() });
        }
        _ => {}
    }
    out
}

/// Rewrite S as RZ(π/2); with `ps_mode`, also rewrite H as RZ(π) followed by
/// RY(π/2). Both rewrites hold up to a global phase.
pub fn canonicalize(circuit: &Circuit, ps_mode: bool) -> Circuit {
    let mut gates = Vec::with_capacity(circuit.gates.len());
    for gate in &circuit.gates {
        match gate.kind {
            GateKind::S => gates.push(Gate::rz(gate.qubits[0], FRAC_PI_2)),
            GateKind::H if ps_mode => {
                let q = gate.qubits[0];
                gates.push(Gate::rz(q, PI));
                gates.push(Gate::ry(q, FRAC_PI_2));
            }
            _ => gates.push(gate.clone()),
        }
    }
    Circuit { n_qubits: circuit.n_qubits, gates, meta: circuit.meta.clone() }
}

/// Per-kind tally of a circuit's gates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GateCounts {
    pub counts: BTreeMap<GateKind, usize>,
    pub total: usize,
}

impl GateCounts {
    pub fn get(&self, kind: GateKind) -> usize {
        self.counts.get(&kind).copied().unwrap_or(0)
    }
}

pub fn gate_counts(circuit: &Circuit) -> GateCounts {
    let mut counts: BTreeMap<GateKind, usize> =
        GateKind::CIRCUIT_KINDS.iter().map(|&k| (k, 0)).collect();
    for gate in &circuit.gates {
        *counts.entry(gate.kind).or_insert(0) += 1;
    }
    GateCounts { counts, total: circuit.gates.len() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalize_rewrites_s() {
        let c = Circuit::anonymous(1, vec![Gate::s(0)]);
        let out = canonicalize(&c, false);
        assert_eq!(out.gates, vec![Gate::rz(0, FRAC_PI_2)]);
    }

    #[test]
    fn canonicalize_keeps_h_outside_ps_mode() {
        let c = Circuit::anonymous(1, vec![Gate::h(0)]);
        assert_eq!(canonicalize(&c, false).gates, vec![Gate::h(0)]);
        let ps = canonicalize(&c, true);
        assert_eq!(ps.gates, vec![Gate::rz(0, PI), Gate::ry(0, FRAC_PI_2)]);
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let c = Circuit::anonymous(
            2,
            vec![Gate::h(0), Gate::s(1), Gate::cnot(0, 1), Gate::rx(1, 0.3), Gate::s(0)],
        );
        for ps_mode in [false, true] {
            let once = canonicalize(&c, ps_mode);
            assert_eq!(canonicalize(&once, ps_mode), once);
        }
    }

    #[test]
    fn validate_well_formed() {
        let c = Circuit::anonymous(2, vec![Gate::h(0), Gate::cnot(0, 1), Gate::rz(1, 0.2)]);
        assert!(validate(&c).is_empty());
    }

    #[test]
    fn validate_reports_cnot_on_same_qubit() {
        let c = Circuit::anonymous(2, vec![Gate::h(1), Gate::cnot(0, 0)]);
        let v = validate(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].gate_index, Some(1));
        assert!(v[0].to_string().contains("gate 1"));
    }

    #[test]
    fn validate_reports_missing_angle() {
        let gate = Gate { kind: GateKind::RX, qubits: vec![0], angle: None };
        let v = validate(&Circuit::anonymous(1, vec![gate]));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].message, "missing angle");
    }

    #[test]
    fn validate_reports_out_of_range_and_metadata() {
        let mut c = Circuit::anonymous(2, vec![Gate::h(2), Gate::rx(0, f64::NAN)]);
        c.meta.family = Family::CS;
        let v = validate(&c);
        assert_eq!(v.len(), 4, "{v:?}");
        c.meta.family = Family::TIM;
        assert_eq!(validate(&c).len(), 3);
    }

    #[test]
    fn gate_counts_tally() {
        let empty = Circuit::anonymous(3, vec![]);
        let counts = gate_counts(&empty);
        assert_eq!(counts.total, 0);
        assert!(counts.counts.values().all(|&c| c == 0));

        let c = Circuit::anonymous(2, vec![Gate::h(0), Gate::cnot(0, 1), Gate::rx(1, 1.0)]);
        let counts = gate_counts(&c);
        assert_eq!(counts.total, 3);
        assert_eq!(counts.get(GateKind::H), 1);
        assert_eq!(counts.get(GateKind::CNOT), 1);
        assert_eq!(counts.get(GateKind::RX), 1);
        assert_eq!(counts.get(GateKind::RZ), 0);
        assert_eq!(counts.counts.values().sum::<usize>(), counts.total);
    }

    #[test]
    fn clifford_angles() {
        for k in -4..=4 {
            assert!(is_clifford_angle(k as f64 * FRAC_PI_2, 1e-12));
        }
        assert!(!is_clifford_angle(0.3, 1e-12));
        assert!(Gate::rz(0, -1.5 * PI).is_clifford());
        assert!(!Gate::rz(0, PI / 4.0).is_clifford());
    }
}

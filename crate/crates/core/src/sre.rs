//! Order-2 stabilizer Rényi entropy.
//!
//! For a pure n-qubit state
//!
//! ```text
//! M₂(ψ) = −ln Σ_P (⟨ψ|P|ψ⟩² / 2ⁿ)² − n ln 2
//! ```
//!
//! with the sum over all 4ⁿ Pauli strings, in nats. It vanishes exactly on
//! stabilizer states, is invariant under Clifford unitaries and additive over
//! tensor products.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::par::{tree_sum, Exec};
use crate::statevector::{bloch, run, run_product_wires, BlochVector, StateVector};

/// Default register size limit for exhaustive Pauli enumeration.
pub const DEFAULT_FULL_CAP: usize = 12;

/// Residues in `(−NEGATIVE_TOLERANCE, 0)` are rounding noise and clamp to 0.
pub const NEGATIVE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SreMethod {
    Full,
    Product,
    Inherited,
    External,
}

impl SreMethod {
    pub fn name(self) -> &'static str {
        match self {
            SreMethod::Full => "full",
            SreMethod::Product => "product",
            SreMethod::Inherited => "inherited",
            SreMethod::External => "external",
        }
    }
}

impl fmt::Display for SreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SreMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => SreMethod::Full,
            "product" => SreMethod::Product,
            "inherited" => SreMethod::Inherited,
            "external" => SreMethod::External,
            other => return Err(Error::Validation(format!("unknown SRE method `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SreResult {
    pub m2: f64,
    pub method: SreMethod,
    pub n_qubits: usize,
}

/// Upper bound of M₂ over n-qubit states, ln((2ⁿ + 1) / 2).
pub fn sre_max(n: usize) -> f64 {
    ((2f64.powi(n as i32) + 1.0) / 2.0).ln()
}

fn clamp_residue(m2: f64) -> Result<f64> {
    if m2 < -NEGATIVE_TOLERANCE || m2.is_nan() {
        Err(Error::NegativeResidue(m2))
    } else {
        Ok(m2.max(0.0))
    }
}

/// Exhaustive M₂ over all 4ⁿ Pauli strings.
pub fn sre_full(state: &StateVector, cap: usize) -> Result<f64> {
    sre_full_with(state, cap, Exec::default())
}

/// [`sre_full`] with an explicit execution strategy. The result is
/// bit-identical for every strategy and thread count.
///
/// For a fixed x-mask the 2ⁿ expectations over all z-masks are, up to a
/// phase, the Walsh–Hadamard transform of `w[i] = conj(ψ[i⊕x])·ψ[i]`, so
/// each x costs O(n·2ⁿ) and the whole spectrum O(n·4ⁿ).
pub fn sre_full_with(state: &StateVector, cap: usize, exec: Exec) -> Result<f64> {
    let n = state.n_qubits();
    if n > cap {
        return Err(Error::Capacity {
            what: "full SRE enumeration (use the product or inherited strategy)",
            n,
            cap,
        });
    }
    let amps = state.amplitudes();
    let dim = amps.len();
    let partials = exec.map_range(dim, |x| {
        let mut w: Vec<Complex64> = (0..dim).map(|i| amps[i ^ x].conj() * amps[i]).collect();
        walsh_hadamard(&mut w);
        w.iter().map(|v| v.norm_sqr() * v.norm_sqr()).sum::<f64>()
    });
    // Σ_P ⟨P⟩⁴ / 4ⁿ is the squared-probability mass of the Pauli spectrum.
    let fourth_moment = tree_sum(&partials);
    let dim_f = dim as f64;
    let m2 = -(fourth_moment / (dim_f * dim_f)).ln() - (n as f64) * 2f64.ln();
    clamp_residue(m2)
}

/// Unnormalised in-place Walsh–Hadamard transform.
fn walsh_hadamard(v: &mut [Complex64]) {
    let len = v.len();
    let mut h = 1;
    while h < len {
        for block in v.chunks_mut(h << 1) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h <<= 1;
    }
}

/// Closed form for one qubit: −ln((1 + x⁴ + y⁴ + z⁴) / 2).
pub fn sre_single_qubit(b: &BlochVector) -> Result<f64> {
    let norm = b.norm();
    if (norm - 1.0).abs() >= 1e-8 {
        return Err(Error::Precondition(format!("Bloch vector norm {norm} is not 1")));
    }
    let s = 1.0 + b.x.powi(4) + b.y.powi(4) + b.z.powi(4);
    clamp_residue(-(s / 2.0).ln())
}

/// Sum of per-wire closed forms for circuits without multi-qubit gates.
pub fn sre_product(circuit: &Circuit) -> Result<f64> {
    let wires = run_product_wires(circuit)?;
    let mut total = 0.0;
    for wire in &wires {
        total += sre_single_qubit(&bloch(wire)?)?;
    }
    Ok(total)
}

/// How [`sre_of_circuit`] may obtain a label.
#[derive(Debug, Clone, Copy)]
pub struct SrePolicy<'a> {
    pub full_cap: usize,
    /// Parent circuit and its M₂; applies when the circuit extends the parent
    /// by Clifford gates only.
    pub parent: Option<(&'a Circuit, f64)>,
    /// Externally supplied label, e.g. from a noisy simulation.
    pub external: Option<f64>,
}

impl Default for SrePolicy<'_> {
    fn default() -> Self {
        SrePolicy { full_cap: DEFAULT_FULL_CAP, parent: None, external: None }
    }
}

impl<'a> SrePolicy<'a> {
    pub fn with_cap(full_cap: usize) -> Self {
        SrePolicy { full_cap, ..Default::default() }
    }

    pub fn with_parent(mut self, parent: &'a Circuit, m2: f64) -> Self {
        self.parent = Some((parent, m2));
        self
    }

    pub fn with_external(mut self, m2: f64) -> Self {
        self.external = Some(m2);
        self
    }
}

/// True when `circuit` is `parent` followed only by Clifford gates.
pub fn is_clifford_extension(parent: &Circuit, circuit: &Circuit) -> bool {
    parent.n_qubits == circuit.n_qubits
        && circuit.gates.len() >= parent.gates.len()
        && circuit.gates[..parent.gates.len()] == parent.gates[..]
        && circuit.gates[parent.gates.len()..].iter().all(Gate::is_clifford)
}

/// Label a circuit with the cheapest applicable exact strategy.
///
/// Order of preference: external label, Clifford inheritance from a parent,
/// per-qubit closed form, full enumeration.
pub fn sre_of_circuit(circuit: &Circuit, policy: &SrePolicy<'_>) -> Result<SreResult> {
    circuit.ensure_valid()?;
    let n = circuit.n_qubits;
    let result = |m2, method| SreResult { m2, method, n_qubits: n };
    if let Some(m2) = policy.external {
        return Ok(result(m2, SreMethod::External));
    }
    if let Some((parent, m2)) = policy.parent {
        if is_clifford_extension(parent, circuit) {
            return Ok(result(m2, SreMethod::Inherited));
        }
    }
    if !circuit.has_multi_qubit_gates() {
        return Ok(result(sre_product(circuit)?, SreMethod::Product));
    }
    if n <= policy.full_cap {
        let state = run(circuit)?;
        return Ok(result(sre_full(&state, policy.full_cap)?, SreMethod::Full));
    }
    Err(Error::Unlabelable {
        id: circuit.meta.id.clone(),
        reason: format!(
            "{n} qubits with entangling gates exceeds the full-enumeration cap {}",
            policy.full_cap
        ),
    })
}

/// Read `(circuit_id, m2)` rows produced outside this crate.
pub fn read_external_labels<R: Read>(reader: R) -> Result<BTreeMap<String, f64>> {
    #[derive(Deserialize)]
    struct Row {
        circuit_id: String,
        m2: f64,
    }
    let mut out = BTreeMap::new();
    let mut rdr = csv::Reader::from_reader(reader);
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Parse { line: i + 2, message: e.to_string() })?;
        if !row.m2.is_finite() {
            return Err(Error::Parse { line: i + 2, message: format!("non-finite m2 {}", row.m2) });
        }
        out.insert(row.circuit_id, row.m2);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::*;
    use crate::circuit::{CircuitMeta, Family};
    use crate::statevector::{pauli_expectation, zero_state, PauliString};

    /// Independent route: one bitmask expectation per Pauli string.
    fn brute_force_m2(state: &StateVector) -> f64 {
        let n = state.n_qubits();
        let dim = 1u64 << n;
        let mut s = 0.0;
        for x in 0..dim {
            for z in 0..dim {
                let p = PauliString::new(n, x, z).unwrap();
                let e = pauli_expectation(state, &p).unwrap();
                let xi = e * e / dim as f64;
                s += xi * xi;
            }
        }
        -s.ln() - n as f64 * 2f64.ln()
    }

    #[test]
    fn zero_state_has_no_magic() {
        for n in 1..=6 {
            let m2 = sre_full(&zero_state(n).unwrap(), DEFAULT_FULL_CAP).unwrap();
            assert!(m2.abs() < 1e-9, "n={n}: {m2}");
        }
    }

    #[test]
    fn rx_quarter_turn_value() {
        let s = run(&Circuit::anonymous(1, vec![Gate::rx(0, FRAC_PI_4)])).unwrap();
        let expected = (4.0f64 / 3.0).ln();
        assert!((brute_force_m2(&s) - expected).abs() < 1e-12);
        assert!((sre_full(&s, 12).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.2876821).abs() < 1e-7);
    }

    #[test]
    fn bell_pair_is_stabilizer() {
        let s = run(&Circuit::anonymous(2, vec![Gate::h(0), Gate::cnot(0, 1)])).unwrap();
        assert!(sre_full(&s, 12).unwrap().abs() < 1e-12);
    }

    #[test]
    fn walsh_route_matches_brute_force() {
        let c = Circuit::anonymous(
            3,
            vec![
                Gate::rx(0, 0.7),
                Gate::ry(1, 1.9),
                Gate::cnot(0, 2),
                Gate::rz(2, 0.4),
                Gate::h(1),
                Gate::cnot(1, 0),
                Gate::rx(2, 2.2),
            ],
        );
        let s = run(&c).unwrap();
        let fast = sre_full(&s, 12).unwrap();
        assert!((fast - brute_force_m2(&s)).abs() < 1e-12);
        assert_eq!(
            sre_full_with(&s, 12, Exec::Sequential).unwrap().to_bits(),
            sre_full_with(&s, 12, Exec::Parallel).unwrap().to_bits()
        );
    }

    #[test]
    fn full_enumeration_cap() {
        let s = zero_state(5).unwrap();
        assert!(matches!(sre_full(&s, 4), Err(Error::Capacity { n: 5, cap: 4, .. })));
    }

    #[test]
    fn single_qubit_closed_form() {
        let z = BlochVector { x: 0.0, y: 0.0, z: 1.0 };
        assert_eq!(sre_single_qubit(&z).unwrap(), 0.0);
        let h = 2f64.sqrt() / 2.0;
        let v = BlochVector { x: 0.0, y: -h, z: h };
        assert!((sre_single_qubit(&v).unwrap() - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        let t = 1.0 / 3f64.sqrt();
        let v = BlochVector { x: t, y: t, z: t };
        let m2 = sre_single_qubit(&v).unwrap();
        assert!((m2 - 1.5f64.ln()).abs() < 1e-12);
        assert!((m2 - sre_max(1)).abs() < 1e-12);
        assert!(sre_single_qubit(&BlochVector { x: 0.5, y: 0.0, z: 0.0 }).is_err());
    }

    #[test]
    fn product_examples() {
        let c = Circuit::anonymous(2, vec![Gate::rx(0, FRAC_PI_4), Gate::rx(1, FRAC_PI_4)]);
        let m2 = sre_product(&c).unwrap();
        assert!((m2 - 2.0 * (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((m2 - 0.5753641).abs() < 1e-7);
        assert!((m2 - sre_full(&run(&c).unwrap(), 12).unwrap()).abs() < 1e-12);

        let clifford = Circuit::anonymous(
            3,
            vec![Gate::h(0), Gate::s(0), Gate::rx(1, std::f64::consts::PI), Gate::ry(2, -1.5 * std::f64::consts::PI)],
        );
        assert!(sre_product(&clifford).unwrap().abs() < 1e-9);

        let entangled = Circuit::anonymous(2, vec![Gate::cnot(0, 1)]);
        assert!(matches!(sre_product(&entangled), Err(Error::Precondition(_))));
    }

    #[test]
    fn sre_max_values() {
        assert!((sre_max(1) - 0.4054651).abs() < 1e-7);
        assert!((sre_max(2) - 0.9162907).abs() < 1e-7);
        // ln(65/2) = 3.48124008…
        assert!((sre_max(6) - 32.5f64.ln()).abs() < 1e-12);
        assert!((sre_max(6) - 3.4812401).abs() < 1e-7);
    }

    #[test]
    fn dispatch_inherited() {
        let parent = Circuit::anonymous(2, vec![Gate::rx(0, 0.3), Gate::ry(1, 2.0)]);
        let mut child = parent.clone();
        child.gates.extend([Gate::h(0), Gate::cnot(0, 1), Gate::s(1)]);
        child.meta = CircuitMeta::new("cs", Family::CS);
        child.meta.parent_id = Some("anon".into());
        child.meta.clifford_depth = Some(3);
        let r = sre_of_circuit(&child, &SrePolicy::default().with_parent(&parent, 0.31)).unwrap();
        assert_eq!(r.method, SreMethod::Inherited);
        assert_eq!(r.m2, 0.31);

        // A non-Clifford tail falls back to enumeration.
        child.gates.push(Gate::rz(0, 0.1));
        let r = sre_of_circuit(&child, &SrePolicy::default().with_parent(&parent, 0.31)).unwrap();
        assert_eq!(r.method, SreMethod::Full);
    }

    #[test]
    fn dispatch_full_product_external_and_unlabelable() {
        let rqc = Circuit::anonymous(
            4,
            vec![Gate::rx(0, 0.3), Gate::cnot(0, 1), Gate::ry(2, 1.1), Gate::cnot(2, 3), Gate::rz(3, 0.9)],
        );
        let r = sre_of_circuit(&rqc, &SrePolicy::default()).unwrap();
        assert_eq!(r.method, SreMethod::Full);
        assert!((r.m2 - brute_force_m2(&run(&rqc).unwrap())).abs() < 1e-12);

        let ps = Circuit::anonymous(3, vec![Gate::rx(0, 0.3)]);
        assert_eq!(sre_of_circuit(&ps, &SrePolicy::default()).unwrap().method, SreMethod::Product);

        let r = sre_of_circuit(&rqc, &SrePolicy::default().with_external(0.42)).unwrap();
        assert_eq!((r.method, r.m2), (SreMethod::External, 0.42));

        let mut es = Circuit::anonymous(18, vec![Gate::rx(0, 0.3), Gate::cnot(0, 5)]);
        es.meta.id = "ES-18".into();
        match sre_of_circuit(&es, &SrePolicy::default()) {
            Err(Error::Unlabelable { id, .. }) => assert_eq!(id, "ES-18"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn external_labels_csv() {
        let data = "circuit_id,m2\nRQC-1,0.5\nRQC-2,1.25\n";
        let labels = read_external_labels(data.as_bytes()).unwrap();
        assert_eq!(labels["RQC-2"], 1.25);
        let bad = "circuit_id,m2\nRQC-1,abc\n";
        assert!(matches!(read_external_labels(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn residue_clamp() {
        assert_eq!(clamp_residue(-1e-12).unwrap(), 0.0);
        assert!(clamp_residue(-1e-6).is_err());
    }
}

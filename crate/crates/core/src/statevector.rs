//! Dense pure-state simulation with bitwise gate kernels.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::circuit::{validate_gate, Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::par::Exec;

/// Largest register [`zero_state`] will allocate (2^25 amplitudes, 512 MiB).
pub const SIM_QUBIT_CAP: usize = 25;

/// Registers at or above this size split single-qubit kernels across threads.
const PARALLEL_KERNEL_QUBITS: usize = 14;

type Mat2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

pub fn zero_state(n: usize) -> Result<StateVector> {
    if n == 0 {
        return Err(Error::Validation("a register needs at least one qubit".into()));
    }
    if n > SIM_QUBIT_CAP {
        return Err(Error::Capacity { what: "statevector simulation", n, cap: SIM_QUBIT_CAP });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n];
    amps[0] = Complex64::new(1.0, 0.0);
    Ok(StateVector { n_qubits: n, amps })
}

impl StateVector {
    /// Wrap raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Validation(format!("amplitude count {len} is not 2^n with n ≥ 1")));
        }
        Ok(StateVector { n_qubits: len.trailing_zeros() as usize, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// |⟨self|other⟩|², insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        assert_eq!(self.n_qubits, other.n_qubits);
        let overlap: Complex64 =
            self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        overlap.norm_sqr()
    }

    /// Kronecker product with `self` on the low qubits and `high` above them.
    pub fn tensor(&self, high: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.amps.len() * high.amps.len());
        for h in &high.amps {
            amps.extend(self.amps.iter().map(|l| l * h));
        }
        StateVector { n_qubits: self.n_qubits + high.n_qubits, amps }
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        if let Some(msg) = validate_gate(gate, self.n_qubits).into_iter().next() {
            return Err(Error::Validation(msg));
        }
        match gate.kind {
            GateKind::CNOT => self.apply_cnot(gate.qubits[0], gate.qubits[1]),
            kind => {
                let m = single_qubit_matrix(kind, gate.angle.unwrap_or(0.0));
                self.apply_1q(gate.qubits[0], &m);
            }
        }
        Ok(())
    }

    fn apply_1q(&mut self, q: usize, m: &Mat2) {
        let stride = 1usize << q;
        let kernel = |block: &mut [Complex64]| {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = m[0][0] * x + m[0][1] * y;
                *a1 = m[1][0] * x + m[1][1] * y;
            }
        };
        let exec = if self.n_qubits >= PARALLEL_KERNEL_QUBITS { Exec::Parallel } else { Exec::Sequential };
        exec.for_each_chunk_mut(&mut self.amps, stride << 1, kernel);
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let (cbit, tbit) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amps.swap(i, i | tbit);
            }
        }
    }
}

fn single_qubit_matrix(kind: GateKind, theta: f64) -> Mat2 {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let (cos, sin) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    match kind {
        GateKind::H => {
            let h = FRAC_1_SQRT_2;
            [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
        }
        GateKind::S => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]],
        GateKind::RX => [[c(cos, 0.0), c(0.0, -sin)], [c(0.0, -sin), c(cos, 0.0)]],
        GateKind::RY => [[c(cos, 0.0), c(-sin, 0.0)], [c(sin, 0.0), c(cos, 0.0)]],
        GateKind::RZ => [[c(cos, -sin), c(0.0, 0.0)], [c(0.0, 0.0), c(cos, sin)]],
        GateKind::CNOT | GateKind::INPUT | GateKind::OUTPUT => {
            unreachable!("{kind} is not a single-qubit gate")
        }
    }
}

pub fn apply_gate(mut state: StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply(gate)?;
    Ok(state)
}

/// `|0…0⟩` advanced through every gate of `circuit` in order.
pub fn run(circuit: &Circuit) -> Result<StateVector> {
    let mut state = zero_state(circuit.n_qubits)?;
    for (i, gate) in circuit.gates.iter().enumerate() {
        state
            .apply(gate)
            .map_err(|e| Error::Validation(format!("gate {i}: {e}")))?;
    }
    Ok(state)
}

/// Simulate each wire of a circuit without multi-qubit gates independently.
pub fn run_product_wires(circuit: &Circuit) -> Result<Vec<StateVector>> {
    if let Some(i) = circuit.gates.iter().position(Gate::is_multi_qubit) {
        return Err(Error::Precondition(format!(
            "gate {i} ({}) acts on several qubits; product simulation needs single-qubit gates only",
            circuit.gates[i].kind
        )));
    }
    let mut wires = vec![zero_state(1)?; circuit.n_qubits];
    for (i, gate) in circuit.gates.iter().enumerate() {
        if let Some(msg) = validate_gate(gate, circuit.n_qubits).into_iter().next() {
            return Err(Error::Validation(format!("gate {i}: {msg}")));
        }
        let q = gate.qubits[0];
        let local = Gate { kind: gate.kind, qubits: vec![0], angle: gate.angle };
        wires[q].apply(&local)?;
    }
    Ok(wires)
}

/// An n-qubit Pauli operator as x/z bit masks; letter on qubit q is
/// I (0,0), X (1,0), Z (0,1) or Y (1,1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn new(n_qubits: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 63 {
            return Err(Error::Validation(format!("Pauli string length {n_qubits} unsupported")));
        }
        let limit = 1u64 << n_qubits;
        if x_mask >= limit || z_mask >= limit {
            return Err(Error::Validation("Pauli mask has bits above the register".into()));
        }
        Ok(PauliString { n_qubits, x_mask, z_mask })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        PauliString::new(n_qubits, 0, 0)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    /// Letter acting on qubit `q`.
    pub fn letter(&self, q: usize) -> char {
        match ((self.x_mask >> q) & 1, (self.z_mask >> q) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (0, 1) => 'Z',
            _ => 'Y',
        }
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Letters are read left to right as qubit 0, 1, …
    fn from_str(s: &str) -> Result<Self> {
        let (mut x, mut z) = (0u64, 0u64);
        for (q, ch) in s.chars().enumerate() {
            match ch.to_ascii_uppercase() {
                'I' => {}
                'X' => x |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                'Z' => z |= 1 << q,
                other => return Err(Error::Validation(format!("bad Pauli letter `{other}`"))),
            }
        }
        PauliString::new(s.chars().count(), x, z)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        (0..self.n_qubits).try_for_each(|q| write!(f, "{}", self.letter(q)))
    }
}

/// ⟨ψ|P|ψ⟩ without materialising P.
///
/// P|i⟩ = i^{|x∧z|} (−1)^{|i∧z|} |i ⊕ x⟩, so the expectation is a single pass
/// over amplitude pairs (i, i ⊕ x).
pub fn pauli_expectation(state: &StateVector, pauli: &PauliString) -> Result<f64> {
    if state.n_qubits != pauli.n_qubits {
        return Err(Error::Validation(format!(
            "Pauli string on {} qubits applied to a {}-qubit state",
            pauli.n_qubits, state.n_qubits
        )));
    }
    let (x, z) = (pauli.x_mask as usize, pauli.z_mask as usize);
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, amp) in state.amps.iter().enumerate() {
        let term = state.amps[i ^ x].conj() * amp;
        if (i & z).count_ones() & 1 == 1 {
            acc -= term;
        } else {
            acc += term;
        }
    }
    let phase = match (pauli.x_mask & pauli.z_mask).count_ones() % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let value = phase * acc;
    debug_assert!(value.im.abs() < 1e-10, "Hermitian expectation has imaginary part {}", value.im);
    Ok(value.re)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

pub fn bloch(state: &StateVector) -> Result<BlochVector> {
    if state.n_qubits != 1 {
        return Err(Error::Precondition(format!(
            "Bloch vector needs a single-qubit state, got {} qubits",
            state.n_qubits
        )));
    }
    let (a, b) = (state.amps[0], state.amps[1]);
    let cross = a.conj() * b;
    Ok(BlochVector {
        x: 2.0 * cross.re,
        y: 2.0 * cross.im,
        z: a.norm_sqr() - b.norm_sqr(),
    })
}

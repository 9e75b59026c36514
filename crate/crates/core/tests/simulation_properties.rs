use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use stabgnn::circuit::{canonicalize, Circuit, Gate, GateKind};
use stabgnn::sre::{sre_full, sre_single_qubit};
use stabgnn::statevector::{bloch, pauli_expectation, run, PauliString, StateVector};

const SRE_CAP: usize = 10;

fn gate_strategy(n: usize, allow_h_s: bool) -> impl Strategy<Value = Gate> {
    let rot = (0..3usize, 0..n, 0.0..TAU).prop_map(|(k, q, t)| {
        Gate::rotation([GateKind::RX, GateKind::RY, GateKind::RZ][k], q, t)
    });
    let clifford = (0..3usize, 0..n, 1..n.max(2)).prop_map(move |(k, q, off)| match k {
        0 => Gate::h(q),
        1 => Gate::s(q),
        _ if n > 1 => Gate::cnot(q, (q + off) % n),
        _ => Gate::h(q),
    });
    if allow_h_s {
        prop_oneof![rot, clifford].boxed()
    } else {
        rot.boxed()
    }
}

fn circuit_strategy(max_n: usize, max_len: usize) -> impl Strategy<Value = Circuit> {
    (1..=max_n).prop_flat_map(move |n| {
        prop::collection::vec(gate_strategy(n, true), 0..=max_len).prop_map(move |g| Circuit::anonymous(n, g))
    })
}

fn state_strategy(max_n: usize) -> impl Strategy<Value = StateVector> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << n).prop_filter_map("zero vector", |v| {
            let amps: Vec<Complex64> = v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            (norm > 1e-3).then(|| StateVector::from_amplitudes(amps.iter().map(|a| a / norm).collect()).unwrap())
        })
    })
}

/// Dense 2x2 matrix of a single Pauli letter.
fn letter_matrix(letter: char) -> [[Complex64; 2]; 2] {
    let (z, o, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
    match letter {
        'I' => [[o, z], [z, o]],
        'X' => [[z, o], [o, z]],
        'Y' => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    }
}

/// <psi|P|psi> from the explicit Kronecker product (qubit 0 least significant).
fn dense_expectation(state: &StateVector, p: &PauliString) -> f64 {
    let n = state.n_qubits();
    let dim = 1usize << n;
    let amps = state.amplitudes();
    let mut total = Complex64::new(0.0, 0.0);
    for row in 0..dim {
        for col in 0..dim {
            let mut entry = Complex64::new(1.0, 0.0);
            for q in 0..n {
                entry *= letter_matrix(p.letter(q))[(row >> q) & 1][(col >> q) & 1];
            }
            total += amps[row].conj() * entry * amps[col];
        }
    }
    total.re
}

fn relabel(c: &Circuit, perm: &[usize]) -> Circuit {
    let gates = c
        .gates
        .iter()
        .map(|g| Gate { kind: g.kind, qubits: g.qubits.iter().map(|&q| perm[q]).collect(), angle: g.angle })
        .collect();
    Circuit::anonymous(c.n_qubits, gates)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonicalize_is_idempotent(c in circuit_strategy(4, 30), ps in any::<bool>()) {
        let once = canonicalize(&c, ps);
        prop_assert_eq!(canonicalize(&once, ps), once);
    }

    #[test]
    fn canonicalize_preserves_state(c in circuit_strategy(4, 30), ps in any::<bool>()) {
        let a = run(&c).unwrap();
        let b = run(&canonicalize(&c, ps)).unwrap();
        prop_assert!((a.fidelity(&b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_is_preserved(c in (1..=6usize).prop_flat_map(|n| {
        prop::collection::vec(gate_strategy(n, true), 100).prop_map(move |g| Circuit::anonymous(n, g))
    })) {
        prop_assert!((run(&c).unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pauli_spectrum_is_complete(s in state_strategy(5)) {
        let n = s.n_qubits();
        let mut total = 0.0;
        for x in 0..1u64 << n {
            for z in 0..1u64 << n {
                total += pauli_expectation(&s, &PauliString::new(n, x, z).unwrap()).unwrap().powi(2);
            }
        }
        prop_assert!((total - (1u64 << n) as f64).abs() < 1e-8);
    }

    #[test]
    fn expectation_matches_dense_matrices(s in state_strategy(3)) {
        let n = s.n_qubits();
        for x in 0..1u64 << n {
            for z in 0..1u64 << n {
                let p = PauliString::new(n, x, z).unwrap();
                let fast = pauli_expectation(&s, &p).unwrap();
                prop_assert!((fast - dense_expectation(&s, &p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clifford_gates_leave_m2_unchanged(
        c in circuit_strategy(5, 25),
        tail in prop::collection::vec((0..3usize, 0..5usize, 1..5usize), 10),
    ) {
        let n = c.n_qubits;
        let before = sre_full(&run(&c).unwrap(), SRE_CAP).unwrap();
        let mut gates = c.gates.clone();
        for (k, q, off) in tail {
            let q = q % n;
            gates.push(match k {
                0 => Gate::h(q),
                2 if n > 1 => Gate::cnot(q, (q + 1 + off % (n - 1)) % n),
                _ => Gate::s(q),
            });
        }
        let after = sre_full(&run(&Circuit::anonymous(n, gates)).unwrap(), SRE_CAP).unwrap();
        prop_assert!((after - before).abs() < 1e-9);
    }

    #[test]
    fn m2_is_additive(a in state_strategy(1), b in state_strategy(1)) {
        let joint = a.tensor(&b);
        let sum = sre_full(&a, SRE_CAP).unwrap() + sre_full(&b, SRE_CAP).unwrap();
        prop_assert!((sre_full(&joint, SRE_CAP).unwrap() - sum).abs() < 1e-9);
    }

    #[test]
    fn single_qubit_closed_form_matches(s in state_strategy(1)) {
        let closed = sre_single_qubit(&bloch(&s).unwrap()).unwrap();
        prop_assert!((closed - sre_full(&s, SRE_CAP).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn qubit_relabeling_leaves_m2_unchanged(
        c in circuit_strategy(4, 25),
        perm in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let n = c.n_qubits;
        let perm: Vec<usize> = perm.into_iter().filter(|&q| q < n).collect();
        let a = sre_full(&run(&c).unwrap(), SRE_CAP).unwrap();
        let b = sre_full(&run(&relabel(&c, &perm)).unwrap(), SRE_CAP).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn bell_state_is_entangled_but_not_magic() {
    let bell = run(&Circuit::anonymous(2, vec![Gate::h(0), Gate::cnot(0, 1)])).unwrap();
    let amps = bell.amplitudes();
    assert!((amps[0].re - FRAC_1_SQRT_2).abs() < 1e-15 && (amps[3].re - FRAC_1_SQRT_2).abs() < 1e-15);
    assert!(sre_full(&bell, SRE_CAP).unwrap().abs() < 1e-12);
}

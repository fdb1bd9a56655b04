import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import example_circuit, random_circuit
from passorder.circuit import (
    Circuit,
    Gate,
    PhasedX,
    Rz,
    ZZPhase,
    canonicalize_angle,
    is_clifford,
    rebase,
    two_qubit_count,
    u1,
    xgate,
)
from passorder.linalg import HADAMARD, haar_unitary, phase_invariant_distance
from passorder.numerics import circuit_unitary


@pytest.mark.parametrize("a, expected", [(2.5, 0.5), (-0.25, 1.75), (4.0, 0.0), (0.5 + 1e-13, 0.5), (1.9999999999999, 0.0)])
def test_canonicalize_angle(a, expected):
    assert canonicalize_angle(a) == expected


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_canonicalize_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        canonicalize_angle(bad)


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_canonical_angle_in_range_and_congruent(a):
    r = canonicalize_angle(a)
    assert 0.0 <= r < 2.0
    k = (a - r) / 2.0
    assert abs(k - round(k)) * 2.0 < 1e-9 * max(1.0, abs(a))


@pytest.mark.parametrize(
    "gate, expected",
    [
        (Rz(0, 0.5), True),
        (ZZPhase(0, 1, 0.25), False),
        (PhasedX(0, 0.5, 0.5), True),
        (PhasedX(0, 0.0, 0.3), True),
        (PhasedX(0, 0.5, 0.3), False),
        (Rz(0, 1.5 + 1e-11), True),
        (Rz(0, 0.3), False),
        (ZZPhase(0, 1, 1.0), True),
    ],
)
def test_is_clifford(gate, expected):
    assert is_clifford(gate) is expected


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("ZZPhase", (0, 0), (0.5,))
    with pytest.raises(ValueError):
        Gate("Rz", (0,), (0.5, 0.1))
    with pytest.raises(ValueError):
        Gate("CX", (0, 1), ())
    with pytest.raises(ValueError):
        Circuit(2, (Rz(2, 0.1),))


def test_two_qubit_count():
    assert two_qubit_count(example_circuit()) == 2
    assert two_qubit_count(Circuit(3)) == 0
    assert two_qubit_count(Circuit(2, tuple(Rz(i % 2, 0.1 * i) for i in range(7)))) == 0


def test_wire_segment_identity():
    rng = np.random.default_rng(3)
    for _ in range(50):
        c = random_circuit(int(rng.integers(1, 6)), int(rng.integers(0, 30)), rng)
        wires = c.wire_gates()
        assert sum(len(w) + 1 for w in wires) == sum(g.arity for g in c.gates) + c.n_qubits


def test_rebase_merges_rz():
    c = rebase(1, [xgate("Rz", 0, params=(0.3,)), xgate("Rz", 0, params=(0.2,))])
    assert [g.kind for g in c.gates] == ["Rz"]
    assert c.gates[0].params[0] == pytest.approx(0.5, abs=1e-12)


def test_rebase_hadamard_matrix():
    c = rebase(1, [u1(0, HADAMARD)])
    assert [g.kind for g in c.gates] == ["PhasedX", "Rz"]
    assert phase_invariant_distance(circuit_unitary(c), HADAMARD) < 1e-12


def test_rebase_identity_run_is_empty():
    c = rebase(2, [xgate("H", 0), xgate("S", 1), xgate("H", 0), xgate("Sdg", 1)])
    assert c.gates == ()


def test_rebase_rejects_unknown_kind():
    with pytest.raises(ValueError):
        rebase(1, [xgate("T", 0)])


def test_rebase_aliases_preserve_unitary():
    rng = np.random.default_rng(0)
    kinds_1q = ["H", "S", "Sdg", "X", "Y", "Z", "V", "Vdg"]
    for _ in range(100):
        n = 3
        gates = []
        for _ in range(12):
            r = rng.random()
            if r < 0.3:
                a, b = (int(q) for q in rng.choice(n, 2, replace=False))
                gates.append(xgate(["CX", "CZ", "SWAP"][int(rng.integers(3))], a, b))
            elif r < 0.5:
                gates.append(u1(int(rng.integers(n)), haar_unitary(2, rng)))
            else:
                gates.append(xgate(kinds_1q[int(rng.integers(len(kinds_1q)))], int(rng.integers(n))))
        ref = np.eye(2**n, dtype=complex)
        from passorder.linalg import apply_matrix

        ref = ref.reshape((2,) * n + (2**n,))
        for g in gates:
            ref = apply_matrix(ref, g.unitary(), g.qubits, n)
        c = rebase(n, gates)
        assert phase_invariant_distance(circuit_unitary(c), ref.reshape(2**n, 2**n)) < 1e-10


def test_rebase_properties_on_random_circuits():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 6))
        c = random_circuit(n, int(rng.integers(0, 40)), rng)
        r = rebase(n, c.gates)
        assert rebase(n, r.gates) == r
        assert two_qubit_count(r) <= two_qubit_count(c)
        assert phase_invariant_distance(circuit_unitary(c), circuit_unitary(r)) < 1e-10
        for q, idxs in enumerate(r.wire_gates()):
            run = []
            for i in idxs + [None]:
                if i is not None and r.gates[i].arity == 1:
                    run.append(r.gates[i].kind)
                    continue
                assert run in ([], ["Rz"], ["PhasedX"], ["PhasedX", "Rz"])
                run = []


def test_circuit_concat_order():
    rng = np.random.default_rng(5)
    a = random_circuit(3, 10, rng)
    b = random_circuit(3, 10, rng)
    assert np.allclose(circuit_unitary(a + b), circuit_unitary(b) @ circuit_unitary(a), atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(["H", "S", "Sdg", "X", "Z", "V", "Vdg"]), max_size=6))
def test_clifford_runs_squash_to_clifford_gates(kinds):
    c = rebase(1, [xgate(k, 0) for k in kinds])
    assert all(is_clifford(g) for g in c.gates)

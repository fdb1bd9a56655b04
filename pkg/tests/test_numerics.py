import math

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import chisquare

from helpers import random_circuit, random_local
from passorder.circuit import Circuit, PhasedX, Rz, ZZPhase, two_qubit_count
from passorder.linalg import (
    CX_GATE,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    SWAP_GATE,
    euler_decompose_1q,
    haar_unitary,
    phasedx_matrix,
    phase_invariant_distance,
    rz_matrix,
    zzphase_matrix,
)
from passorder.numerics import circuit_unitary, equivalent, kak_synthesize, weyl_coordinates

XX = np.kron(PAULI_X, PAULI_X)
YY = np.kron(PAULI_Y, PAULI_Y)
ZZ = np.kron(PAULI_Z, PAULI_Z)


def test_gate_definitions():
    assert np.allclose(circuit_unitary(Circuit(1)), np.eye(2))
    assert np.allclose(circuit_unitary(Circuit(1, (Rz(0, 1.0),))), np.diag([-1j, 1j]))
    assert np.allclose(circuit_unitary(Circuit(2, (ZZPhase(0, 1, 1.0),))), np.diag([-1j, 1j, 1j, -1j]))
    a, b = 0.37, 1.21
    ref = rz_matrix(b) @ expm(-1j * math.pi * a / 2 * PAULI_X) @ rz_matrix(-b)
    assert np.allclose(phasedx_matrix(a, b), ref)
    assert np.allclose(zzphase_matrix(0.3), expm(-1j * math.pi * 0.3 / 2 * ZZ))


def test_qubit_zero_is_most_significant():
    u = circuit_unitary(Circuit(2, (PhasedX(0, 1.0, 0.0),)))
    assert phase_invariant_distance(u, np.kron(PAULI_X, np.eye(2))) < 1e-12


def test_unitary_cap():
    with pytest.raises(ValueError):
        circuit_unitary(Circuit(11))


def test_distance_examples():
    rng = np.random.default_rng(0)
    u = haar_unitary(4, rng)
    assert phase_invariant_distance(u, u) < 1e-12
    assert phase_invariant_distance(u, np.exp(0.7j) * u) < 1e-12
    assert phase_invariant_distance(np.eye(2), PAULI_X) == pytest.approx(1.0)
    v = haar_unitary(4, rng)
    assert phase_invariant_distance(u, v) == pytest.approx(phase_invariant_distance(v, u), abs=1e-14)
    with pytest.raises(ValueError):
        phase_invariant_distance(np.eye(2), np.eye(4))


def test_distance_matches_trace_formula():
    rng = np.random.default_rng(1)
    for _ in range(50):
        u, v = haar_unitary(4, rng), haar_unitary(4, rng)
        ref = math.sqrt(max(0.0, 1 - abs(np.trace(u.conj().T @ v)) / 4))
        assert phase_invariant_distance(u, v) == pytest.approx(ref, abs=1e-12)


def test_haar_unitarity_and_determinism():
    rng = np.random.default_rng(2)
    for _ in range(20):
        u = haar_unitary(8, rng)
        assert np.max(np.abs(u.conj().T @ u - np.eye(8))) < 1e-12
    a = haar_unitary(2, np.random.default_rng(42))
    b = haar_unitary(2, np.random.default_rng(42))
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        haar_unitary(1, rng)


def test_haar_eigenphases_uniform():
    rng = np.random.default_rng(7)
    phases = np.concatenate([np.angle(np.linalg.eigvals(haar_unitary(4, rng))) for _ in range(2000)])
    counts, _ = np.histogram(phases, bins=16, range=(-math.pi, math.pi))
    assert chisquare(counts).pvalue > 0.01


def test_euler_decomposition():
    rng = np.random.default_rng(3)
    for _ in range(100):
        u = haar_unitary(2, rng)
        (a, b), g = euler_decompose_1q(u)
        assert phase_invariant_distance(rz_matrix(g) @ phasedx_matrix(a, b), u) < 1e-11
    (a, _), g = euler_decompose_1q(rz_matrix(0.7))
    assert abs(a) < 1e-12 and g % 2 == pytest.approx(0.7)
    (a, _), g = euler_decompose_1q(np.eye(2))
    assert abs(a) < 1e-12 and abs(math.remainder(g, 2)) < 1e-12


def canonical_gate(k1, k2, k3):
    return expm(1j * (k1 * XX + k2 * YY + k3 * ZZ))


@pytest.mark.parametrize(
    "u, expected",
    [
        (np.eye(4), (0, 0, 0)),
        (CX_GATE, (math.pi / 4, 0, 0)),
        (SWAP_GATE, (math.pi / 4, math.pi / 4, math.pi / 4)),
    ],
)
def test_weyl_coordinates_known_gates(u, expected):
    # oracle: the canonical gate at these coordinates is locally equivalent to u
    k = weyl_coordinates(u).as_tuple()
    assert np.allclose(k, expected, atol=1e-9)
    assert np.allclose(weyl_coordinates(canonical_gate(*expected)).as_tuple(), expected, atol=1e-9)


def test_weyl_coordinates_local_invariance():
    rng = np.random.default_rng(4)
    for _ in range(100):
        u = haar_unitary(4, rng)
        k = weyl_coordinates(u).as_tuple()
        k1, k2, k3 = k
        assert math.pi / 4 + 1e-12 >= k1 >= k2 - 1e-12 >= abs(k3) - 2e-12
        dressed = random_local(rng) @ u @ random_local(rng)
        assert np.allclose(weyl_coordinates(dressed).as_tuple(), k, atol=1e-8)


def test_weyl_rejects_non_unitary():
    with pytest.raises(ValueError):
        weyl_coordinates(np.ones((4, 4)))
    with pytest.raises(ValueError):
        kak_synthesize(np.eye(2))


def test_kak_class_counts():
    rng = np.random.default_rng(5)
    assert two_qubit_count(kak_synthesize(np.eye(4))) == 0
    assert two_qubit_count(kak_synthesize(random_local(rng))) == 0
    assert two_qubit_count(kak_synthesize(CX_GATE)) == 1
    assert two_qubit_count(kak_synthesize(SWAP_GATE)) == 3
    u2 = random_local(rng) @ canonical_gate(0.5, 0.2, 0.0) @ random_local(rng)
    c2 = kak_synthesize(u2)
    assert two_qubit_count(c2) == 2
    assert phase_invariant_distance(circuit_unitary(c2), u2) < 1e-9


def test_kak_haar_samples():
    rng = np.random.default_rng(6)
    for _ in range(100):
        u = haar_unitary(4, rng)
        c = kak_synthesize(u)
        assert two_qubit_count(c) == 3
        assert phase_invariant_distance(circuit_unitary(c), u) < 1e-9
        assert np.allclose(weyl_coordinates(circuit_unitary(c)).as_tuple(), weyl_coordinates(u).as_tuple(), atol=1e-8)


def test_equivalent_probe_mode():
    rng = np.random.default_rng(8)
    c = random_circuit(4, 20, rng)
    ok, d = equivalent(c, c + Circuit(4, (ZZPhase(0, 1, 0.5), ZZPhase(0, 1, 1.5))), cap=2)
    assert ok and d < 1e-6
    ok, _ = equivalent(c, c + Circuit(4, (Rz(0, 0.3),)), cap=2)
    assert not ok

"""Circuit unitaries, equivalence checks, and two-qubit KAK synthesis.

Matrix convention: qubit 0 is the most significant tensor factor, and
``circuit_unitary(a + b) == circuit_unitary(b) @ circuit_unitary(a)``.
Weyl coordinates are in radians with the canonical gate
``exp(i (k1 XX + k2 YY + k3 ZZ))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, XGate, rebase, u1, xgate
from .linalg import (
    HADAMARD,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    S_GATE,
    apply_matrix,
    euler_decompose_1q,
    haar_unitary,
    is_unitary,
    kron_factor,
    phase_invariant_distance,
)

__all__ = [
    "UNITARY_QUBIT_CAP",
    "WeylCoordinates",
    "circuit_unitary",
    "equivalent",
    "euler_decompose_1q",
    "haar_unitary",
    "kak_decompose",
    "kak_synthesize",
    "phase_invariant_distance",
    "statevector",
    "weyl_coordinates",
]

UNITARY_QUBIT_CAP = 10
CLASS_TOL = 1e-9

_MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / math.sqrt(2)
_MAGIC_DAG = _MAGIC.conj().T
_XX = np.kron(PAULI_X, PAULI_X)
_YY = np.kron(PAULI_Y, PAULI_Y)
_ZZ = np.kron(PAULI_Z, PAULI_Z)
# XX, YY, ZZ are diagonal in the magic basis; rows of _LAMBDA hold the
# eigenvalue of (1, XX, YY, ZZ) on each magic basis vector.
_LAMBDA = np.real(
    np.stack(
        [np.ones(4)] + [np.diag(_MAGIC_DAG @ p @ _MAGIC) for p in (_XX, _YY, _ZZ)], axis=1
    )
)
_LAMBDA_INV = np.linalg.inv(_LAMBDA)


def circuit_unitary(c: Circuit, cap: int = UNITARY_QUBIT_CAP) -> np.ndarray:
    if c.n_qubits > cap:
        raise ValueError(f"circuit has {c.n_qubits} qubits, above the unitary cap of {cap}")
    n = c.n_qubits
    dim = 2**n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in c.gates:
        u = apply_matrix(u, g.matrix(), g.qubits, n)
    return u.reshape(dim, dim)


def statevector(c: Circuit, psi: np.ndarray) -> np.ndarray:
    n = c.n_qubits
    v = np.asarray(psi, dtype=complex).reshape((2,) * n + (1,))
    for g in c.gates:
        v = apply_matrix(v, g.matrix(), g.qubits, n)
    return v.reshape(-1)


def equivalent(
    a: Circuit,
    b: Circuit,
    tol: float = 1e-7,
    cap: int = UNITARY_QUBIT_CAP,
    n_probes: int = 8,
    seed: int = 0,
) -> tuple[bool, float]:
    """Check a ~ b up to global phase; returns (ok, distance estimate).

    Full unitaries are compared up to ``cap`` qubits. Wider circuits are
    checked on random state probes with the global phase fixed by the first
    probe, using a 1e-6 threshold.
    """
    if a.n_qubits != b.n_qubits:
        raise ValueError("width mismatch")
    if a.n_qubits <= cap:
        d = phase_invariant_distance(circuit_unitary(a), circuit_unitary(b))
        return d < tol, d
    rng = np.random.default_rng(seed)
    dim = 2**a.n_qubits
    phase = None
    worst = 0.0
    for _ in range(n_probes):
        psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        psi /= np.linalg.norm(psi)
        va, vb = statevector(a, psi), statevector(b, psi)
        if phase is None:
            ov = np.vdot(va, vb)
            phase = ov / abs(ov) if abs(ov) > 1e-300 else 1.0
        worst = max(worst, float(np.linalg.norm(phase * va - vb)))
    return worst < 1e-6, worst


# --------------------------------------------------------------------------
# KAK


@dataclass(frozen=True)
class WeylCoordinates:
    k1: float
    k2: float
    k3: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.k1, self.k2, self.k3)


@dataclass
class KAKDecomposition:
    """u ~ (a1 x b1) . exp(i sum c_k s_k s_k) . (a0 x b0), up to global phase."""

    a0: np.ndarray
    b0: np.ndarray
    coeffs: tuple[float, float, float]
    a1: np.ndarray
    b1: np.ndarray


def _check_unitary(u: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got {u.shape}")
    if not is_unitary(u, tol):
        raise ValueError("input is not unitary")
    return u


def _real_orthogonal_diagonalizer(m: np.ndarray) -> np.ndarray:
    """Real orthogonal P with P^T m P diagonal, for symmetric unitary m."""
    re, im = m.real, m.imag
    best, best_err = None, math.inf
    # real and imaginary parts commute; a generic combination separates them
    for r in (0.5773502691896258, 1.4142135623730951, -2.718281828459045, 0.1234567, 3.3):
        _, p = np.linalg.eigh(re + r * im)
        d = p.T @ m @ p
        err = float(np.max(np.abs(d - np.diag(np.diagonal(d)))))
        if err < best_err:
            best, best_err = p, err
        if err < 1e-12:
            break
    if np.linalg.det(best) < 0:
        best = best.copy()
        best[:, 0] *= -1
    return best


def kak_decompose(u: np.ndarray) -> KAKDecomposition:
    u = _check_unitary(u)
    u = u / np.linalg.det(u) ** 0.25
    um = _MAGIC_DAG @ u @ _MAGIC
    p = _real_orthogonal_diagonalizer(um.T @ um)
    d = np.diagonal(p.T @ (um.T @ um) @ p)
    theta = np.angle(d) / 2.0
    delta = np.exp(1j * theta)
    k1 = um @ p @ np.diag(delta.conj())
    if np.real(np.linalg.det(k1)) < 0:
        theta[0] += math.pi
        delta[0] = -delta[0]
        k1[:, 0] = -k1[:, 0]
    left = _MAGIC @ k1 @ _MAGIC_DAG
    right = _MAGIC @ p.T @ _MAGIC_DAG
    _, c1, c2, c3 = _LAMBDA_INV @ theta
    a1, b1 = kron_factor(left)
    a0, b0 = kron_factor(right)
    return KAKDecomposition(a0, b0, (float(c1), float(c2), float(c3)), a1, b1)


def _reduce(c: float) -> tuple[float, int]:
    """c = r + m pi/2 with r in (-pi/4, pi/4]."""
    m = math.floor((c + math.pi / 4) / (math.pi / 2))
    r = c - m * math.pi / 2
    if r <= -math.pi / 4 + CLASS_TOL:
        r += math.pi / 2
        m -= 1
    if abs(r) < 1e-14:
        r = 0.0
    return r, m


def weyl_coordinates(u: np.ndarray) -> WeylCoordinates:
    """Canonical chamber pi/4 >= k1 >= k2 >= |k3|; k3 >= 0 when k1 = pi/4."""
    kak = kak_decompose(u)
    ks = [_reduce(c)[0] for c in kak.coeffs]
    ks.sort(key=lambda x: -abs(x))
    k1, k2, k3 = ks
    if k1 < 0:
        k1, k3 = -k1, -k3
    if k2 < 0:
        k2, k3 = -k2, -k3
    if abs(k1 - math.pi / 4) < CLASS_TOL and k3 < 0:
        k3 = -k3
    return WeylCoordinates(k1, k2, k3)


# basis changes B with B Z B^dag = sigma
_B_Y = S_GATE @ HADAMARD
_BASIS = {0: HADAMARD, 1: _B_Y, 2: np.eye(2, dtype=complex)}
_PAULI = {0: PAULI_X, 1: PAULI_Y, 2: PAULI_Z}


def kak_gates(u: np.ndarray, q0: int = 0, q1: int = 1) -> list[XGate]:
    """Extended-gateset realisation of a 4x4 unitary with the class-minimal ZZPhase count."""
    kak = kak_decompose(u)
    gates: list[XGate] = [u1(q0, kak.a0), u1(q1, kak.b0)]
    paulis: list[int] = []
    for axis, c in enumerate(kak.coeffs):
        r, m = _reduce(c)
        if m % 2:
            paulis.append(axis)
        if abs(r) <= CLASS_TOL:
            continue
        b = _BASIS[axis]
        # exp(i r ZZ) = ZZPhase(-2 r / pi)
        gates += [u1(q0, b.conj().T), u1(q1, b.conj().T)]
        gates.append(xgate("ZZPhase", q0, q1, params=(-2.0 * r / math.pi,)))
        gates += [u1(q0, b), u1(q1, b)]
    for axis in paulis:
        # exp(i pi/2 ss) = i (s x s)
        gates += [u1(q0, _PAULI[axis]), u1(q1, _PAULI[axis])]
    gates += [u1(q0, kak.a1), u1(q1, kak.b1)]
    return gates


def kak_synthesize(u: np.ndarray) -> Circuit:
    """Native two-qubit circuit for ``u``: 0-3 ZZPhase depending on the Weyl class."""
    return rebase(2, kak_gates(u))

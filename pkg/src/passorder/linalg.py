"""Small dense-matrix helpers shared by the circuit IR and the synthesis code.

All angles are in half-turns (units of pi).
"""

from __future__ import annotations

import math

import numpy as np

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
S_GATE = np.diag([1, 1j]).astype(complex)
SDG_GATE = S_GATE.conj().T
# V = sqrt(X)
V_GATE = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
VDG_GATE = V_GATE.conj().T

CZ_GATE = np.diag([1, 1, 1, -1]).astype(complex)
CX_GATE = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP_GATE = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def rz_matrix(a: float) -> np.ndarray:
    t = 0.5 * math.pi * a
    return np.array([[np.exp(-1j * t), 0], [0, np.exp(1j * t)]], dtype=complex)


def rx_matrix(a: float) -> np.ndarray:
    t = 0.5 * math.pi * a
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def phasedx_matrix(a: float, b: float) -> np.ndarray:
    """Rz(b) Rx(a) Rz(-b)."""
    return rz_matrix(b) @ rx_matrix(a) @ rz_matrix(-b)


def zzphase_matrix(a: float) -> np.ndarray:
    t = 0.5 * math.pi * a
    p, m = np.exp(-1j * t), np.exp(1j * t)
    return np.diag([p, m, m, p]).astype(complex)


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol)


def phase_invariant_distance(u: np.ndarray, v: np.ndarray) -> float:
    """sqrt(max(0, 1 - |tr(U^dag V)| / d)).

    Evaluated as ||e^{i phi} U - V||_F / sqrt(2 d) with phi = arg tr(U^dag V),
    which is the same quantity but does not lose precision to cancellation
    when the two matrices are close.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    d = u.shape[0]
    tr = np.vdot(u, v)  # sum(conj(u) * v) == tr(U^dag V)
    if abs(tr) < 1e-300:
        return 1.0
    phase = tr / abs(tr)
    diff = np.linalg.norm(phase * u - v)
    return float(min(1.0, diff / math.sqrt(2 * d)))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via Ginibre sampling and phase-corrected QR."""
    if dim < 2:
        raise ValueError("dim must be at least 2")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def euler_decompose_1q(u: np.ndarray, tol: float = 1e-10) -> tuple[tuple[float, float], float]:
    """Split a 2x2 unitary into PhasedX(alpha, beta) followed by Rz(gamma).

    Returns ``((alpha, beta), gamma)`` in half-turns with
    ``u ~ rz(gamma) @ phasedx(alpha, beta)`` up to global phase. Angles are
    not canonicalised here.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u, tol):
        raise ValueError("euler_decompose_1q expects a 2x2 unitary")
    det = np.linalg.det(u)
    u = u / np.sqrt(det)
    # u = Rz(A) Rx(B) Rz(C) (radians)
    b = 2.0 * math.atan2(abs(u[1, 0]), abs(u[0, 0]))
    if abs(u[1, 1]) > 1e-14:
        apc = 2.0 * float(np.angle(u[1, 1]))
    else:
        apc = 0.0
    if abs(u[1, 0]) > 1e-14:
        amc = 2.0 * (float(np.angle(u[1, 0])) + 0.5 * math.pi)
    else:
        amc = 0.0
    a = 0.5 * (apc + amc)
    c = 0.5 * (apc - amc)
    alpha = b / math.pi
    beta = -c / math.pi
    gamma = (a + c) / math.pi
    return (alpha, beta), gamma


def kron_factor(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Factor a 4x4 matrix close to A (x) B into unitary A and B (phases arbitrary)."""
    t = np.asarray(k, dtype=complex).reshape(2, 2, 2, 2)
    # t[a, b, a', b'] = A[a, a'] B[b, b']
    r = t.transpose(0, 2, 1, 3).reshape(4, 4)
    uu, s, vh = np.linalg.svd(r)
    a = uu[:, 0].reshape(2, 2) * math.sqrt(s[0])
    b = vh[0, :].reshape(2, 2) * math.sqrt(s[0])
    a = a / math.sqrt(abs(np.linalg.det(a)))
    b = b / math.sqrt(abs(np.linalg.det(b)))
    return a, b


def apply_matrix(state: np.ndarray, mat: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """Apply ``mat`` on ``qubits`` of a tensor of shape (2,)*n + (m,).

    Qubit 0 is the most significant axis.
    """
    k = len(qubits)
    g = mat.reshape((2,) * (2 * k))
    out_axes = list(range(k))
    in_axes = list(range(k, 2 * k))
    res = np.tensordot(g, state, axes=(in_axes, list(qubits)))
    # tensordot puts gate output axes first; move them back into place
    return np.moveaxis(res, out_axes, list(qubits))

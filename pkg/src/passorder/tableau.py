"""Stabiliser tableaux for Clifford circuits.

A Pauli operator is stored as ``i**r * prod_j X_j**x_j Z_j**z_j`` with the
product taken in qubit order; ``r`` is kept mod 4. A tableau stores the images
``U X_i U^dag`` (rows 0..n-1) and ``U Z_i U^dag`` (rows n..2n-1) in that form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuit import Circuit, Gate, XGate, is_clifford, rebase, xgate
from .linalg import PAULI_X, PAULI_Z


@dataclass(frozen=True)
class PauliString:
    x: np.ndarray
    z: np.ndarray
    r: int = 0

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def phase(self) -> complex:
        return 1j**self.r

    @classmethod
    def from_label(cls, label: str, sign: int = 1) -> "PauliString":
        """``"XIZY"`` style label, qubit 0 first; ``sign`` multiplies the Hermitian operator."""
        x = np.array([ch in "XY" for ch in label], dtype=np.uint8)
        z = np.array([ch in "ZY" for ch in label], dtype=np.uint8)
        r = int(np.sum(x & z)) + (0 if sign > 0 else 2)
        return cls(x, z, r % 4)

    def label(self) -> str:
        return "".join("IXZY"[int(a) + 2 * int(b)] for a, b in zip(self.x, self.z))

    @property
    def sign(self) -> int:
        """+1/-1 for Hermitian strings (coefficient of the XYZ-letter form)."""
        k = (self.r - int(np.sum(self.x & self.z))) % 4
        if k == 0:
            return 1
        if k == 2:
            return -1
        raise ValueError("Pauli string is not Hermitian")

    def matrix(self) -> np.ndarray:
        m = np.array([[1.0 + 0j]])
        for a, b in zip(self.x, self.z):
            f = np.eye(2, dtype=complex)
            if a:
                f = f @ PAULI_X
            if b:
                f = f @ PAULI_Z
            m = np.kron(m, f)
        return self.phase * m

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self.r % 4 == other.r % 4
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    __hash__ = None  # type: ignore[assignment]


def pauli_product(a: PauliString, b: PauliString) -> PauliString:
    r = a.r + b.r + 2 * int(np.sum(a.z & b.x))
    return PauliString(a.x ^ b.x, a.z ^ b.z, r % 4)


def commutes(a: PauliString, b: PauliString) -> bool:
    return (int(np.sum(a.x & b.z)) + int(np.sum(a.z & b.x))) % 2 == 0


@dataclass(frozen=True)
class Tableau:
    n: int
    x: np.ndarray  # (2n, n) uint8
    z: np.ndarray  # (2n, n) uint8
    r: np.ndarray  # (2n,) int64, mod 4

    @classmethod
    def identity(cls, n: int) -> "Tableau":
        x = np.zeros((2 * n, n), dtype=np.uint8)
        z = np.zeros((2 * n, n), dtype=np.uint8)
        x[np.arange(n), np.arange(n)] = 1
        z[n + np.arange(n), np.arange(n)] = 1
        return cls(n, x, z, np.zeros(2 * n, dtype=np.int64))

    def row(self, i: int) -> PauliString:
        return PauliString(self.x[i].copy(), self.z[i].copy(), int(self.r[i]) % 4)

    def copy(self) -> "Tableau":
        return Tableau(self.n, self.x.copy(), self.z.copy(), self.r.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tableau):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.r % 4, other.r % 4)
        )

    __hash__ = None  # type: ignore[assignment]

    def is_identity(self) -> bool:
        return self == Tableau.identity(self.n)

    def is_symplectic(self) -> bool:
        n = self.n
        lam = (self.x.astype(np.int64) @ self.z.T.astype(np.int64) + self.z.astype(np.int64) @ self.x.T.astype(np.int64)) % 2
        want = np.zeros((2 * n, 2 * n), dtype=np.int64)
        want[np.arange(n), n + np.arange(n)] = 1
        want[n + np.arange(n), np.arange(n)] = 1
        if not np.array_equal(lam, want):
            return False
        herm = (self.r - np.sum(self.x & self.z, axis=1)) % 2
        return not np.any(herm)


# --------------------------------------------------------------------------
# Local conjugation tables


def _decompose_local(m: np.ndarray, k: int) -> tuple[tuple[int, ...], tuple[int, ...], int]:
    """Write a k-qubit matrix as i^r X^x Z^z; raises if it is not a Pauli."""
    dim = 2**k
    for bits in itertools.product((0, 1), repeat=2 * k):
        xs, zs = bits[:k], bits[k:]
        p = PauliString(np.array(xs, dtype=np.uint8), np.array(zs, dtype=np.uint8), 0).matrix()
        coeff = np.trace(p.conj().T @ m) / dim
        if abs(abs(coeff) - 1) < 1e-8:
            for r in range(4):
                if abs(coeff - 1j**r) < 1e-8:
                    return xs, zs, r
    raise ValueError("matrix does not conjugate Paulis to Paulis; gate is not Clifford")


def conjugation_table(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """For every local Pauli index, the image under ``mat . P . mat^dag``.

    Index of X^x Z^z on k qubits is ``sum_j x_j 2^j + z_j 2^(k+j)``.
    Returns (x_out, z_out, r_out) arrays of shape (4^k, k), (4^k, k), (4^k,).
    """
    mat = np.asarray(mat, dtype=complex)
    k = int(round(np.log2(mat.shape[0])))
    size = 4**k
    xo = np.zeros((size, k), dtype=np.uint8)
    zo = np.zeros((size, k), dtype=np.uint8)
    ro = np.zeros(size, dtype=np.int64)
    for idx in range(size):
        xs = [(idx >> j) & 1 for j in range(k)]
        zs = [(idx >> (k + j)) & 1 for j in range(k)]
        p = PauliString(np.array(xs, dtype=np.uint8), np.array(zs, dtype=np.uint8), 0).matrix()
        xo[idx], zo[idx], ro[idx] = _decompose_local(mat @ p @ mat.conj().T, k)
    return xo, zo, ro


@lru_cache(maxsize=4096)
def _table_for(kind: str, params: tuple[float, ...], inverse: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mat = XGate(kind, tuple(range(2 if kind in ("ZZPhase", "CX", "CZ", "SWAP") else 1)), params).unitary()
    if inverse:
        mat = mat.conj().T
    return conjugation_table(mat)


def _gate_table(g: Gate | XGate, inverse: bool = False):
    if isinstance(g, Gate):
        if not is_clifford(g):
            raise ValueError(f"non-Clifford gate {g}")
        params = tuple(round(p * 2) / 2 for p in g.params)
    else:
        if g.kind == "U1":
            raise ValueError("U1 gates are not tabulated")
        params = g.params
    return _table_for(g.kind, params, inverse)


def _conjugate_rows(x: np.ndarray, z: np.ndarray, r: np.ndarray, table, qubits: tuple[int, ...]) -> None:
    """In-place conjugation of every row by a gate on ``qubits``."""
    xo, zo, ro = table
    k = len(qubits)
    idx = np.zeros(x.shape[0], dtype=np.int64)
    for j, q in enumerate(qubits):
        idx += x[:, q].astype(np.int64) << j
        idx += z[:, q].astype(np.int64) << (k + j)
    # local factor sits inside the qubit-ordered product; reordering it past
    # the other factors is free because they act on different qubits, but the
    # local X^x Z^z ordering per qubit is what the table indexes
    for j, q in enumerate(qubits):
        x[:, q] = xo[idx, j]
        z[:, q] = zo[idx, j]
    r += ro[idx]
    # local product over gate qubits is ordered by position in ``qubits``;
    # when that differs from qubit order the factors still commute (distinct
    # qubits), so no extra sign arises
    r %= 4


def apply_gate(t: Tableau, g: Gate | XGate) -> Tableau:
    """Tableau of (g after t)."""
    out = t.copy()
    _conjugate_rows(out.x, out.z, out.r, _gate_table(g), g.qubits)
    return out


def _apply_inplace(t: Tableau, g: Gate | XGate) -> None:
    _conjugate_rows(t.x, t.z, t.r, _gate_table(g), g.qubits)


def tableau_from_circuit(c: Circuit) -> Tableau:
    t = Tableau.identity(c.n_qubits)
    for g in c.gates:
        if not is_clifford(g):
            raise ValueError(f"non-Clifford gate {g} in circuit")
        _apply_inplace(t, g)
    return t


def conjugate_pauli(t: Tableau, p: PauliString) -> PauliString:
    """U p U^dag for the Clifford U represented by ``t``."""
    if p.n != t.n:
        raise ValueError(f"size mismatch: tableau on {t.n} qubits, Pauli on {p.n}")
    n = t.n
    out = PauliString(np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8), p.r)
    for j in range(n):
        if p.x[j]:
            out = pauli_product(out, t.row(j))
        if p.z[j]:
            out = pauli_product(out, t.row(n + j))
    return out


class InverseTableau:
    """Maintains the tableau of U^-1 while gates are appended to U.

    ``pull_back(p)`` returns U^dag p U, which is how a rotation placed after U
    is moved in front of it.
    """

    def __init__(self, n: int) -> None:
        self.t = Tableau.identity(n)

    def append(self, g: Gate | XGate) -> None:
        # (G U)^-1 = U^-1 G^-1: prepend G^-1, so rows for the gate's qubits
        # become U^-1 (G^-1 g G) U
        n = self.t.n
        xo, zo, ro = _gate_table(g, inverse=True)
        k = len(g.qubits)
        new_rows = {}
        for j, q in enumerate(g.qubits):
            for is_z in (0, 1):
                idx = 1 << (j + k * is_z)
                local = PauliString(np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8), int(ro[idx]))
                for jj, qq in enumerate(g.qubits):
                    local.x[qq] = xo[idx, jj]
                    local.z[qq] = zo[idx, jj]
                new_rows[(q, is_z)] = conjugate_pauli(self.t, local)
        for (q, is_z), p in new_rows.items():
            row = q + n * is_z
            self.t.x[row] = p.x
            self.t.z[row] = p.z
            self.t.r[row] = p.r

    def pull_back(self, p: PauliString) -> PauliString:
        return conjugate_pauli(self.t, p)


# --------------------------------------------------------------------------
# Synthesis


def _synthesis_gates(t: Tableau) -> list[XGate]:
    """Extended-gate circuit realising ``t`` (Aaronson-Gottesman style staging).

    Gates G_1..G_k are appended to ``t`` until it becomes the identity; the
    realisation is then G_k^dag ... G_1^dag in circuit order.
    """
    if not t.is_symplectic():
        raise ValueError("tableau is not symplectic")
    n = t.n
    w = t.copy()
    applied: list[XGate] = []

    def app(kind: str, *qs: int) -> None:
        g = xgate(kind, *qs)
        _apply_inplace(w, g)
        applied.append(g)

    for i in range(n):
        xr, zr = i, n + i
        # destabiliser row i -> X_i
        if not w.x[xr, i]:
            js = [j for j in range(i + 1, n) if w.x[xr, j]]
            if js:
                app("CX", js[0], i)
            else:
                js = [j for j in range(i, n) if w.z[xr, j]]
                j = js[0]
                app("H", j)
                if j != i:
                    app("CX", j, i)
        for j in range(i + 1, n):
            if w.x[xr, j]:
                app("CX", i, j)
        # X_i Z_j -> X_i under CZ(i, j); Y_i -> X_i under S
        for j in range(i + 1, n):
            if w.z[xr, j]:
                app("CZ", i, j)
        if w.z[xr, i]:
            app("S", i)
        # stabiliser row i -> Z_i while keeping X_i fixed
        for j in range(i + 1, n):
            if w.z[zr, j]:
                app("CX", j, i)
        if any(w.x[zr, j] for j in range(i, n)):
            app("H", i)
            for j in range(i + 1, n):
                if w.x[zr, j]:
                    app("CX", i, j)
            if w.z[zr, i]:
                app("S", i)
            app("H", i)
    for i in range(n):
        if w.r[i] % 4 == 2:
            app("Z", i)
        if w.r[n + i] % 4 == 2:
            app("X", i)
    if not w.is_identity():
        raise RuntimeError("tableau reduction did not reach the identity")
    inverse = {"S": "Sdg", "Sdg": "S"}
    return [xgate(inverse.get(g.kind, g.kind), *g.qubits) for g in reversed(applied)]


def tableau_synthesize(t: Tableau) -> Circuit:
    return rebase(t.n, _synthesis_gates(t))

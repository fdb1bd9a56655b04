"""Circuit IR over the {Rz, PhasedX, ZZPhase} native gateset.

Angles are stored in half-turns and canonicalised into [0, 2); global phase
is ignored throughout. Passes build intermediate circuits from
:class:`XGate` (an extended gateset with Clifford aliases and raw 2x2
matrices) and call :func:`rebase` to get back to native gates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import linalg

NATIVE_KINDS = ("Rz", "PhasedX", "ZZPhase")
ARITY = {"Rz": 1, "PhasedX": 1, "ZZPhase": 2}
N_PARAMS = {"Rz": 1, "PhasedX": 2, "ZZPhase": 1}

SNAP_TOL = 1e-12
CLIFFORD_TOL = 1e-10


def canonicalize_angle(a: float) -> float:
    """Reduce an angle in half-turns to [0, 2), snapping near-multiples of 0.5."""
    a = float(a)
    if not math.isfinite(a):
        raise ValueError(f"non-finite angle: {a}")
    r = math.fmod(a, 2.0)
    if r < 0:
        r += 2.0
    q = round(r * 2.0) / 2.0
    if abs(r - q) <= SNAP_TOL:
        r = q
    if r >= 2.0:
        r = 0.0
    return r


def _is_multiple(a: float, m: float, tol: float = CLIFFORD_TOL) -> bool:
    q = a / m
    return abs(q - round(q)) * m <= tol


@dataclass(frozen=True, slots=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {ARITY[self.kind]} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"{self.kind} has repeated qubits {self.qubits}")
        if len(self.params) != N_PARAMS[self.kind]:
            raise ValueError(f"{self.kind} takes {N_PARAMS[self.kind]} parameter(s)")

    @classmethod
    def make(cls, kind: str, qubits: Iterable[int], params: Iterable[float]) -> "Gate":
        """Build a gate with canonicalised angles."""
        return cls(kind, tuple(int(q) for q in qubits), tuple(canonicalize_angle(p) for p in params))

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def matrix(self) -> np.ndarray:
        if self.kind == "Rz":
            return linalg.rz_matrix(self.params[0])
        if self.kind == "PhasedX":
            return linalg.phasedx_matrix(*self.params)
        return linalg.zzphase_matrix(self.params[0])


def Rz(q: int, a: float) -> Gate:
    return Gate.make("Rz", (q,), (a,))


def PhasedX(q: int, a: float, b: float) -> Gate:
    return Gate.make("PhasedX", (q,), (a, b))


def ZZPhase(q0: int, q1: int, a: float) -> Gate:
    return Gate.make("ZZPhase", (q0, q1), (a,))


def is_clifford(g: Gate) -> bool:
    if g.kind == "PhasedX":
        a, b = g.params
        return _is_multiple(a, 2.0) or (_is_multiple(a, 0.5) and _is_multiple(b, 0.5))
    return _is_multiple(g.params[0], 0.5)


@dataclass(frozen=True, slots=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.n_qubits < 0:
            raise ValueError("negative qubit count")
        if not isinstance(self.gates, tuple):
            object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.n_qubits:
                    raise ValueError(f"qubit {q} out of range for width {self.n_qubits}")

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("width mismatch")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def wire_gates(self) -> list[list[int]]:
        """Gate indices touching each wire, in circuit order."""
        wires: list[list[int]] = [[] for _ in range(self.n_qubits)]
        for i, g in enumerate(self.gates):
            for q in g.qubits:
                wires[q].append(i)
        return wires


def two_qubit_count(c: Circuit) -> int:
    return sum(1 for g in c.gates if g.kind == "ZZPhase")


# --------------------------------------------------------------------------
# Extended gateset used inside passes.

_ALIAS_1Q = {
    "H": linalg.HADAMARD,
    "S": linalg.S_GATE,
    "Sdg": linalg.SDG_GATE,
    "X": linalg.PAULI_X,
    "Y": linalg.PAULI_Y,
    "Z": linalg.PAULI_Z,
    "V": linalg.V_GATE,
    "Vdg": linalg.VDG_GATE,
}
_ALIAS_2Q = ("CX", "CZ", "SWAP")


@dataclass(frozen=True, slots=True)
class XGate:
    """Gate in the extended gateset: native kinds, Clifford aliases, or ``U1``.

    ``U1`` carries an explicit 2x2 unitary in ``matrix``.
    """

    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    matrix: np.ndarray | None = field(default=None, compare=False)

    def unitary(self) -> np.ndarray:
        if self.kind in ARITY:
            return Gate(self.kind, self.qubits, self.params).matrix()
        if self.kind in _ALIAS_1Q:
            return _ALIAS_1Q[self.kind]
        if self.kind == "U1":
            return self.matrix
        if self.kind == "CX":
            return linalg.CX_GATE
        if self.kind == "CZ":
            return linalg.CZ_GATE
        if self.kind == "SWAP":
            return linalg.SWAP_GATE
        raise ValueError(f"unknown extended gate kind {self.kind!r}")


def xgate(kind: str, *qubits: int, params: Sequence[float] = ()) -> XGate:
    return XGate(kind, tuple(qubits), tuple(params))


def u1(q: int, mat: np.ndarray) -> XGate:
    return XGate("U1", (q,), (), np.asarray(mat, dtype=complex))


def as_xgates(c: Circuit) -> list[XGate]:
    return [XGate(g.kind, g.qubits, g.params) for g in c.gates]


def _expand(g: XGate) -> list[XGate]:
    """Rewrite two-qubit aliases into ZZPhase plus single-qubit gates."""
    if g.kind == "CZ":
        a, b = g.qubits
        # CZ = Rz(0.5) x Rz(0.5) . ZZPhase(-0.5) up to phase
        return [xgate("ZZPhase", a, b, params=(1.5,)), xgate("Rz", a, params=(0.5,)), xgate("Rz", b, params=(0.5,))]
    if g.kind == "CX":
        c, t = g.qubits
        return [xgate("H", t), *_expand(xgate("CZ", c, t)), xgate("H", t)]
    if g.kind == "SWAP":
        a, b = g.qubits
        return [*_expand(xgate("CX", a, b)), *_expand(xgate("CX", b, a)), *_expand(xgate("CX", a, b))]
    return [g]


def _is_canonical_run(run: list[XGate]) -> bool:
    kinds = [g.kind for g in run]
    if kinds not in (["Rz"], ["PhasedX"], ["PhasedX", "Rz"]):
        return False
    for g in run:
        if any(canonicalize_angle(p) != p for p in g.params):
            return False
        if g.kind == "Rz" and g.params[0] == 0.0:
            return False
        if g.kind == "PhasedX" and (g.params[0] == 0.0 or (g.params[0] == 1.0 and g.params[1] != 0.0)):
            return False
    return True


def squash_1q(run: Sequence[XGate], q: int) -> list[Gate]:
    """Replace a single-wire run by at most PhasedX followed by Rz."""
    if _is_canonical_run(list(run)):
        return [Gate(g.kind, (q,), g.params) for g in run]
    u = np.eye(2, dtype=complex)
    for g in run:
        u = g.unitary() @ u
    (alpha, beta), gamma = linalg.euler_decompose_1q(u)
    alpha = canonicalize_angle(alpha)
    out: list[Gate] = []
    gamma = canonicalize_angle(gamma)
    if alpha == 0.0:
        if gamma != 0.0:
            out.append(Gate("Rz", (q,), (gamma,)))
        return out
    if alpha == 1.0:
        # PhasedX(1, b) ~ Rz(2b) X: keep half-turn X rotations axis-aligned so
        # Clifford runs stay recognisable
        gamma = canonicalize_angle(gamma + 2.0 * beta)
        beta = 0.0
    out.append(Gate("PhasedX", (q,), (alpha, canonicalize_angle(beta))))
    if gamma != 0.0:
        out.append(Gate("Rz", (q,), (gamma,)))
    return out


def rebase(n_qubits: int, gates: Iterable[XGate | Gate]) -> Circuit:
    """Lower an extended-gateset gate list to a canonical native circuit.

    Two-qubit aliases are expanded, zero-angle ZZPhase gates dropped, and each
    maximal single-qubit run on a wire squashed to PhasedX then Rz.
    """
    pending: list[list[XGate]] = [[] for _ in range(n_qubits)]
    out: list[Gate] = []

    def flush(q: int) -> None:
        if pending[q]:
            out.extend(squash_1q(pending[q], q))
            pending[q] = []

    for g0 in gates:
        if isinstance(g0, Gate):
            g0 = XGate(g0.kind, g0.qubits, g0.params)
        if g0.kind not in ARITY and g0.kind not in _ALIAS_1Q and g0.kind not in _ALIAS_2Q and g0.kind != "U1":
            raise ValueError(f"unknown extended gate kind {g0.kind!r}")
        for q in g0.qubits:
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range for width {n_qubits}")
        for g in _expand(g0):
            if len(g.qubits) == 1:
                pending[g.qubits[0]].append(g)
                continue
            angle = canonicalize_angle(g.params[0])
            if angle == 0.0:
                continue
            a, b = g.qubits
            flush(a)
            flush(b)
            out.append(Gate("ZZPhase", (a, b), (angle,)))
    for q in range(n_qubits):
        flush(q)
    return Circuit(n_qubits, tuple(out))

"""Optimisation passes and the action registry the agent chooses from.

Every pass is a pure function ``Circuit -> Circuit`` whose output is rebased
to the native gateset. The registry fixes the action indices; ``DoNothing``
is always last.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .circuit import Circuit, Gate, XGate, canonicalize_angle, is_clifford, rebase, two_qubit_count, u1, xgate
from .linalg import HADAMARD, PAULI_X, PAULI_Y, PAULI_Z, S_GATE, apply_matrix
from .numerics import kak_gates
from .tableau import InverseTableau, PauliString, Tableau, _apply_inplace, _synthesis_gates, commutes, tableau_from_circuit

KAK = "KAKDecomposition"
CLIFFORD_RESYNTH = "CliffordResynthesis"
CLIFFORD_SIMP = "CliffordSimp"
GREEDY_PAULI = "GreedyPauliSimp"
DO_NOTHING = "DoNothing"

DEFAULT_ACTIONS = (KAK, CLIFFORD_RESYNTH, CLIFFORD_SIMP, GREEDY_PAULI, DO_NOTHING)
# passes able to delete Clifford identities before two-qubit resynthesis
CLIFFORD_REMOVING = frozenset({CLIFFORD_RESYNTH, CLIFFORD_SIMP, GREEDY_PAULI})


# --------------------------------------------------------------------------
# KAKDecomposition


def _local_unitary(gates: Sequence[Gate], qubits: tuple[int, ...]) -> np.ndarray:
    k = len(qubits)
    pos = {q: i for i, q in enumerate(qubits)}
    dim = 2**k
    u = np.eye(dim, dtype=complex).reshape((2,) * k + (dim,))
    for g in gates:
        u = apply_matrix(u, g.matrix(), tuple(pos[q] for q in g.qubits), k)
    return u.reshape(dim, dim)


def pass_kak(c: Circuit) -> Circuit:
    """Resynthesise maximal runs of gates on one qubit pair when KAK uses fewer ZZPhase."""
    n = c.n_qubits
    owner: list[int | None] = [None] * n
    blocks: dict[int, tuple[tuple[int, int], list[Gate]]] = {}
    out: list[XGate | Gate] = []
    next_id = 0

    def close(bid: int) -> None:
        pair, gates = blocks.pop(bid)
        for q in pair:
            owner[q] = None
        old = sum(1 for g in gates if g.kind == "ZZPhase")
        new_gates = kak_gates(_local_unitary(gates, pair), pair[0], pair[1])
        new = sum(1 for g in new_gates if g.kind == "ZZPhase")
        out.extend(new_gates if new < old else gates)

    for g in c.gates:
        if g.arity == 1:
            bid = owner[g.qubits[0]]
            if bid is None:
                out.append(g)
            else:
                blocks[bid][1].append(g)
            continue
        a, b = g.qubits
        if owner[a] is not None and owner[a] == owner[b]:
            blocks[owner[a]][1].append(g)
            continue
        for q in (a, b):
            if owner[q] is not None:
                close(owner[q])
        blocks[next_id] = ((a, b), [g])
        owner[a] = owner[b] = next_id
        next_id += 1
    for bid in sorted(blocks):
        close(bid)
    return rebase(n, out)


# --------------------------------------------------------------------------
# CliffordResynthesis


def pass_clifford_resynth(c: Circuit) -> Circuit:
    """Resynthesise maximal connected Clifford regions through their tableau.

    A replacement is kept only when it lowers (ZZPhase count, gate count).
    """
    n = c.n_qubits
    region_of: list[int | None] = [None] * n
    regions: dict[int, tuple[set[int], list[Gate]]] = {}
    out: list[XGate | Gate] = []
    next_id = 0

    def close(rid: int) -> None:
        wires, gates = regions.pop(rid)
        for q in wires:
            region_of[q] = None
        old_zz = sum(1 for g in gates if g.kind == "ZZPhase")
        if old_zz == 0:
            out.extend(gates)
            return
        order = sorted(wires)
        pos = {q: i for i, q in enumerate(order)}
        local = Circuit(len(order), tuple(Gate(g.kind, tuple(pos[q] for q in g.qubits), g.params) for g in gates))
        synth = rebase(len(order), _synthesis_gates(tableau_from_circuit(local)))
        if (two_qubit_count(synth), len(synth)) < (old_zz, len(gates)):
            out.extend(Gate(g.kind, tuple(order[q] for q in g.qubits), g.params) for g in synth.gates)
        else:
            out.extend(gates)

    for g in c.gates:
        if not is_clifford(g):
            for q in g.qubits:
                if region_of[q] is not None:
                    close(region_of[q])
            out.append(g)
            continue
        ids = sorted({region_of[q] for q in g.qubits if region_of[q] is not None})
        if not ids:
            rid = next_id
            next_id += 1
            regions[rid] = (set(), [])
        else:
            rid = ids[0]
            for other in ids[1:]:
                wires, gates = regions.pop(other)
                regions[rid][0].update(wires)
                regions[rid][1].extend(gates)
        wires, gates = regions[rid]
        wires.update(g.qubits)
        gates.append(g)
        for q in wires:
            region_of[q] = rid
    for rid in sorted(regions):
        close(rid)
    return rebase(n, out)


# --------------------------------------------------------------------------
# CliffordSimp


_DIAGONAL = ("Rz", "ZZPhase")


def _merge_zz_sweep(gates: list[Gate]) -> bool:
    """Merge same-pair ZZPhase gates separated only by diagonal gates (in place)."""
    n_wires = 1 + max((q for g in gates for q in g.qubits), default=0)
    wires: list[list[int]] = [[] for _ in range(n_wires)]
    pos_on_wire: list[dict[int, int]] = [{} for _ in range(n_wires)]
    for i, g in enumerate(gates):
        for q in g.qubits:
            pos_on_wire[q][i] = len(wires[q])
            wires[q].append(i)
    alive = [True] * len(gates)
    changed = False

    def next_partner(i: int, q: int, pair: frozenset[int]) -> int | None:
        seq = wires[q]
        for j in seq[pos_on_wire[q][i] + 1 :]:
            if not alive[j]:
                continue
            g = gates[j]
            if g.kind == "ZZPhase" and frozenset(g.qubits) == pair:
                return j
            if g.kind in _DIAGONAL:
                continue
            return None
        return None

    for i, g in enumerate(gates):
        if not alive[i] or g.kind != "ZZPhase":
            continue
        pair = frozenset(g.qubits)
        while True:
            ja = next_partner(i, g.qubits[0], pair)
            if ja is None or ja != next_partner(i, g.qubits[1], pair):
                break
            g = Gate.make("ZZPhase", g.qubits, (g.params[0] + gates[ja].params[0],))
            gates[i] = g
            alive[ja] = False
            changed = True
    if changed:
        gates[:] = [g for i, g in enumerate(gates) if alive[i]]
    return changed


def _clifford_angle_rules(gates: list[Gate]) -> bool:
    """Drop ZZPhase(0) and turn ZZPhase(1) into Rz(1) on both qubits."""
    out: list[Gate] = []
    changed = False
    for g in gates:
        if g.kind == "ZZPhase" and g.params[0] in (0.0, 1.0):
            changed = True
            if g.params[0] == 1.0:
                out += [Gate("Rz", (g.qubits[0],), (1.0,)), Gate("Rz", (g.qubits[1],), (1.0,))]
            continue
        out.append(g)
    gates[:] = out
    return changed


def pass_clifford_simp(c: Circuit, max_iter: int = 1000) -> Circuit:
    """Rewrite to a fixpoint: ZZPhase merging through diagonal gates, ZZPhase(0)
    removal, ZZPhase(1) localisation, and single-qubit squashing."""
    cur = rebase(c.n_qubits, c.gates)
    for _ in range(max_iter):
        gates = list(cur.gates)
        _clifford_angle_rules(gates)
        _merge_zz_sweep(gates)
        _clifford_angle_rules(gates)
        nxt = rebase(c.n_qubits, gates)
        if nxt == cur:
            break
        cur = nxt
    return cur


# --------------------------------------------------------------------------
# GreedyPauliSimp (simplified)

# B with B Z B^dag = sigma, indexed by (x, z) bits
_BASIS = {(1, 0): HADAMARD, (1, 1): S_GATE @ HADAMARD, (0, 1): np.eye(2, dtype=complex)}
_LETTER = {(1, 0): PAULI_X, (1, 1): PAULI_Y, (0, 1): PAULI_Z}


@dataclass
class Gadget:
    x: np.ndarray
    z: np.ndarray
    angle: float  # half-turns: exp(-i pi angle / 2 P)

    def key(self) -> tuple[bytes, bytes]:
        return (self.x.tobytes(), self.z.tobytes())

    def as_pauli(self) -> PauliString:
        return PauliString(self.x, self.z, int(np.sum(self.x & self.z)) % 4)


def _rotations(g: Gate) -> list[tuple[str, float]]:
    """Split a native gate into (axis, angle) rotations in circuit order."""
    if g.kind == "Rz":
        return [("Z", g.params[0])]
    if g.kind == "ZZPhase":
        return [("ZZ", g.params[0])]
    a, b = g.params
    return [("Z", -b), ("X", a), ("Z", b)]


def _is_clifford_angle(a: float) -> bool:
    return abs(a * 2 - round(a * 2)) <= 1e-10


def gadget_gates(gd: Gadget) -> list[XGate]:
    """exp(-i pi a/2 P) with a ladder of at most 2(w-1) two-qubit gates."""
    support = [q for q in range(len(gd.x)) if gd.x[q] or gd.z[q]]
    angle = canonicalize_angle(gd.angle)
    if not support or angle == 0.0:
        return []
    letters = {q: (int(gd.x[q]), int(gd.z[q])) for q in support}
    if angle == 1.0:
        # exp(-i pi/2 P) = -i P
        return [u1(q, _LETTER[letters[q]]) for q in support]
    pre = [u1(q, _BASIS[letters[q]].conj().T) for q in support if letters[q] != (0, 1)]
    post = [u1(q, _BASIS[letters[q]]) for q in support if letters[q] != (0, 1)]
    if len(support) == 1:
        core = [xgate("Rz", support[0], params=(angle,))]
    else:
        ladder = [xgate("CX", support[i], support[i + 1]) for i in range(len(support) - 2)]
        core = ladder + [xgate("ZZPhase", support[-2], support[-1], params=(angle,))] + ladder[::-1]
    return pre + core + post


def _push_gadget(gadgets: list[Gadget], new: Gadget) -> None:
    p = new.as_pauli()
    key = new.key()
    for k in range(len(gadgets) - 1, -1, -1):
        other = gadgets[k]
        if other.key() == key:
            other.angle = (other.angle + new.angle) % 2.0
            if abs(other.angle) < 1e-12 or abs(other.angle - 2.0) < 1e-12:
                del gadgets[k]
            return
        if not commutes(other.as_pauli(), p):
            break
    gadgets.append(new)


def pass_greedy_pauli(c: Circuit) -> Circuit:
    """Rewrite as Pauli-gadget rotations followed by one Clifford.

    Non-Clifford rotations are pulled in front of the accumulated Clifford
    and merged with earlier commuting gadgets on the same Pauli string. The
    result may contain more ZZPhase gates than the input.
    """
    n = c.n_qubits
    forward = Tableau.identity(n)
    inverse = InverseTableau(n)
    gadgets: list[Gadget] = []

    def clifford(g: Gate) -> None:
        _apply_inplace(forward, g)
        inverse.append(g)

    for g in c.gates:
        if is_clifford(g):
            clifford(g)
            continue
        for axis, angle in _rotations(g):
            q = g.qubits[0]
            if axis == "ZZ":
                native = Gate.make("ZZPhase", g.qubits, (angle,))
            elif axis == "Z":
                native = Gate.make("Rz", (q,), (angle,))
            else:
                native = Gate.make("PhasedX", (q,), (angle, 0.0))
            if native.params[0] == 0.0:
                continue
            if _is_clifford_angle(native.params[0]):
                clifford(native)
                continue
            p = PauliString(np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8), 0)
            for qq in g.qubits if axis == "ZZ" else (q,):
                if axis == "X":
                    p.x[qq] = 1
                else:
                    p.z[qq] = 1
            pulled = inverse.pull_back(p)
            _push_gadget(gadgets, Gadget(pulled.x, pulled.z, (pulled.sign * native.params[0]) % 2.0))
    out: list[XGate] = []
    for gd in gadgets:
        out.extend(gadget_gates(gd))
    out.extend(_synthesis_gates(forward))
    return rebase(n, out)


# --------------------------------------------------------------------------
# Registry


def do_nothing(c: Circuit) -> Circuit:
    return c


PASSES: dict[str, Callable[[Circuit], Circuit]] = {
    KAK: pass_kak,
    CLIFFORD_RESYNTH: pass_clifford_resynth,
    CLIFFORD_SIMP: pass_clifford_simp,
    GREEDY_PAULI: pass_greedy_pauli,
    DO_NOTHING: do_nothing,
}


def register_pass(name: str, fn: Callable[[Circuit], Circuit]) -> None:
    """Make an extra pass available to registries built afterwards."""
    if name in PASSES:
        raise ValueError(f"pass {name!r} already registered")
    PASSES[name] = fn


class ActionId(NamedTuple):
    index: int
    name: str


@dataclass(frozen=True)
class PassResult:
    circuit: Circuit
    changed: bool
    wall_time: float  # milliseconds


class PassRegistry:
    """Ordered action space; indices are positions in ``names``."""

    def __init__(self, names: Iterable[str] = DEFAULT_ACTIONS) -> None:
        names = tuple(names)
        if not names or names[-1] != DO_NOTHING:
            raise ValueError("DoNothing must be the last action")
        if len(set(names)) != len(names):
            raise ValueError("duplicate action names")
        for name in names:
            if name not in PASSES:
                raise ValueError(f"unknown pass {name!r}")
        self.names = names

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return (ActionId(i, n) for i, n in enumerate(self.names))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PassRegistry) and self.names == other.names

    def __repr__(self) -> str:
        return f"PassRegistry({list(self.names)})"

    @property
    def do_nothing(self) -> ActionId:
        return ActionId(len(self.names) - 1, DO_NOTHING)

    def action(self, key: int | str | ActionId) -> ActionId:
        if isinstance(key, ActionId):
            key = key.index
        if isinstance(key, str):
            if key not in self.names:
                raise KeyError(f"unknown action {key!r}; registry has {list(self.names)}")
            return ActionId(self.names.index(key), key)
        key = int(key)
        if not 0 <= key < len(self.names):
            raise KeyError(f"action index {key} out of range for {len(self.names)} actions")
        return ActionId(key, self.names[key])

    def apply(self, key: int | str | ActionId, c: Circuit) -> PassResult:
        return apply_pass(self.action(key), c)


def apply_pass(a: ActionId | str, c: Circuit) -> PassResult:
    name = a if isinstance(a, str) else a.name
    if name not in PASSES:
        raise KeyError(f"unknown action {name!r}")
    t0 = time.perf_counter()
    out = PASSES[name](c)
    ms = (time.perf_counter() - t0) * 1e3
    changed = out != c
    return PassResult(out if changed else c, changed, ms)

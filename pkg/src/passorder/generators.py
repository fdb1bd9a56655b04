"""Seeded random circuit families and dataset assembly."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .circuit import Circuit, XGate, rebase, two_qubit_count, xgate
from .linalg import haar_unitary
from .numerics import kak_gates
from .passes import Gadget, gadget_gates

RANDOM_SU4 = "Random-SU4"
RANDOM_SU8 = "Random-SU8"
IQP = "IQP"
QAOA = "QAOA"
PAULI = "Pauli"
CLIFFORD_SU4 = "Clifford-SU4"
ORDERED_CLIFFORD_SU4 = "Ordered-Clifford-SU4"
CLIFFORD_SU4_SU8 = "Clifford-SU4-SU8"

CLASSES = (
    RANDOM_SU4,
    RANDOM_SU8,
    IQP,
    QAOA,
    PAULI,
    CLIFFORD_SU4,
    ORDERED_CLIFFORD_SU4,
    CLIFFORD_SU4_SU8,
)

# size parameter per class: blocks, bundles, diagonal gates per qubit,
# layers, gadgets, segments, layers, segments
DEFAULT_SIZES = {
    RANDOM_SU4: (1, 40),
    RANDOM_SU8: (1, 6),
    IQP: (1, 4),
    QAOA: (1, 4),
    PAULI: (1, 15),
    CLIFFORD_SU4: (2, 12),
    ORDERED_CLIFFORD_SU4: (2, 5),
    CLIFFORD_SU4_SU8: (2, 10),
}

SU8_BUNDLE_DEPTH = 6


@dataclass(frozen=True)
class GenSpec:
    cls: str
    qubits: tuple[int, int] = (3, 7)
    size: tuple[int, int] | None = None
    seed: int = 0
    count: int = 1
    max_two_qubit: int | None = 215

    def __post_init__(self) -> None:
        if self.cls not in CLASSES:
            raise ValueError(f"unknown circuit class {self.cls!r}; choose from {CLASSES}")
        lo, hi = self.qubits
        if lo > hi or lo < 1:
            raise ValueError(f"empty qubit range {self.qubits}")
        if lo < 2 and self.cls != IQP:
            raise ValueError(f"{self.cls} needs at least 2 qubits")
        if self.cls in (RANDOM_SU8, CLIFFORD_SU4_SU8) and lo < 3:
            raise ValueError(f"{self.cls} needs at least 3 qubits")
        s = self.size_range
        if s[0] > s[1] or s[0] < 0:
            raise ValueError(f"empty size range {s}")

    @property
    def size_range(self) -> tuple[int, int]:
        return self.size if self.size is not None else DEFAULT_SIZES[self.cls]


# --------------------------------------------------------------------------
# building blocks (extended gates)


def _pair(n: int, rng: np.random.Generator) -> tuple[int, int]:
    a, b = rng.choice(n, size=2, replace=False)
    return int(a), int(b)


def su4_block(a: int, b: int, rng: np.random.Generator) -> list[XGate]:
    return kak_gates(haar_unitary(4, rng), a, b)


def su8_bundle(triple: Sequence[int], rng: np.random.Generator) -> list[XGate]:
    """Brickwork of Haar SU(4) blocks on a qubit triple (stand-in for SU(8))."""
    a, b, c = triple
    out: list[XGate] = []
    for layer in range(SU8_BUNDLE_DEPTH):
        out += su4_block(a, b, rng) if layer % 2 == 0 else su4_block(b, c, rng)
    return out


def clifford_stretch(qubits: Sequence[int], length: int, rng: np.random.Generator) -> list[XGate]:
    qubits = list(qubits)
    out: list[XGate] = []
    for _ in range(length):
        kind = ("H", "S", "CZ")[int(rng.integers(3))]
        if kind == "CZ" and len(qubits) >= 2:
            i, j = rng.choice(len(qubits), size=2, replace=False)
            out.append(xgate("CZ", qubits[i], qubits[j]))
        else:
            out.append(xgate(kind if kind != "CZ" else "H", qubits[int(rng.integers(len(qubits)))]))
    return out


def invert(gates: Sequence[XGate]) -> list[XGate]:
    inv = {"S": "Sdg", "Sdg": "S", "V": "Vdg", "Vdg": "V"}
    out: list[XGate] = []
    for g in reversed(gates):
        if g.kind in ("H", "X", "Y", "Z", "CX", "CZ", "SWAP"):
            out.append(g)
        elif g.kind in inv:
            out.append(xgate(inv[g.kind], *g.qubits))
        else:
            raise ValueError(f"cannot invert {g.kind}")
    return out


def _angle(rng: np.random.Generator) -> float:
    return float(rng.uniform(0.0, 2.0))


# --------------------------------------------------------------------------
# class recipes


def _random_su4(n, size, rng):
    out = []
    for _ in range(size):
        out += su4_block(*_pair(n, rng), rng)
    return out


def _random_su8(n, size, rng):
    out = []
    for _ in range(size):
        out += su8_bundle([int(q) for q in rng.choice(n, size=3, replace=False)], rng)
    return out


def iqp_parts(n: int, size: int, rng: np.random.Generator) -> tuple[list[XGate], list[float]]:
    """IQP gates plus the boundary-layer phases: PhasedX(0.5, b) . diag . PhasedX(-0.5, b)."""
    betas = [_angle(rng) for _ in range(n)]
    out = [xgate("PhasedX", q, params=(0.5, betas[q])) for q in range(n)]
    for _ in range(size * n):
        if n >= 2 and rng.random() < 0.6:
            a, b = _pair(n, rng)
            out.append(xgate("ZZPhase", a, b, params=(_angle(rng),)))
        else:
            out.append(xgate("Rz", int(rng.integers(n)), params=(_angle(rng),)))
    out += [xgate("PhasedX", q, params=(-0.5, betas[q])) for q in range(n)]
    return out, betas


def _iqp(n, size, rng):
    return iqp_parts(n, size, rng)[0]


def _qaoa(n, size, rng):
    edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.5]
    if not edges:
        edges = [_pair(n, rng)]
    out = [xgate("H", q) for q in range(n)]
    for _ in range(size):
        gamma, beta = _angle(rng), _angle(rng)
        out += [xgate("ZZPhase", a, b, params=(gamma,)) for a, b in edges]
        out += [xgate("PhasedX", q, params=(beta, 0.0)) for q in range(n)]
    return out


def _pauli(n, size, rng):
    out = []
    for _ in range(size):
        w = int(rng.integers(1, n + 1))
        support = rng.choice(n, size=w, replace=False)
        x = np.zeros(n, dtype=np.uint8)
        z = np.zeros(n, dtype=np.uint8)
        for q in support:
            letter = int(rng.integers(3))  # X, Y, Z
            x[q] = letter in (0, 1)
            z[q] = letter in (1, 2)
        out += gadget_gates(Gadget(x, z, _angle(rng)))
    return out


def _stretch_len(n, rng):
    return int(rng.integers(n, 4 * n + 1))


def _clifford_su4(n, size, rng):
    out = []
    for _ in range(size):
        if rng.random() < 0.5:
            out += clifford_stretch(range(n), _stretch_len(n, rng), rng)
        else:
            out += su4_block(*_pair(n, rng), rng)
    return out


def _ordered_clifford_su4(n, size, rng):
    perm = [int(q) for q in rng.permutation(n)]
    pairs = [(perm[2 * i], perm[2 * i + 1]) for i in range(n // 2)]
    out = []
    for layer in range(size):
        if layer:
            c = clifford_stretch(range(n), int(rng.integers(n, 3 * n + 1)), rng)
            out += c + invert(c)
        for a, b in pairs:
            out += su4_block(a, b, rng)
    return out


def _clifford_su4_su8(n, size, rng):
    out = []
    for _ in range(size):
        r = rng.random()
        if r < 0.4:
            out += clifford_stretch(range(n), _stretch_len(n, rng), rng)
        elif r < 0.8:
            out += su4_block(*_pair(n, rng), rng)
        else:
            out += su8_bundle([int(q) for q in rng.choice(n, size=3, replace=False)], rng)
    return out


_RECIPES = {
    RANDOM_SU4: _random_su4,
    RANDOM_SU8: _random_su8,
    IQP: _iqp,
    QAOA: _qaoa,
    PAULI: _pauli,
    CLIFFORD_SU4: _clifford_su4,
    ORDERED_CLIFFORD_SU4: _ordered_clifford_su4,
    CLIFFORD_SU4_SU8: _clifford_su4_su8,
}


def build(cls: str, n_qubits: int, size: int, rng: np.random.Generator) -> Circuit:
    """One circuit of ``cls`` with explicit width and size parameter."""
    if cls not in _RECIPES:
        raise ValueError(f"unknown circuit class {cls!r}")
    need = 3 if cls in (RANDOM_SU8, CLIFFORD_SU4_SU8) else (1 if cls == IQP else 2)
    if n_qubits < need:
        raise ValueError(f"{cls} needs at least {need} qubits, got {n_qubits}")
    return rebase(n_qubits, _RECIPES[cls](n_qubits, size, rng))


def generate(spec: GenSpec, rng: np.random.Generator, max_attempts: int = 100) -> Circuit:
    """Draw width and size from ``spec`` and build a circuit within its two-qubit cap."""
    for _ in range(max_attempts):
        n = int(rng.integers(spec.qubits[0], spec.qubits[1] + 1))
        lo, hi = spec.size_range
        size = int(rng.integers(lo, hi + 1))
        c = build(spec.cls, n, size, rng)
        if spec.max_two_qubit is None or two_qubit_count(c) <= spec.max_two_qubit:
            return c
    raise ValueError(f"could not generate {spec.cls} within {spec.max_two_qubit} two-qubit gates")


# --------------------------------------------------------------------------
# datasets


@dataclass
class DatasetEntry:
    circuit: Circuit
    metadata: dict = field(default_factory=dict)


def circuit_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1)[0])


def generate_entries(specs: Sequence[GenSpec], count: int | None = None, seed: int = 0, val_fraction: float = 0.1) -> list[DatasetEntry]:
    """Round-robin over ``specs``; each circuit has its own seeded substream."""
    if not specs:
        raise ValueError("no generator specs")
    if count is None:
        order: list[int] = []
        remaining = [s.count for s in specs]
        while any(remaining):
            for i, r in enumerate(remaining):
                if r:
                    order.append(i)
                    remaining[i] -= 1
    else:
        order = [i % len(specs) for i in range(count)]
    n_val = int(round(val_fraction * len(order)))
    val = set(int(i) for i in np.random.default_rng(seed).permutation(len(order))[:n_val])
    entries = []
    for idx, si in enumerate(order):
        s = specs[si]
        cs = circuit_seed(seed, idx)
        c = generate(s, np.random.default_rng(cs))
        meta = {"id": idx, "class": s.cls, "seed": cs, "split": "validation" if idx in val else "train"}
        entries.append(DatasetEntry(c, meta))
    return entries


def manifest_for(entries: Sequence[DatasetEntry], specs: Sequence[GenSpec] = (), seed: int | None = None) -> dict:
    return {
        "count": len(entries),
        "seed": seed,
        "specs": [asdict(s) for s in specs],
        "per_class": dict(sorted(Counter(e.metadata.get("class") for e in entries).items())),
        "qubit_histogram": {str(k): v for k, v in sorted(Counter(e.circuit.n_qubits for e in entries).items())},
        "two_qubit_histogram": {
            str(k): v for k, v in sorted(Counter(two_qubit_count(e.circuit) for e in entries).items())
        },
        "split": dict(sorted(Counter(e.metadata.get("split", "train") for e in entries).items())),
    }


def make_dataset(
    specs: Sequence[GenSpec],
    out_path: str | Path,
    count: int | None = None,
    seed: int = 0,
    val_fraction: float = 0.1,
) -> tuple[Path, Path]:
    """Write a JSONL dataset and its manifest (``<out>.manifest.json``)."""
    from .formats import write_dataset

    out_path = Path(out_path)
    entries = generate_entries(specs, count, seed, val_fraction)
    write_dataset(out_path, entries)
    manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest_for(entries, specs, seed), indent=2, sort_keys=True) + "\n")
    return out_path, manifest_path

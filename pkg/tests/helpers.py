"""Shared fixtures-by-function for the test suite."""

from __future__ import annotations

import numpy as np

from passorder.circuit import Circuit, Gate, PhasedX, Rz, ZZPhase


def random_circuit(n: int, n_gates: int, rng: np.random.Generator, clifford_prob: float = 0.5) -> Circuit:
    """Native circuit with a mix of Clifford and generic angles."""

    def angle() -> float:
        if rng.random() < clifford_prob:
            return 0.5 * int(rng.integers(4))
        return float(rng.uniform(0, 2))

    gates: list[Gate] = []
    for _ in range(n_gates):
        r = rng.random()
        if n >= 2 and r < 0.4:
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(ZZPhase(int(a), int(b), angle()))
        elif r < 0.7:
            gates.append(Rz(int(rng.integers(n)), angle()))
        else:
            gates.append(PhasedX(int(rng.integers(n)), angle(), angle()))
    return Circuit(n, tuple(gates))


def example_circuit(gamma=0.3, eps=0.7, delta=0.2, alpha=0.4, beta=0.9) -> Circuit:
    """Three-wire example: Rz on the bottom wire, two ZZPhase gates, an S, and a PhasedX."""
    return Circuit(
        3,
        (
            Rz(2, gamma),
            ZZPhase(0, 1, eps),
            Rz(1, 0.5),
            ZZPhase(1, 2, delta),
            PhasedX(1, alpha, beta),
        ),
    )


def random_local(rng: np.random.Generator) -> np.ndarray:
    from passorder.linalg import haar_unitary

    return np.kron(haar_unitary(2, rng), haar_unitary(2, rng))


ACCEPTANCE_LINES: list[str] = []


def record(number: int, ok: bool, detail: str) -> bool:
    line = f"[acceptance {number}] {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok

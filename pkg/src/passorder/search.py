"""Greedy and beam search over pass sequences."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .circuit import Circuit, two_qubit_count
from .passes import ActionId, PassRegistry


@dataclass(frozen=True)
class BeamConfig:
    depth: int
    width: int

    def __post_init__(self) -> None:
        if self.depth < 1 or self.width < 1:
            raise ValueError(f"depth and width must be positive, got {self.depth} and {self.width}")


@dataclass
class SearchResult:
    circuit: Circuit
    actions: list[ActionId]
    n0: int
    wall_time_ms: float = 0.0
    pass_calls: int = 0

    @property
    def n_final(self) -> int:
        return two_qubit_count(self.circuit)

    @property
    def cumulative_reward(self) -> float:
        return (self.n0 - self.n_final) / self.n0 if self.n0 else 0.0

    @property
    def pass_names(self) -> list[str]:
        return [a.name for a in self.actions]


@dataclass(order=True)
class _Node:
    key: tuple
    circuit: Circuit = field(compare=False)
    path: tuple[ActionId, ...] = field(compare=False)


def _node(c: Circuit, path: tuple[ActionId, ...]) -> _Node:
    return _Node((two_qubit_count(c), len(c), tuple(a.index for a in path)), c, path)


def greedy_search(c: Circuit, registry: PassRegistry | None = None) -> SearchResult:
    """Best single pass by (two-qubit count, gate count, action index).

    If no pass beats the input on that ordering, the input comes back with
    DoNothing.
    """
    registry = registry or PassRegistry()
    t0 = time.perf_counter()
    best = _node(c, ())
    calls = 0
    for a in registry:
        if a == registry.do_nothing:
            continue
        calls += 1
        child = _node(registry.apply(a, c).circuit, (a,))
        if child.key[:2] < best.key[:2]:
            best = child
    path = list(best.path) or [registry.do_nothing]
    return SearchResult(best.circuit, path, two_qubit_count(c), (time.perf_counter() - t0) * 1e3, calls)


def beam_search(c: Circuit, cfg: BeamConfig, registry: PassRegistry | None = None) -> SearchResult:
    """Depth-limited beam search; the best node over every level wins, root included."""
    registry = registry or PassRegistry()
    t0 = time.perf_counter()
    beam = [_node(c, ())]
    best = beam[0]
    calls = 0
    for _ in range(cfg.depth):
        children = []
        for node in beam:
            for a in registry:
                if a == registry.do_nothing:
                    out = node.circuit
                else:
                    out = registry.apply(a, node.circuit).circuit
                    calls += 1
                children.append(_node(out, node.path + (a,)))
        children.sort()
        beam = children[: cfg.width]
        best = min(best, beam[0])
    return SearchResult(best.circuit, list(best.path), two_qubit_count(c), (time.perf_counter() - t0) * 1e3, calls)

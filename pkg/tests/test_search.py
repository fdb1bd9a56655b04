import itertools

import numpy as np
import pytest

from helpers import random_circuit
from passorder.circuit import Circuit, PhasedX, ZZPhase, rebase, two_qubit_count
from passorder.generators import CLIFFORD_SU4, ORDERED_CLIFFORD_SU4, GenSpec, generate
from passorder.linalg import phase_invariant_distance
from passorder.numerics import circuit_unitary
from passorder.passes import DO_NOTHING, KAK, PassRegistry
from passorder.search import BeamConfig, beam_search, greedy_search

REG = PassRegistry()


def small_circuits(k, seed=0):
    rng = np.random.default_rng(seed)
    specs = [GenSpec(CLIFFORD_SU4, qubits=(3, 4), size=(2, 5)), GenSpec(ORDERED_CLIFFORD_SU4, qubits=(3, 4), size=(2, 3))]
    return [generate(specs[i % 2], rng) for i in range(k)]


def test_beam_config_validation():
    with pytest.raises(ValueError):
        BeamConfig(0, 3)
    with pytest.raises(ValueError):
        BeamConfig(2, 0)


def test_greedy_picks_unique_improver():
    # two same-pair blocks separated by a non-Clifford rotation: only KAK merges them
    c = rebase(2, [ZZPhase(0, 1, 0.3), PhasedX(0, 0.3, 0.1), ZZPhase(0, 1, 0.7), PhasedX(1, 0.2, 0.4), ZZPhase(0, 1, 0.1),
                   PhasedX(0, 0.7, 0.9), ZZPhase(0, 1, 0.45)])
    res = greedy_search(c)
    assert res.pass_names == [KAK]
    assert res.n_final < two_qubit_count(c)


def test_greedy_no_improvement_returns_input():
    c = Circuit(2, (ZZPhase(0, 1, 0.3),))
    res = greedy_search(c)
    assert res.circuit is c and res.pass_names == [DO_NOTHING]
    assert res.cumulative_reward == 0.0


def test_greedy_equals_depth_one_full_width():
    for c in small_circuits(20, seed=1):
        g = greedy_search(c)
        b = beam_search(c, BeamConfig(1, len(REG)))
        assert g.circuit == b.circuit
        assert g.pass_names == (b.pass_names or [DO_NOTHING])


def _exhaustive(c):
    best = (two_qubit_count(c), len(c))
    for seq in itertools.product(list(REG), repeat=2):
        out = c
        for a in seq:
            out = REG.apply(a, out).circuit
            best = min(best, (two_qubit_count(out), len(out)))
    return best


def test_depth_two_matches_exhaustive():
    for c in small_circuits(20, seed=2):
        b = beam_search(c, BeamConfig(2, len(REG) ** 2))
        assert (b.n_final, len(b.circuit)) == _exhaustive(c)


def test_beam_never_worse_and_preserves_unitary():
    rng = np.random.default_rng(3)
    for _ in range(10):
        c = rebase(3, random_circuit(3, 25, rng).gates)
        b = beam_search(c, BeamConfig(3, 2))
        assert b.n_final <= two_qubit_count(c)
        assert phase_invariant_distance(circuit_unitary(c), circuit_unitary(b.circuit)) < 1e-7
        assert len(b.actions) <= 3


def test_search_is_deterministic():
    for c in small_circuits(5, seed=4):
        a = beam_search(c, BeamConfig(3, 3))
        b = beam_search(c, BeamConfig(3, 3))
        assert a.circuit == b.circuit and a.pass_names == b.pass_names and a.pass_calls == b.pass_calls


def test_pass_call_count_grows_with_width():
    c = small_circuits(1, seed=5)[0]
    calls = [beam_search(c, BeamConfig(3, m)).pass_calls for m in (1, 2, 4)]
    assert calls[0] < calls[1] < calls[2]

import numpy as np
import pytest

from helpers import example_circuit, random_circuit
from passorder.circuit import Circuit
from passorder.encoding import batch, encode, unbatch
from passorder.passes import PassRegistry


def test_example_counts_and_edge_vector():
    c = example_circuit()
    obs = encode(c)
    assert obs.n_nodes == 11 and obs.n_edges == 10
    # ZZPhase(eps) is gate 1, node 3 + 1; its top-wire output is node 3 + 5 + 0
    zz, out = 4, 8
    row = [i for i, (s, d) in enumerate(obs.edge_index) if s == zz and d == out]
    assert len(row) == 1
    assert obs.edge_features[row[0]].tolist() == [0, 0, 1, 0, 1, 0, 0, 0]


def test_example_node_features():
    c = example_circuit(gamma=0.3, eps=0.7, delta=0.2, alpha=0.4, beta=0.9)
    nf = encode(c, PassRegistry().action("CliffordSimp")).node_features
    assert nf[:3, 0].tolist() == [1, 1, 1] and nf[8:, 1].tolist() == [1, 1, 1]
    assert nf[3, 2] == pytest.approx(0.15)
    assert nf[4, 5] == pytest.approx(0.35)
    assert nf[5, 2] == pytest.approx(0.25) and nf[5, 6] == 1.0
    assert nf[7, 3:5].tolist() == pytest.approx([0.2, 0.45])
    assert np.all(nf[:, 7] == 2)
    assert np.all(encode(c).node_features[:, 7] == -1)


def test_empty_one_qubit_circuit():
    obs = encode(Circuit(1))
    assert obs.n_nodes == 2 and obs.n_edges == 1
    assert obs.node_features[0, 0] == 1 and obs.node_features[1, 1] == 1
    assert obs.edge_features[0].tolist() == [1, 0, 0, 0, 1, 0, 0, 0]


def test_count_formulas_and_exclusivity():
    rng = np.random.default_rng(0)
    for _ in range(200):
        c = random_circuit(int(rng.integers(1, 7)), int(rng.integers(0, 50)), rng)
        obs = encode(c, int(rng.integers(-1, 5)))
        assert obs.n_nodes == len(c.gates) + 2 * c.n_qubits
        assert obs.n_edges == sum(g.arity for g in c.gates) + c.n_qubits
        nf = obs.node_features
        assert set(np.unique(nf[:, [0, 1, 6]])) <= {0.0, 1.0}
        blocks = np.stack([nf[:, 2] != 0, (nf[:, 3] != 0) | (nf[:, 4] != 0), nf[:, 5] != 0], axis=1)
        assert np.all(blocks.sum(axis=1) <= 1)
        assert np.all(nf[:, 0] + nf[:, 1] + blocks.any(axis=1) <= 1)
        assert np.all((nf[:, 2:6] >= 0) & (nf[:, 2:6] < 1))
        ef = obs.edge_features
        assert np.all(ef[:, :4].sum(axis=1) == 1) and np.all(ef[:, 4:].sum(axis=1) == 1)


def test_batch_round_trip_and_graph_ids():
    rng = np.random.default_rng(1)
    a = encode(Circuit(1, ()))
    a3 = encode(random_circuit(1, 1, rng))
    assert a3.n_nodes == 3
    b5 = encode(random_circuit(1, 3, rng))
    b = batch([a3, b5])
    assert b.graph_id.tolist() == [0, 0, 0, 1, 1, 1, 1, 1]
    assert unbatch(batch([a])) == [a]
    obs = [encode(random_circuit(3, int(rng.integers(0, 20)), rng)) for _ in range(6)]
    assert unbatch(batch(obs)) == obs
    with pytest.raises(ValueError):
        batch([])


def test_batched_pooling_matches_per_graph():
    rng = np.random.default_rng(2)
    obs = [encode(random_circuit(4, int(rng.integers(0, 30)), rng)) for _ in range(5)]
    b = batch(obs)
    sums = np.zeros((b.n_graphs, 8))
    np.add.at(sums, b.graph_id, b.node_features)
    pooled = sums / b.node_counts[:, None]
    for g, o in enumerate(obs):
        assert np.allclose(pooled[g], o.node_features.mean(axis=0), atol=1e-12)

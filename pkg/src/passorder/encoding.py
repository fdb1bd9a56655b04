"""Circuit-to-graph observations for the policy network.

Nodes are wire inputs, gates, and wire outputs (in that order). Edges follow
each wire from its input through the gates acting on it to its output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, is_clifford

N_NODE_FEATURES = 8
N_EDGE_FEATURES = 8

# edge roles
BOUNDARY, TARGET_1Q, FIRST_2Q, SECOND_2Q = range(4)


@dataclass(frozen=True)
class GraphObservation:
    node_features: np.ndarray  # (N, 8)
    edge_index: np.ndarray  # (E, 2) source, destination
    edge_features: np.ndarray  # (E, 8)

    @property
    def n_nodes(self) -> int:
        return self.node_features.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edge_index.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphObservation):
            return NotImplemented
        return (
            np.array_equal(self.node_features, other.node_features)
            and np.array_equal(self.edge_index, other.edge_index)
            and np.array_equal(self.edge_features, other.edge_features)
        )


def _index(last_pass) -> int:
    if last_pass is None:
        return -1
    return int(last_pass.index if hasattr(last_pass, "index") else last_pass)


def encode(c: Circuit, last_pass=None) -> GraphObservation:
    """Graph observation of ``c``; ``last_pass`` is an ActionId, an int, or None."""
    n, m = c.n_qubits, len(c.gates)
    nodes = np.zeros((m + 2 * n, N_NODE_FEATURES))
    nodes[:, 7] = _index(last_pass)
    nodes[:n, 0] = 1.0
    nodes[n + m :, 1] = 1.0
    for i, g in enumerate(c.gates):
        row = nodes[n + i]
        if g.kind == "Rz":
            row[2] = g.params[0] / 2.0
        elif g.kind == "PhasedX":
            row[3], row[4] = g.params[0] / 2.0, g.params[1] / 2.0
        else:
            row[5] = g.params[0] / 2.0
        row[6] = float(is_clifford(g))

    edges: list[tuple[int, int]] = []
    feats: list[np.ndarray] = []

    def role(node: int, q: int) -> int:
        if node < n or node >= n + m:
            return BOUNDARY
        g = c.gates[node - n]
        if g.arity == 1:
            return TARGET_1Q
        return FIRST_2Q if g.qubits[0] == q else SECOND_2Q

    for q, idxs in enumerate(c.wire_gates()):
        path = [q] + [n + i for i in idxs] + [n + m + q]
        for src, dst in zip(path, path[1:]):
            f = np.zeros(N_EDGE_FEATURES)
            f[role(src, q)] = 1.0
            f[4 + role(dst, q)] = 1.0
            edges.append((src, dst))
            feats.append(f)
    return GraphObservation(
        nodes,
        np.array(edges, dtype=np.int64).reshape(-1, 2),
        np.array(feats).reshape(-1, N_EDGE_FEATURES),
    )


@dataclass(frozen=True)
class GraphBatch:
    node_features: np.ndarray
    edge_index: np.ndarray
    edge_features: np.ndarray
    graph_id: np.ndarray  # (N,) graph index of each node
    n_graphs: int

    @property
    def node_counts(self) -> np.ndarray:
        return np.bincount(self.graph_id, minlength=self.n_graphs)

    @property
    def edge_counts(self) -> np.ndarray:
        return np.bincount(self.graph_id[self.edge_index[:, 0]], minlength=self.n_graphs)


def batch(obs: list[GraphObservation]) -> GraphBatch:
    if not obs:
        raise ValueError("cannot batch an empty list of observations")
    offsets = np.cumsum([0] + [o.n_nodes for o in obs[:-1]])
    return GraphBatch(
        np.concatenate([o.node_features for o in obs]),
        np.concatenate([o.edge_index + off for o, off in zip(obs, offsets)]),
        np.concatenate([o.edge_features for o in obs]),
        np.repeat(np.arange(len(obs)), [o.n_nodes for o in obs]),
        len(obs),
    )


def unbatch(b: GraphBatch) -> list[GraphObservation]:
    out = []
    node_start = edge_start = 0
    for nn, ne in zip(b.node_counts, b.edge_counts):
        sl, el = slice(node_start, node_start + nn), slice(edge_start, edge_start + ne)
        out.append(GraphObservation(b.node_features[sl], b.edge_index[el] - node_start, b.edge_features[el]))
        node_start += nn
        edge_start += ne
    return out

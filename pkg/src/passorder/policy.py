"""Actor-critic graph network and its optimiser.

A GINE-style message-passing trunk with residual updates feeds mean-pooled
graph vectors into separate two-layer actor and critic heads. Parameters are
a flat ordered dict of torch tensors so that checkpoints and the Adam state
can mirror them by name.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import torch

from .encoding import N_EDGE_FEATURES, N_NODE_FEATURES, GraphBatch

# reverse-direction edges swap the source and destination role halves
_SWAP_HALVES = torch.tensor([4, 5, 6, 7, 0, 1, 2, 3])


@dataclass(frozen=True)
class PolicyConfig:
    n_actions: int = 5
    n_layers: int = 4
    hidden: int = 128
    node_features: int = N_NODE_FEATURES
    edge_features: int = N_EDGE_FEATURES

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PolicyParams:
    config: PolicyConfig
    tensors: dict[str, torch.Tensor] = field(default_factory=dict)

    def __getitem__(self, name: str) -> torch.Tensor:
        return self.tensors[name]

    def names(self) -> list[str]:
        return list(self.tensors)

    def values(self) -> list[torch.Tensor]:
        return list(self.tensors.values())

    @property
    def dtype(self) -> torch.dtype:
        return next(iter(self.tensors.values())).dtype

    def n_weights(self) -> int:
        return sum(t.numel() for t in self.tensors.values())

    def clone(self) -> "PolicyParams":
        return PolicyParams(self.config, {k: v.detach().clone().requires_grad_(True) for k, v in self.tensors.items()})

    def to(self, dtype: torch.dtype) -> "PolicyParams":
        return PolicyParams(self.config, {k: v.detach().to(dtype).requires_grad_(True) for k, v in self.tensors.items()})

    def numpy(self) -> dict[str, np.ndarray]:
        return {k: v.detach().cpu().numpy().copy() for k, v in self.tensors.items()}


def param_shapes(cfg: PolicyConfig) -> dict[str, tuple[int, ...]]:
    h = cfg.hidden
    shapes: dict[str, tuple[int, ...]] = {"in.w": (cfg.node_features, h), "in.b": (h,)}
    for i in range(cfg.n_layers):
        shapes |= {
            f"conv{i}.edge.w": (cfg.edge_features, h),
            f"conv{i}.edge.b": (h,),
            f"conv{i}.eps": (1,),
            f"conv{i}.mlp0.w": (h, h),
            f"conv{i}.mlp0.b": (h,),
            f"conv{i}.mlp1.w": (h, h),
            f"conv{i}.mlp1.b": (h,),
        }
    shapes |= {
        "actor0.w": (h, h),
        "actor0.b": (h,),
        "actor1.w": (h, cfg.n_actions),
        "actor1.b": (cfg.n_actions,),
        "critic0.w": (h, h),
        "critic0.b": (h,),
        "critic1.w": (h, 1),
        "critic1.b": (1,),
    }
    return shapes


def init_params(cfg: PolicyConfig, seed: int = 0, dtype: torch.dtype = torch.float32) -> PolicyParams:
    """Uniform fan-in initialisation; eps starts at 0 and the actor output near 0."""
    gen = torch.Generator().manual_seed(seed)
    tensors: dict[str, torch.Tensor] = {}
    shapes = param_shapes(cfg)
    for name, shape in shapes.items():
        if name.endswith(".eps"):
            t = torch.zeros(shape, dtype=torch.float64)
        else:
            fan_in = shapes[name[:-2] + ".w"][0]
            bound = 1.0 / math.sqrt(fan_in)
            t = (torch.rand(shape, generator=gen, dtype=torch.float64) * 2 - 1) * bound
            if name.startswith("actor1"):
                t = t * 0.01
        tensors[name] = t.to(dtype).requires_grad_(True)
    return PolicyParams(cfg, tensors)


def _dense(x: torch.Tensor, p: PolicyParams, name: str) -> torch.Tensor:
    return x @ p[name + ".w"] + p[name + ".b"]


def _as_tensors(b: GraphBatch, dtype: torch.dtype):
    x = torch.as_tensor(b.node_features, dtype=dtype)
    ei = torch.as_tensor(b.edge_index, dtype=torch.long)
    src = torch.cat([ei[:, 0], ei[:, 1]])
    dst = torch.cat([ei[:, 1], ei[:, 0]])
    ef = np.concatenate([b.edge_features, b.edge_features[:, _SWAP_HALVES.numpy()]])
    # the edge embedding is linear, so embed each distinct feature row once
    rows, inverse = np.unique(ef, axis=0, return_inverse=True)
    gid = torch.as_tensor(b.graph_id, dtype=torch.long)
    return x, src, dst, torch.as_tensor(rows, dtype=dtype), torch.as_tensor(inverse.reshape(-1), dtype=torch.long), gid


def policy_forward(b: GraphBatch, p: PolicyParams) -> tuple[torch.Tensor, torch.Tensor]:
    """Returns (logits of shape (G, |A|), values of shape (G,))."""
    cfg = p.config
    if b.node_features.shape[1] != cfg.node_features or b.edge_features.shape[1] != cfg.edge_features:
        raise ValueError(
            f"feature dims {b.node_features.shape[1]}/{b.edge_features.shape[1]} do not match "
            f"config {cfg.node_features}/{cfg.edge_features}"
        )
    x, src, dst, edge_rows, edge_type, gid = _as_tensors(b, p.dtype)
    h = _dense(x, p, "in")
    for i in range(cfg.n_layers):
        emb = _dense(edge_rows, p, f"conv{i}.edge").index_select(0, edge_type)
        msg = torch.relu(h.index_select(0, src) + emb)
        agg = torch.zeros_like(h).index_add(0, dst, msg)
        m = (1 + p[f"conv{i}.eps"]) * h + agg
        h = h + _dense(torch.relu(_dense(m, p, f"conv{i}.mlp0")), p, f"conv{i}.mlp1")
    counts = torch.bincount(gid, minlength=b.n_graphs).to(h.dtype).clamp(min=1)
    g = torch.zeros(b.n_graphs, h.shape[1], dtype=h.dtype).index_add(0, gid, h) / counts[:, None]
    logits = _dense(torch.relu(_dense(g, p, "actor0")), p, "actor1")
    value = _dense(torch.relu(_dense(g, p, "critic0")), p, "critic1")[:, 0]
    return logits, value


def backward(loss: torch.Tensor, p: PolicyParams) -> dict[str, torch.Tensor]:
    grads = torch.autograd.grad(loss, p.values(), allow_unused=True)
    return {
        k: (g if g is not None else torch.zeros_like(v)).detach()
        for (k, v), g in zip(p.tensors.items(), grads)
    }


@dataclass
class AdamState:
    m: dict[str, torch.Tensor]
    v: dict[str, torch.Tensor]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, p: PolicyParams) -> "AdamState":
        return cls(
            {k: torch.zeros_like(t, requires_grad=False) for k, t in p.tensors.items()},
            {k: torch.zeros_like(t, requires_grad=False) for k, t in p.tensors.items()},
        )


def global_norm(grads: dict[str, torch.Tensor]) -> float:
    return math.sqrt(sum(float(torch.sum(g.double() ** 2)) for g in grads.values()))


def clip_grads(grads: dict[str, torch.Tensor], max_norm: float) -> dict[str, torch.Tensor]:
    norm = global_norm(grads)
    if max_norm is None or norm <= max_norm or norm == 0.0:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


def adam_step(
    p: PolicyParams,
    grads: dict[str, torch.Tensor],
    state: AdamState,
    lr: float,
    max_grad_norm: float | None = 0.5,
) -> tuple[PolicyParams, AdamState]:
    """In-place Adam update with bias correction after global-norm clipping."""
    if set(grads) != set(p.tensors):
        raise ValueError("gradient names do not match parameters")
    for k, g in grads.items():
        if g.shape != p[k].shape:
            raise ValueError(f"gradient shape {tuple(g.shape)} does not match {k} {tuple(p[k].shape)}")
    grads = clip_grads(grads, max_grad_norm)
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1 - b1**state.step
    c2 = 1 - b2**state.step
    with torch.no_grad():
        for k, w in p.tensors.items():
            g = grads[k].to(w.dtype)
            state.m[k].mul_(b1).add_(g, alpha=1 - b1)
            state.v[k].mul_(b2).addcmul_(g, g, value=1 - b2)
            w.sub_(lr * (state.m[k] / c1) / (torch.sqrt(state.v[k] / c2) + state.eps))
    return p, state

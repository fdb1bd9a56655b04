"""Pass-scheduling environment, PPO training, and greedy deployment."""

from __future__ import annotations

import csv
import hashlib
import json
import time
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .circuit import Circuit, two_qubit_count
from .encoding import GraphObservation, batch, encode
from .passes import ActionId, PassRegistry
from .policy import AdamState, PolicyConfig, PolicyParams, adam_step, backward, init_params, policy_forward

DEFAULT_PENALTY = 0.013


@dataclass(frozen=True)
class PPOConfig:
    lr: float = 3.36e-4
    n_steps: int = 128
    batch_size: int = 64
    epochs: int = 3
    gamma: float = 0.952
    gae_lambda: float = 0.938
    clip: float = 0.2
    entropy_coef: float = 0.01
    vf_coef: float = 0.5
    grad_clip: float = 0.5
    action_penalty: float = DEFAULT_PENALTY
    n_envs: int = 8
    max_steps: int = 300_000
    no_improve_limit: int = 3
    eval_interval: int = 5  # updates between validation runs
    patience: int = 10  # validation runs without improvement before stopping
    n_validation: int = 256

    def __post_init__(self) -> None:
        for name in ("lr", "n_steps", "batch_size", "epochs", "clip", "n_envs", "max_steps", "no_improve_limit",
                     "eval_interval", "patience", "n_validation"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("entropy_coef", "vf_coef", "grad_clip", "action_penalty"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not (0 < self.gamma <= 1 and 0 < self.gae_lambda <= 1):
            raise ValueError("gamma and gae_lambda must lie in (0, 1]")

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# reward and environment


def gate_reward(n_prev: int, n_next: int, n0: int) -> float:
    """Fraction of the initial two-qubit gates removed by one step."""
    return (n_prev - n_next) / n0 if n0 > 0 else 0.0


def compute_reward(
    n_prev: int, n_next: int, n0: int, action: ActionId | str, penalty: float = DEFAULT_PENALTY, do_nothing: str = "DoNothing"
) -> float:
    name = action.name if isinstance(action, ActionId) else action
    if name == do_nothing:
        return 0.0
    return gate_reward(n_prev, n_next, n0) - penalty


class PassCache:
    """Bounded memo of pass results; passes are pure functions of the circuit."""

    def __init__(self, max_entries: int = 20_000):
        self.max_entries = max_entries
        self._data: OrderedDict[tuple[str, Circuit], Circuit] = OrderedDict()
        self.hits = self.misses = 0

    def apply(self, registry: PassRegistry, action: ActionId, c: Circuit) -> Circuit:
        key = (action.name, c)
        out = self._data.get(key)
        if out is not None:
            self.hits += 1
            return out
        self.misses += 1
        out = registry.apply(action, c).circuit
        self._data[key] = out
        if len(self._data) > self.max_entries:
            self._data.popitem(last=False)
        return out


@dataclass
class EnvState:
    circuit: Circuit
    n0: int
    n_current: int
    n_best: int
    steps_taken: int = 0
    steps_since_improvement: int = 0
    last_pass: ActionId | None = None
    done: bool = False


@dataclass
class StepInfo:
    action: ActionId
    n_prev: int
    n_next: int
    gate_reward: float
    reason: str | None


class Env:
    def __init__(
        self,
        registry: PassRegistry | None = None,
        penalty: float = DEFAULT_PENALTY,
        no_improve_limit: int = 3,
        cache: PassCache | None = None,
    ):
        self.registry = registry or PassRegistry()
        self.penalty = penalty
        self.no_improve_limit = no_improve_limit
        self.cache = cache if cache is not None else PassCache()
        self.state: EnvState | None = None

    def reset(self, c: Circuit) -> GraphObservation:
        n0 = two_qubit_count(c)
        self.state = EnvState(c, n0, n0, n0, done=n0 == 0)
        return encode(c, None)

    def step(self, action: int | str | ActionId) -> tuple[GraphObservation, float, bool, StepInfo]:
        s = self.state
        if s is None:
            raise RuntimeError("reset the environment before stepping")
        if s.done:
            raise RuntimeError("episode is finished; reset before stepping")
        a = self.registry.action(action)
        n_prev = s.n_current
        c = s.circuit if a == self.registry.do_nothing else self.cache.apply(self.registry, a, s.circuit)
        n_next = two_qubit_count(c)
        reward = compute_reward(n_prev, n_next, s.n0, a, self.penalty, self.registry.do_nothing.name)
        s.circuit, s.n_current, s.last_pass = c, n_next, a
        s.steps_taken += 1
        if n_next < s.n_best:
            s.n_best = n_next
            s.steps_since_improvement = 0
        else:
            s.steps_since_improvement += 1
        reason = None
        if a == self.registry.do_nothing:
            reason = "do-nothing"
        elif n_next == 0:
            reason = "zero-two-qubit"
        elif s.steps_since_improvement >= self.no_improve_limit:
            reason = "no-improvement"
        s.done = reason is not None
        return encode(c, a), reward, s.done, StepInfo(a, n_prev, n_next, gate_reward(n_prev, n_next, s.n0), reason)


# --------------------------------------------------------------------------
# advantage estimation and PPO loss


def gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    gamma: float,
    lam: float,
    last_value: np.ndarray | float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Generalised advantage estimates along axis 0.

    ``dones[t]`` marks that the episode ended with step t, so no value is
    bootstrapped across it. ``last_value`` bootstraps the step after the end.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if not rewards.shape == values.shape == dones.shape:
        raise ValueError(f"length mismatch: {rewards.shape}, {values.shape}, {dones.shape}")
    adv = np.zeros_like(rewards)
    running = np.zeros_like(rewards[0]) if rewards.ndim > 1 else 0.0
    next_value = np.asarray(last_value, dtype=np.float64)
    for t in range(len(rewards) - 1, -1, -1):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * live - values[t]
        running = delta + gamma * lam * live * running
        adv[t] = running
        next_value = values[t]
    return adv, adv + values


@dataclass
class Minibatch:
    obs: list[GraphObservation]
    actions: np.ndarray
    old_logp: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray


def ppo_loss(
    p: PolicyParams, mb: Minibatch, cfg: PPOConfig, normalise: bool = True
) -> tuple[torch.Tensor, dict[str, float]]:
    logits, values = policy_forward(batch(mb.obs), p)
    dt = logits.dtype
    logp_all = torch.log_softmax(logits, dim=1)
    actions = torch.as_tensor(mb.actions, dtype=torch.long)
    logp = logp_all.gather(1, actions[:, None])[:, 0]
    adv = torch.as_tensor(mb.advantages, dtype=dt)
    if normalise and len(adv) > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    ratio = torch.exp(logp - torch.as_tensor(mb.old_logp, dtype=dt))
    surrogate = torch.minimum(ratio * adv, torch.clamp(ratio, 1 - cfg.clip, 1 + cfg.clip) * adv)
    policy_loss = -surrogate.mean()
    value_loss = torch.mean((values - torch.as_tensor(mb.returns, dtype=dt)) ** 2)
    entropy = -(torch.exp(logp_all) * logp_all).sum(dim=1).mean()
    loss = policy_loss + cfg.vf_coef * value_loss - cfg.entropy_coef * entropy
    with torch.no_grad():
        stats = {
            "policy_loss": float(policy_loss),
            "value_loss": float(value_loss),
            "entropy": float(entropy),
            "clip_fraction": float(((ratio - 1).abs() > cfg.clip).to(dt).mean()),
            "approx_kl": float(((ratio - 1) - torch.log(ratio)).mean()),
        }
    return loss, stats


@dataclass
class RolloutBuffer:
    n_steps: int
    n_envs: int
    obs: list[list[GraphObservation]] = field(default_factory=list)
    actions: list[np.ndarray] = field(default_factory=list)
    logp: list[np.ndarray] = field(default_factory=list)
    values: list[np.ndarray] = field(default_factory=list)
    rewards: list[np.ndarray] = field(default_factory=list)
    dones: list[np.ndarray] = field(default_factory=list)
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None

    def add(self, obs, actions, logp, values, rewards, dones) -> None:
        if self.full:
            raise RuntimeError("rollout buffer is full")
        self.obs.append(list(obs))
        self.actions.append(np.asarray(actions))
        self.logp.append(np.asarray(logp, dtype=np.float64))
        self.values.append(np.asarray(values, dtype=np.float64))
        self.rewards.append(np.asarray(rewards, dtype=np.float64))
        self.dones.append(np.asarray(dones, dtype=np.float64))

    @property
    def full(self) -> bool:
        return len(self.obs) == self.n_steps

    def finish(self, last_values: np.ndarray, gamma: float, lam: float) -> None:
        self.advantages, self.returns = gae(
            np.stack(self.rewards), np.stack(self.values), np.stack(self.dones), gamma, lam, last_values
        )

    def flat(self) -> Minibatch:
        if not self.full or self.advantages is None:
            raise RuntimeError("buffer must be full and finished before an update")
        return Minibatch(
            [o for row in self.obs for o in row],
            np.concatenate(self.actions),
            np.concatenate(self.logp),
            self.advantages.reshape(-1),
            self.returns.reshape(-1),
        )


def ppo_update(
    buf: RolloutBuffer, p: PolicyParams, adam: AdamState, cfg: PPOConfig, rng: np.random.Generator
) -> dict[str, float]:
    data = buf.flat()
    n = len(data.actions)
    totals: dict[str, float] = {}
    count = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            mb = Minibatch(
                [data.obs[i] for i in idx], data.actions[idx], data.old_logp[idx], data.advantages[idx], data.returns[idx]
            )
            loss, stats = ppo_loss(p, mb, cfg)
            adam_step(p, backward(loss, p), adam, cfg.lr, cfg.grad_clip)
            for k, v in stats.items():
                totals[k] = totals.get(k, 0.0) + v
            count += 1
    return {k: v / count for k, v in totals.items()}


# --------------------------------------------------------------------------
# checkpoints, deployment, evaluation


@dataclass
class Checkpoint:
    params: PolicyParams
    registry: tuple[str, ...]
    config_hash: str = ""
    seed: int = 0
    validation_score: float = float("nan")
    steps: int = 0

    @property
    def config(self) -> PolicyConfig:
        return self.params.config


class RegistryMismatch(ValueError):
    pass


def check_registry(ckpt: Checkpoint, registry: PassRegistry) -> None:
    if tuple(ckpt.registry) != registry.names:
        raise RegistryMismatch(
            f"checkpoint was trained with actions {list(ckpt.registry)} but the pass registry is {list(registry.names)}"
        )


@dataclass
class Trace:
    n0: int
    actions: list[ActionId] = field(default_factory=list)
    counts: list[int] = field(default_factory=list)  # two-qubit count after each step
    rewards: list[float] = field(default_factory=list)  # per-step gate reward, no penalty
    reason: str = "already-zero"
    wall_time_ms: float = 0.0

    @property
    def n_final(self) -> int:
        return self.counts[-1] if self.counts else self.n0

    @property
    def cumulative_reward(self) -> float:
        return gate_reward(self.n0, self.n_final, self.n0)

    @property
    def pass_names(self) -> list[str]:
        return [a.name for a in self.actions]


def _greedy_actions(p: PolicyParams, obs: list[GraphObservation]) -> np.ndarray:
    with torch.no_grad():
        logits, _ = policy_forward(batch(obs), p)
    # np.argmax keeps the lowest index on ties
    return np.argmax(logits.numpy(), axis=1)


def run_greedy(
    p: PolicyParams,
    circuits: Sequence[Circuit],
    registry: PassRegistry,
    no_improve_limit: int = 3,
    cache: PassCache | None = None,
    max_steps: int = 1000,
) -> list[tuple[Circuit, Trace]]:
    """Argmax rollouts for several circuits with one batched forward per step."""
    cache = cache if cache is not None else PassCache()
    envs = [Env(registry, 0.0, no_improve_limit, cache) for _ in circuits]
    obs = [e.reset(c) for e, c in zip(envs, circuits)]
    traces = [Trace(e.state.n0) for e in envs]
    live = [i for i, e in enumerate(envs) if not e.state.done]
    steps = 0
    while live and steps < max_steps:
        acts = _greedy_actions(p, [obs[i] for i in live])
        still = []
        for i, a in zip(live, acts):
            o, _, done, info = envs[i].step(int(a))
            obs[i] = o
            t = traces[i]
            t.actions.append(info.action)
            t.counts.append(info.n_next)
            t.rewards.append(info.gate_reward)
            if done:
                t.reason = info.reason
            else:
                still.append(i)
        live = still
        steps += 1
    for i in live:
        traces[i].reason = "step-limit"
    return [(e.state.circuit, t) for e, t in zip(envs, traces)]


def deploy_optimize(
    ckpt: Checkpoint,
    c: Circuit,
    registry: PassRegistry | None = None,
    no_improve_limit: int = 3,
    cache: PassCache | None = None,
) -> tuple[Circuit, Trace]:
    registry = registry or PassRegistry()
    check_registry(ckpt, registry)
    t0 = time.perf_counter()
    out, trace = run_greedy(ckpt.params, [c], registry, no_improve_limit, cache)[0]
    trace.wall_time_ms = (time.perf_counter() - t0) * 1e3
    return out, trace


def validation_score(p: PolicyParams, circuits: Sequence[Circuit], registry: PassRegistry, no_improve_limit: int, cache: PassCache) -> float:
    results = run_greedy(p, circuits, registry, no_improve_limit, cache)
    return float(np.mean([t.cumulative_reward for _, t in results]))


# --------------------------------------------------------------------------
# training

LOG_COLUMNS = (
    "update",
    "step",
    "mean_episode_reward",
    "validation_reward",
    "policy_loss",
    "value_loss",
    "entropy",
    "approx_kl",
    "clip_fraction",
)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list[dict]
    steps: int
    stopped_early: bool


def _sample(logits: torch.Tensor, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    logp = torch.log_softmax(logits.double(), dim=1).numpy()
    probs = np.exp(logp)
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(len(probs))[:, None] * cdf[:, -1:]
    actions = np.minimum((cdf <= u).sum(axis=1), probs.shape[1] - 1)
    return actions, logp[np.arange(len(actions)), actions]


def train(
    train_circuits: Sequence[Circuit],
    val_circuits: Sequence[Circuit],
    cfg: PPOConfig = PPOConfig(),
    policy_cfg: PolicyConfig | None = None,
    registry: PassRegistry | None = None,
    seed: int = 0,
    log_path: str | Path | None = None,
    verbose: bool = False,
) -> TrainResult:
    """PPO over lockstep environments; returns the best-validation checkpoint."""
    registry = registry or PassRegistry()
    policy_cfg = policy_cfg or PolicyConfig(n_actions=len(registry))
    if policy_cfg.n_actions != len(registry):
        raise ValueError("policy action count does not match the pass registry")
    pool = [c for c in train_circuits if two_qubit_count(c) > 0]
    if not pool:
        raise ValueError("training set has no circuits with two-qubit gates")
    val = [c for c in val_circuits if two_qubit_count(c) > 0][: cfg.n_validation]
    if not val:
        val = pool[: cfg.n_validation]

    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    p = init_params(policy_cfg, seed)
    adam = AdamState.for_params(p)
    cache = PassCache()
    envs = [Env(registry, cfg.action_penalty, cfg.no_improve_limit, cache) for _ in range(cfg.n_envs)]

    def draw() -> Circuit:
        return pool[int(rng.integers(len(pool)))]

    obs = [e.reset(draw()) for e in envs]
    ep_reward = np.zeros(cfg.n_envs)
    finished: list[float] = []

    best_score = validation_score(p, val, registry, cfg.no_improve_limit, cache)
    best = Checkpoint(p.clone(), registry.names, cfg.digest(), seed, best_score, 0)
    history: list[dict] = [{"update": 0, "step": 0, "validation_reward": best_score}]
    stale = 0
    steps = 0
    update = 0
    stopped_early = False
    per_update = cfg.n_steps * cfg.n_envs
    while steps + per_update <= cfg.max_steps:
        buf = RolloutBuffer(cfg.n_steps, cfg.n_envs)
        for _ in range(cfg.n_steps):
            with torch.no_grad():
                logits, values = policy_forward(batch(obs), p)
            actions, logp = _sample(logits, rng)
            rewards = np.zeros(cfg.n_envs)
            dones = np.zeros(cfg.n_envs)
            step_obs = list(obs)
            for i, e in enumerate(envs):
                o, r, d, info = e.step(int(actions[i]))
                rewards[i] = r
                ep_reward[i] += info.gate_reward
                if d:
                    dones[i] = 1.0
                    finished.append(ep_reward[i])
                    ep_reward[i] = 0.0
                    o = e.reset(draw())
                obs[i] = o
            buf.add(step_obs, actions, logp, values.double().numpy(), rewards, dones)
        with torch.no_grad():
            _, last_values = policy_forward(batch(obs), p)
        buf.finish(last_values.double().numpy(), cfg.gamma, cfg.gae_lambda)
        stats = ppo_update(buf, p, adam, cfg, rng)
        steps += per_update
        update += 1
        row = {"update": update, "step": steps, "mean_episode_reward": float(np.mean(finished)) if finished else float("nan")}
        row |= stats
        finished = []
        if update % cfg.eval_interval == 0:
            score = validation_score(p, val, registry, cfg.no_improve_limit, cache)
            row["validation_reward"] = score
            if score > best_score:
                best_score, stale = score, 0
                best = Checkpoint(p.clone(), registry.names, cfg.digest(), seed, score, steps)
            else:
                stale += 1
        history.append(row)
        if verbose:
            print(json.dumps({k: round(v, 4) if isinstance(v, float) else v for k, v in row.items()}), flush=True)
        if stale >= cfg.patience:
            stopped_early = True
            break
    if log_path is not None:
        write_log(log_path, history)
    return TrainResult(best, history, steps, stopped_early)


def write_log(path: str | Path, history: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=LOG_COLUMNS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in history:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items() if k in LOG_COLUMNS})


def fixed_sequence(c: Circuit, names: Sequence[str], registry: PassRegistry | None = None) -> tuple[Circuit, list[int]]:
    registry = registry or PassRegistry()
    counts = []
    for name in names:
        c = registry.apply(name, c).circuit
        counts.append(two_qubit_count(c))
    return c, counts


def params_equal(a: PolicyParams, b: PolicyParams) -> bool:
    return a.names() == b.names() and all(torch.equal(a[k], b[k]) for k in a.names())


__all__ = [
    "LOG_COLUMNS",
    "Checkpoint",
    "Env",
    "EnvState",
    "Minibatch",
    "PPOConfig",
    "PassCache",
    "RegistryMismatch",
    "RolloutBuffer",
    "StepInfo",
    "Trace",
    "TrainResult",
    "check_registry",
    "compute_reward",
    "deploy_optimize",
    "fixed_sequence",
    "gae",
    "gate_reward",
    "params_equal",
    "ppo_loss",
    "ppo_update",
    "run_greedy",
    "train",
    "validation_score",
    "write_log",
]

"""Command-line entry point: ``passorder <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import torch

from .circuit import two_qubit_count
from .formats import (
    CheckpointError,
    CircuitFormatError,
    load_checkpoint,
    read_circuit,
    read_dataset,
    save_checkpoint,
    split_entries,
    write_circuit,
)
from .generators import CLASSES, GenSpec, make_dataset
from .numerics import equivalent
from .passes import PassRegistry
from .policy import PolicyConfig
from .rl import PassCache, PPOConfig, RegistryMismatch, deploy_optimize, fixed_sequence, train
from .search import BeamConfig, beam_search, greedy_search

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3

REPORT_COLUMNS = (
    "circuit_id",
    "class",
    "n_qubits",
    "n0",
    "n_final",
    "cumulative_reward",
    "passes_applied",
    "wall_time_ms",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# optimisers shared by optimize, baseline and eval


def _strategy(args) -> tuple[str, object]:
    if getattr(args, "model", None):
        return "model", str(args.model)
    if getattr(args, "sequence", None):
        names = [s for s in args.sequence.split(",") if s]
        registry = PassRegistry()
        unknown = [n for n in names if n not in registry.names]
        if unknown or not names:
            raise UsageError(f"unknown pass names {unknown}; choose from {list(registry.names)}")
        return "sequence", tuple(names)
    method = getattr(args, "method", None)
    if method == "greedy":
        return "greedy", None
    if method == "beam":
        if args.depth is None or args.width is None:
            raise UsageError("beam search needs --depth and --width")
        return "beam", (args.depth, args.width)
    raise UsageError("choose --model, --method greedy|beam, or --sequence")


_WORKER: dict = {}


def _init_worker(kind: str, arg) -> None:
    torch.set_num_threads(1)
    _WORKER.clear()
    _WORKER["kind"] = kind
    _WORKER["arg"] = arg
    _WORKER["registry"] = PassRegistry()
    _WORKER["cache"] = PassCache()
    if kind == "model":
        _WORKER["ckpt"] = load_checkpoint(arg, _WORKER["registry"])


def _run_one(c):
    """Returns (circuit, pass names, wall time ms) for the configured strategy."""
    kind, arg, registry = _WORKER["kind"], _WORKER["arg"], _WORKER["registry"]
    t0 = time.perf_counter()
    if kind == "model":
        out, trace = deploy_optimize(_WORKER["ckpt"], c, registry, cache=_WORKER["cache"])
        names = trace.pass_names
        extra = trace.reason
    elif kind == "sequence":
        out, _ = fixed_sequence(c, arg, registry)
        names, extra = list(arg), "sequence"
    elif kind == "greedy":
        r = greedy_search(c, registry)
        out, names, extra = r.circuit, r.pass_names, "greedy"
    else:
        r = beam_search(c, BeamConfig(*arg), registry)
        out, names, extra = r.circuit, r.pass_names, "beam"
    return out, names, (time.perf_counter() - t0) * 1e3, extra


# --------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    classes = args.classes.split(",") if args.classes else list(CLASSES)
    specs = [
        GenSpec(cls, (args.min_qubits, args.max_qubits), seed=args.seed, max_two_qubit=args.max_two_qubit)
        for cls in classes
    ]
    out, manifest = make_dataset(specs, args.out, count=args.count, seed=args.seed, val_fraction=args.val_fraction)
    print(f"wrote {args.count} circuits to {out} (manifest {manifest})")
    return EXIT_OK


def cmd_train(args) -> int:
    torch.set_num_threads(args.threads)
    train_entries, val_entries = split_entries(read_dataset(args.data))
    registry = PassRegistry()
    cfg = PPOConfig(
        max_steps=args.max_steps,
        n_envs=args.n_envs,
        n_steps=args.n_steps,
        eval_interval=args.eval_interval,
        patience=args.patience,
    )
    pcfg = PolicyConfig(n_actions=len(registry), n_layers=args.layers, hidden=args.hidden)
    result = train(
        [e.circuit for e in train_entries],
        [e.circuit for e in val_entries],
        cfg,
        pcfg,
        registry,
        seed=args.seed,
        log_path=args.log,
        verbose=args.verbose,
    )
    save_checkpoint(args.out, result.checkpoint)
    print(
        f"trained {result.steps} steps; best validation reward {result.checkpoint.validation_score:.4f} "
        f"at step {result.checkpoint.steps}; checkpoint {args.out}"
    )
    return EXIT_OK


def cmd_optimize(args) -> int:
    torch.set_num_threads(1)
    c, meta = read_circuit(args.circuit)
    registry = PassRegistry()
    ckpt = load_checkpoint(args.model, registry)
    out, trace = deploy_optimize(ckpt, c, registry)
    if args.trace:
        for name, n in zip(trace.pass_names, trace.counts):
            print(f"{name} {n}")
        print(f"terminated: {trace.reason}")
    print(f"two-qubit gates {trace.n0} -> {trace.n_final} (cumulative reward {trace.cumulative_reward:.4f})")
    if args.out:
        write_circuit(args.out, out, meta)
    return EXIT_OK


def cmd_baseline(args) -> int:
    kind, arg = _strategy(args)
    c, meta = read_circuit(args.circuit)
    _init_worker(kind, arg)
    out, names, ms, _ = _run_one(c)
    n0, n1 = two_qubit_count(c), two_qubit_count(out)
    print(";".join(names))
    print(f"two-qubit gates {n0} -> {n1} in {ms:.1f} ms")
    if args.out:
        write_circuit(args.out, out, meta)
    return EXIT_OK


def cmd_eval(args) -> int:
    kind, arg = _strategy(args)
    entries = read_dataset(args.data)
    if args.split != "all":
        entries = [e for e in entries if e.metadata.get("split", "train") == args.split]
    circuits = [e.circuit for e in entries]
    if args.threads <= 1:
        _init_worker(kind, arg)
        results = [_run_one(c) for c in circuits]
    else:
        with ProcessPoolExecutor(args.threads, initializer=_init_worker, initargs=(kind, arg)) as ex:
            results = list(ex.map(_run_one, circuits, chunksize=4))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for i, (e, (out, names, ms, _)) in enumerate(zip(entries, results)):
        n0, n1 = two_qubit_count(e.circuit), two_qubit_count(out)
        w.writerow(
            [
                e.metadata.get("id", i),
                e.metadata.get("class", ""),
                e.circuit.n_qubits,
                n0,
                n1,
                repr((n0 - n1) / n0 if n0 else 0.0),
                ";".join(names),
                "0" if args.no_timing else f"{ms:.3f}",
            ]
        )
    Path(args.out).write_text(buf.getvalue())
    print(f"wrote {len(entries)} rows to {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    a, _ = read_circuit(args.a)
    b, _ = read_circuit(args.b)
    if a.n_qubits != b.n_qubits:
        print(f"not equivalent: widths differ ({a.n_qubits} vs {b.n_qubits})")
        return EXIT_VERIFY
    ok, dist = equivalent(a, b, tol=args.tol)
    if ok:
        print(f"equivalent, distance < {format(args.tol, 'g').replace('e-0', 'e-')}")
        return EXIT_OK
    print(f"not equivalent, distance {dist:.3e}")
    return EXIT_VERIFY


def summarize_report(path: str | Path) -> dict[str, dict[str, float]]:
    """Mean and median cumulative reward per class plus an ``all`` row."""
    groups: dict[str, list[float]] = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            r = float(row["cumulative_reward"])
            groups.setdefault(row["class"], []).append(r)
            groups.setdefault("all", []).append(r)
    return {
        k: {"count": len(v), "mean": statistics.fmean(v), "median": statistics.median(v)}
        for k, v in sorted(groups.items())
    }


def cmd_summarize(args) -> int:
    for cls, s in summarize_report(args.report).items():
        print(f"{cls},{s['count']},{s['mean']:.6f},{s['median']:.6f}")
    return EXIT_OK


# --------------------------------------------------------------------------


def _add_strategy(p: argparse.ArgumentParser, model: bool) -> None:
    if model:
        p.add_argument("--model", help="checkpoint file")
    p.add_argument("--method", choices=("greedy", "beam"))
    p.add_argument("--depth", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--sequence", help="comma-separated pass names applied in order")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="passorder", description="Learned scheduling of circuit optimisation passes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a JSONL dataset and manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--classes", help=f"comma-separated subset of {','.join(CLASSES)}")
    p.add_argument("--min-qubits", type=int, default=3)
    p.add_argument("--max-qubits", type=int, default=7)
    p.add_argument("--max-two-qubit", type=int, default=215)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a policy with PPO")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="training log CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=300_000)
    p.add_argument("--n-envs", type=int, default=8)
    p.add_argument("--n-steps", type=int, default=128)
    p.add_argument("--eval-interval", type=int, default=5)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("optimize", help="optimise one circuit with a trained policy")
    p.add_argument("--model", required=True)
    p.add_argument("--circuit", required=True)
    p.add_argument("--out")
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("baseline", help="optimise one circuit with search or a fixed sequence")
    p.add_argument("--circuit", required=True)
    p.add_argument("--out")
    _add_strategy(p, model=False)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="optimise every circuit of a dataset and write a CSV report")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split", choices=("all", "train", "validation"), default="all")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="write 0 for wall_time_ms")
    _add_strategy(p, model=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="check two circuit files implement the same unitary")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("summarize", help="mean and median cumulative reward of a report")
    p.add_argument("report")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command in ("eval",) and args.threads < 1:
            raise UsageError("--threads must be at least 1")
        return args.func(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except (CircuitFormatError, CheckpointError, RegistryMismatch, FileNotFoundError, IsADirectoryError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

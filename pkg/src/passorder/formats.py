"""Circuit JSON, JSONL datasets, and binary checkpoints.

Circuit files look like::

    {"version": 1, "qubits": 2,
     "ops": [{"g": "ZZPhase", "q": [0, 1], "p": [0.25]}],
     "metadata": {"class": "QAOA", "seed": 7}}

Parameters are in half-turns. A checkpoint is ``MAGIC``, a little-endian
uint32 header length, a UTF-8 JSON header, then the float32 weights in
header order.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from pathlib import Path
from typing import Iterable

import numpy as np
import torch

from .circuit import ARITY, N_PARAMS, Circuit, Gate
from .generators import DatasetEntry
from .passes import PassRegistry
from .policy import PolicyConfig, PolicyParams, param_shapes
from .rl import Checkpoint, check_registry

CIRCUIT_VERSION = 1
CHECKPOINT_VERSION = 1
MAGIC = b"PASSORD\x00"


class CircuitFormatError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


# --------------------------------------------------------------------------
# circuits


def circuit_to_dict(c: Circuit, metadata: dict | None = None) -> dict:
    d = {
        "version": CIRCUIT_VERSION,
        "qubits": c.n_qubits,
        "ops": [{"g": g.kind, "q": list(g.qubits), "p": list(g.params)} for g in c.gates],
    }
    if metadata:
        d["metadata"] = metadata
    return d


def serialize_circuit(c: Circuit, metadata: dict | None = None) -> str:
    return json.dumps(circuit_to_dict(c, metadata), separators=(",", ":"))


def _op_gate(i: int, op, n: int) -> Gate:
    if not isinstance(op, dict):
        raise CircuitFormatError(f"op {i}: expected an object")
    kind, qubits, params = op.get("g"), op.get("q"), op.get("p", [])
    if kind not in ARITY:
        raise CircuitFormatError(f"op {i}: unknown gate {kind!r}")
    if not isinstance(qubits, list) or not all(isinstance(q, int) and not isinstance(q, bool) for q in qubits):
        raise CircuitFormatError(f"op {i}: 'q' must be a list of integers")
    if len(qubits) != ARITY[kind]:
        raise CircuitFormatError(f"op {i}: {kind} takes {ARITY[kind]} qubit(s), got {len(qubits)}")
    if len(set(qubits)) != len(qubits):
        raise CircuitFormatError(f"op {i}: duplicate qubits {qubits}")
    if any(not 0 <= q < n for q in qubits):
        raise CircuitFormatError(f"op {i}: qubit out of range for {n} qubits: {qubits}")
    if not isinstance(params, list) or len(params) != N_PARAMS[kind]:
        raise CircuitFormatError(f"op {i}: {kind} takes {N_PARAMS[kind]} parameter(s)")
    if not all(isinstance(p, (int, float)) and not isinstance(p, bool) and math.isfinite(p) for p in params):
        raise CircuitFormatError(f"op {i}: parameters must be finite numbers")
    return Gate.make(kind, qubits, params)


def circuit_from_dict(d) -> tuple[Circuit, dict]:
    if not isinstance(d, dict):
        raise CircuitFormatError("circuit must be a JSON object")
    if d.get("version") != CIRCUIT_VERSION:
        raise CircuitFormatError(f"unsupported circuit version {d.get('version')!r}")
    n = d.get("qubits")
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise CircuitFormatError("'qubits' must be a non-negative integer")
    ops = d.get("ops")
    if not isinstance(ops, list):
        raise CircuitFormatError("'ops' must be a list")
    meta = d.get("metadata") or {}
    if not isinstance(meta, dict):
        raise CircuitFormatError("'metadata' must be an object")
    return Circuit(n, tuple(_op_gate(i, op, n) for i, op in enumerate(ops))), meta


def parse_circuit_with_metadata(data: str | bytes) -> tuple[Circuit, dict]:
    try:
        d = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CircuitFormatError(f"malformed JSON: {e}") from e
    return circuit_from_dict(d)


def parse_circuit(data: str | bytes) -> Circuit:
    return parse_circuit_with_metadata(data)[0]


def read_circuit(path: str | Path) -> tuple[Circuit, dict]:
    return parse_circuit_with_metadata(Path(path).read_bytes())


def write_circuit(path: str | Path, c: Circuit, metadata: dict | None = None) -> None:
    Path(path).write_text(serialize_circuit(c, metadata) + "\n")


# --------------------------------------------------------------------------
# datasets


def write_dataset(path: str | Path, entries: Iterable[DatasetEntry]) -> None:
    with open(path, "w") as f:
        for e in entries:
            f.write(serialize_circuit(e.circuit, e.metadata) + "\n")


def read_dataset(path: str | Path) -> list[DatasetEntry]:
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                c, meta = parse_circuit_with_metadata(line)
            except CircuitFormatError as e:
                raise CircuitFormatError(f"{path}, line {lineno}: {e}") from e
            out.append(DatasetEntry(c, meta))
    return out


def split_entries(entries: list[DatasetEntry]) -> tuple[list[DatasetEntry], list[DatasetEntry]]:
    train = [e for e in entries if e.metadata.get("split", "train") != "validation"]
    val = [e for e in entries if e.metadata.get("split") == "validation"]
    return train, val


# --------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> None:
    index = []
    blobs = []
    offset = 0
    for name, t in ckpt.params.tensors.items():
        arr = t.detach().cpu().numpy().astype("<f4")
        index.append({"name": name, "shape": list(arr.shape), "offset": offset, "count": int(arr.size)})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    blob = b"".join(blobs)
    header = {
        "format_version": CHECKPOINT_VERSION,
        "architecture": ckpt.params.config.to_dict(),
        "registry": list(ckpt.registry),
        "config_hash": ckpt.config_hash,
        "seed": ckpt.seed,
        "validation_score": ckpt.validation_score,
        "steps": ckpt.steps,
        "tensors": index,
        "blob_bytes": len(blob),
        "blob_sha256": hashlib.sha256(blob).hexdigest(),
    }
    hb = json.dumps(header, sort_keys=True).encode()
    Path(path).write_bytes(MAGIC + struct.pack("<I", len(hb)) + hb + blob)


def load_checkpoint(path: str | Path, registry: PassRegistry | None = None) -> Checkpoint:
    """Read a checkpoint; with ``registry`` given, its action names must match."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 4 or not data.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    (hlen,) = struct.unpack_from("<I", data, len(MAGIC))
    start = len(MAGIC) + 4
    if start + hlen > len(data):
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(data[start : start + hlen])
    except json.JSONDecodeError as e:
        raise CheckpointError(f"{path}: corrupt header") from e
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: checkpoint format version {header.get('format_version')!r}, expected {CHECKPOINT_VERSION}"
        )
    blob = data[start + hlen :]
    if len(blob) != header["blob_bytes"]:
        raise CheckpointError(f"{path}: corrupt blob, expected {header['blob_bytes']} bytes, found {len(blob)}")
    if hashlib.sha256(blob).hexdigest() != header["blob_sha256"]:
        raise CheckpointError(f"{path}: corrupt blob, checksum mismatch")
    cfg = PolicyConfig(**header["architecture"])
    shapes = param_shapes(cfg)
    names = [t["name"] for t in header["tensors"]]
    if names != list(shapes):
        raise CheckpointError(f"{path}: tensor index does not match the architecture")
    tensors = {}
    for t in header["tensors"]:
        if tuple(t["shape"]) != shapes[t["name"]] or t["count"] != int(np.prod(t["shape"], dtype=np.int64)):
            raise CheckpointError(f"{path}: bad shape for {t['name']}")
        arr = np.frombuffer(blob, dtype="<f4", count=t["count"], offset=t["offset"]).reshape(t["shape"])
        tensors[t["name"]] = torch.from_numpy(arr.astype(np.float32)).requires_grad_(True)
    ckpt = Checkpoint(
        PolicyParams(cfg, tensors),
        tuple(header["registry"]),
        header.get("config_hash", ""),
        header.get("seed", 0),
        header.get("validation_score", float("nan")),
        header.get("steps", 0),
    )
    if registry is not None:
        check_registry(ckpt, registry)
    return ckpt

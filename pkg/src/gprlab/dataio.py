"""Dataset bundles and model checkpoints on disk.

A bundle is a directory of four files: ``edges.tsv`` (one undirected edge per
line as ``i<TAB>j``, 0-indexed, ``#`` comments allowed), ``labels.txt`` (one
integer per line), ``features.bin`` (two little-endian uint32 dims followed by
row-major float64 data), and ``manifest.json`` carrying n, f, num_classes,
source, an optional generator_spec echo, and sha256 checksums. Checksums are
verified against the raw bytes before any parsing happens.

Checkpoints are a single binary file: magic ``GPRG``, a format version, the
model dimensions, scalar hyperparameters, then the parameter arrays as
little-endian float64 in a fixed order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .csbm import CsbmSample
from .graphs import LabelVector, SparseGraph, build_graph
from .model import GprModel

log = logging.getLogger(__name__)

__all__ = [
    "save_bundle",
    "load_bundle",
    "save_sample",
    "read_edge_file",
    "read_label_file",
    "save_checkpoint",
    "load_checkpoint",
]

EDGES_FILE = "edges.tsv"
LABELS_FILE = "labels.txt"
FEATURES_FILE = "features.bin"
MANIFEST_FILE = "manifest.json"

CHECKPOINT_MAGIC = b"GPRG"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sI4I3d")


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _edges_bytes(g: SparseGraph) -> bytes:
    rows, cols = g.row_indices, g.col_idx
    upper = rows < cols
    lines = ["# gprlab edge list: i<TAB>j, 0-indexed, one undirected edge per line"]
    lines.extend(f"{i}\t{j}" for i, j in zip(rows[upper], cols[upper]))
    return ("\n".join(lines) + "\n").encode()


def _labels_bytes(y: LabelVector) -> bytes:
    return ("\n".join(str(int(c)) for c in y.labels) + "\n").encode()


def _features_bytes(x: np.ndarray) -> bytes:
    header = np.asarray(x.shape, dtype="<u4").tobytes()
    return header + np.ascontiguousarray(x, dtype="<f8").tobytes()


def save_bundle(
    directory: str,
    g: SparseGraph,
    x: np.ndarray,
    y: LabelVector,
    source: str,
    generator_spec: Optional[Dict[str, Any]] = None,
) -> None:
    """Write a dataset bundle. The graph must be raw: normalization and
    self-loops are derived state that is recomputed on load."""
    if g.normalized or g.has_self_loops:
        raise ValueError("save the raw graph; normalization is derived on load")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != g.n:
        raise ValueError(f"features must be (n, f) with n={g.n}, got {x.shape}")
    if y.labels.size != g.n:
        raise ValueError(f"labels length {y.labels.size} does not match n={g.n}")

    os.makedirs(directory, exist_ok=True)
    payload = {
        EDGES_FILE: _edges_bytes(g),
        LABELS_FILE: _labels_bytes(y),
        FEATURES_FILE: _features_bytes(x),
    }
    for name, data in payload.items():
        with open(os.path.join(directory, name), "wb") as fh:
            fh.write(data)
    manifest = {
        "n": g.n,
        "f": int(x.shape[1]),
        "num_classes": y.num_classes,
        "source": source,
        "checksums": {name: _sha256(data) for name, data in payload.items()},
    }
    if generator_spec is not None:
        manifest["generator_spec"] = generator_spec
    with open(os.path.join(directory, MANIFEST_FILE), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote bundle to %s (n=%d, f=%d)", directory, g.n, x.shape[1])


def save_sample(directory: str, sample: CsbmSample) -> None:
    """Bundle a generated sample, echoing its generator parameters."""
    spec = sample.spec
    gen: Dict[str, Any] = {
        "kind": "csbm",
        "n": spec.n,
        "f": spec.f,
        "d": spec.d,
        "lam": spec.lam,
        "mu": spec.mu,
        "seed": spec.seed,
    }
    if sample.phi is not None:
        gen.update(phi=sample.phi.phi, xi=sample.phi.xi, epsilon=sample.phi.epsilon)
    save_bundle(directory, sample.graph, sample.features, sample.labels, "csbm", gen)


def _require(manifest: Dict[str, Any], field: str) -> Any:
    if field not in manifest:
        raise ValueError(f"manifest is missing required field {field!r}")
    return manifest[field]


def _parse_edges(data: bytes, n: int, name: str = EDGES_FILE) -> np.ndarray:
    edges = []
    for lineno, raw in enumerate(data.decode().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{name}:{lineno}: expected 'i<TAB>j', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"{name}:{lineno}: non-integer endpoint in {raw!r}") from None
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"{name}:{lineno}: endpoint out of range for n={n}")
        edges.append((i, j))
    return np.asarray(edges, dtype=np.int64).reshape(-1, 2)


def _parse_labels(data: bytes, n: int, num_classes: int) -> LabelVector:
    values = []
    for lineno, raw in enumerate(data.decode().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise ValueError(f"{LABELS_FILE}:{lineno}: non-integer label {raw!r}") from None
    if len(values) != n:
        raise ValueError(
            f"{LABELS_FILE} has {len(values)} labels but manifest field 'n' is {n}"
        )
    return LabelVector(np.asarray(values, dtype=np.int64), num_classes)


def _parse_features(data: bytes, n: int, f: int) -> np.ndarray:
    if len(data) < 8:
        raise ValueError(f"{FEATURES_FILE} is truncated: no dimension header")
    rows, cols = np.frombuffer(data[:8], dtype="<u4")
    if (rows, cols) != (n, f):
        raise ValueError(
            f"{FEATURES_FILE} is {rows}x{cols} but manifest fields 'n', 'f' say {n}x{f}"
        )
    expected = 8 + 8 * n * f
    if len(data) != expected:
        raise ValueError(f"{FEATURES_FILE} has {len(data)} bytes, expected {expected}")
    return np.frombuffer(data[8:], dtype="<f8").reshape(n, f).copy()


def read_edge_file(path: str, n: int) -> np.ndarray:
    """Parse a standalone ``i<TAB>j`` edge list into an (m, 2) index array."""
    with open(path, "rb") as fh:
        return _parse_edges(fh.read(), n, name=path)


def read_label_file(path: str) -> np.ndarray:
    """Parse a standalone one-integer-per-line label file."""
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(int(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer label {raw!r}") from None
    if not values:
        raise ValueError(f"{path} contains no labels")
    return np.asarray(values, dtype=np.int64)


def load_bundle(
    directory: str,
) -> Tuple[SparseGraph, np.ndarray, LabelVector, Dict[str, Any]]:
    """Load and validate a bundle; returns (graph, features, labels, manifest).

    Every file's sha256 is checked against the manifest before parsing, and
    parsed shapes are cross-checked against the manifest dimensions.
    """
    with open(os.path.join(directory, MANIFEST_FILE)) as fh:
        manifest = json.load(fh)
    n = int(_require(manifest, "n"))
    f = int(_require(manifest, "f"))
    num_classes = int(_require(manifest, "num_classes"))
    _require(manifest, "source")
    checksums = _require(manifest, "checksums")

    raw: Dict[str, bytes] = {}
    for name in (EDGES_FILE, LABELS_FILE, FEATURES_FILE):
        if name not in checksums:
            raise ValueError(f"manifest field 'checksums' is missing an entry for {name!r}")
        with open(os.path.join(directory, name), "rb") as fh:
            data = fh.read()
        digest = _sha256(data)
        if digest != checksums[name]:
            raise ValueError(
                f"checksum mismatch for {name}: manifest says {checksums[name]}, "
                f"file hashes to {digest}"
            )
        raw[name] = data

    edges = _parse_edges(raw[EDGES_FILE], n)
    labels = _parse_labels(raw[LABELS_FILE], n, num_classes)
    features = _parse_features(raw[FEATURES_FILE], n, f)
    graph = build_graph(n, edges)
    return graph, features, labels, manifest


def save_checkpoint(path: str, model: GprModel) -> None:
    """Serialize model parameters and hyperparameters to one binary file."""
    header = _HEADER.pack(
        CHECKPOINT_MAGIC,
        CHECKPOINT_VERSION,
        model.in_dim,
        model.hidden_dim,
        model.out_dim,
        model.K,
        model.eta,
        model.dropout_nn,
        model.dropout_gpr,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in (model.gamma, model.w1, model.b1, model.w2, model.b2):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> GprModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise ValueError("truncated checkpoint: header is incomplete")
    magic, version, f, h, C, K, eta, d_nn, d_gpr = _HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    sizes = [K + 1, f * h, h, h * C, C]
    expected = _HEADER.size + 8 * sum(sizes)
    if len(data) != expected:
        raise ValueError(f"truncated checkpoint: {len(data)} bytes, expected {expected}")
    offset = _HEADER.size
    arrays = []
    for size in sizes:
        arrays.append(np.frombuffer(data, dtype="<f8", count=size, offset=offset).copy())
        offset += 8 * size
    gamma, w1, b1, w2, b2 = arrays
    return GprModel(
        w1=w1.reshape(f, h),
        b1=b1,
        w2=w2.reshape(h, C),
        b2=b2,
        gamma=gamma,
        dropout_nn=d_nn,
        dropout_gpr=d_gpr,
        eta=eta,
    )

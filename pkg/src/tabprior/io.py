"""Dataset serialization: compact binary format and self-describing CSV.

Binary layout (little-endian): magic ``TBPR``, uint32 version, uint64 rows,
uint64 feature columns, uint8 task (0 regression / 1 classification), uint32
class count (0 for regression), a column-meta table of (uint8 kind, uint32
cardinality) pairs, the train mask as uint8 bytes, then the feature matrix
and target as row-major float64.

CSV columns carry their metadata in the header via ``:num`` / ``:cat{K}``
suffixes; the target is the last column, named ``target``.
"""

from __future__ import annotations

import io as _io
import struct

import numpy as np

from .dataset import GeneratedDataset

__all__ = [
    "write_binary",
    "read_binary",
    "write_csv",
    "read_csv",
    "dataset_metadata",
]

MAGIC = b"TBPR"
VERSION = 1


def write_binary(ds: GeneratedDataset, path) -> None:
    n, m = ds.X.shape
    buf = _io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<IQQBI", VERSION, n, m, int(ds.task == "classification"),
                          ds.n_classes or 0))
    for kind, card in ds.column_meta:
        buf.write(struct.pack("<BI", int(kind == "cat"), card or 0))
    buf.write(np.asarray(ds.train_mask, dtype=np.uint8).tobytes())
    buf.write(np.ascontiguousarray(ds.X, dtype="<f8").tobytes())
    buf.write(np.ascontiguousarray(ds.y, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def read_binary(path) -> GeneratedDataset:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise ValueError("not a dataset file (bad magic)")
    version, n, m, is_clf, n_classes = struct.unpack_from("<IQQBI", raw, 4)
    if version != VERSION:
        raise ValueError(f"unsupported version {version}")
    off = 4 + struct.calcsize("<IQQBI")
    meta = []
    for _ in range(m):
        kind, card = struct.unpack_from("<BI", raw, off)
        off += struct.calcsize("<BI")
        meta.append(("cat", card) if kind else ("num", None))
    mask = np.frombuffer(raw, dtype=np.uint8, count=n, offset=off).astype(bool)
    off += n
    X = np.frombuffer(raw, dtype="<f8", count=n * m, offset=off).reshape(n, m).copy()
    off += 8 * n * m
    y = np.frombuffer(raw, dtype="<f8", count=n, offset=off).copy()
    task = "classification" if is_clf else "regression"
    if task == "classification":
        y = y.astype(int)
    return GeneratedDataset(
        X=X, y=y, column_meta=meta, task=task,
        n_classes=n_classes or None, train_mask=mask, seed=-1,
    )


def _column_header(i, kind, card):
    return f"f{i}:cat{card}" if kind == "cat" else f"f{i}:num"


def write_csv(ds: GeneratedDataset, path) -> None:
    headers = [_column_header(i, k, c) for i, (k, c) in enumerate(ds.column_meta)]
    if ds.task == "classification":
        headers.append(f"target:cat{ds.n_classes}")
    else:
        headers.append("target:num")
    headers.append("train:flag")
    y = ds.y.astype(int) if ds.task == "classification" else ds.y
    with open(path, "w", newline="") as fh:
        fh.write(",".join(headers) + "\n")
        for i in range(ds.X.shape[0]):
            cells = [repr(float(v)) for v in ds.X[i]]
            cells.append(str(int(y[i])) if ds.task == "classification" else repr(float(y[i])))
            cells.append(str(int(ds.train_mask[i])))
            fh.write(",".join(cells) + "\n")


def read_csv(path) -> GeneratedDataset:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.asarray(rows, dtype=float)
    meta, n_classes, task = [], None, "regression"
    for name in header:
        col, _, suffix = name.partition(":")
        if col.startswith("f"):
            if suffix.startswith("cat"):
                meta.append(("cat", int(suffix[3:])))
            else:
                meta.append(("num", None))
        elif col == "target":
            if suffix.startswith("cat"):
                task = "classification"
                n_classes = int(suffix[3:])
    m = len(meta)
    X = data[:, :m]
    y = data[:, m]
    mask = data[:, m + 1].astype(bool)
    if task == "classification":
        y = y.astype(int)
    return GeneratedDataset(
        X=X, y=y, column_meta=meta, task=task,
        n_classes=n_classes, train_mask=mask, seed=-1,
    )


def dataset_metadata(ds: GeneratedDataset) -> dict:
    """JSON-ready metadata block for one generated dataset."""
    return {
        "seed": ds.seed,
        "task": ds.task,
        "n_samples": int(ds.X.shape[0]),
        "n_columns": int(ds.X.shape[1]),
        "n_classes": ds.n_classes,
        "n_train": int(ds.train_mask.sum()),
        "columns": [
            {"kind": kind, "cardinality": card} for kind, card in ds.column_meta
        ],
        # Wall-clock timing is excluded so re-runs are byte-identical.
        "telemetry": {k: v for k, v in ds.telemetry.items() if k != "seconds"},
    }

"""Matrix files: headerless CSV and raw little-endian float64.

raw-f64 layout: two little-endian uint64 (rows, cols), then rows * cols
little-endian float64 values in row-major order.
"""
import os
import struct

import numpy as np

from ..errors import InvalidInput, ParseError

HEADER = struct.Struct("<QQ")
FORMATS = ("csv", "raw-f64")


def infer_format(path, fmt=None):
    if fmt is not None:
        if fmt not in FORMATS:
            raise InvalidInput(f"unknown matrix format {fmt!r}; choose from {FORMATS}")
        return fmt
    return "csv" if str(path).lower().endswith((".csv", ".txt")) else "raw-f64"


def _csv_rows(path):
    ncols = None
    offset = 0
    with open(path, "rb") as f:
        for lineno, raw in enumerate(f, 1):
            start = offset
            offset += len(raw)
            line = raw.strip()
            if not line:
                continue
            try:
                row = np.array([float(tok) for tok in line.split(b",")])
            except ValueError:
                raise ParseError(f"{path}: malformed number", line=lineno, offset=start) from None
            if ncols is None:
                ncols = row.size
            elif row.size != ncols:
                raise ParseError(f"{path}: expected {ncols} fields, found {row.size}",
                                 line=lineno, offset=start)
            yield row


def _raw_header(f, path):
    head = f.read(HEADER.size)
    if len(head) < HEADER.size:
        raise ParseError(f"{path}: truncated header", offset=len(head))
    rows, cols = HEADER.unpack(head)
    return rows, cols


def _raw_rows(path):
    with open(path, "rb") as f:
        rows, cols = _raw_header(f, path)
        width = 8 * cols
        for i in range(rows):
            buf = f.read(width)
            if len(buf) < width:
                raise ParseError(f"{path}: file ends inside row {i}",
                                 offset=HEADER.size + i * width + len(buf))
            yield np.frombuffer(buf, dtype="<f8").astype(np.float64)


def iter_rows(path, fmt=None):
    """Yield one observation at a time without loading the whole file."""
    if infer_format(path, fmt) == "csv":
        return _csv_rows(path)
    return _raw_rows(path)


def iter_chunks(path, fmt=None, chunk_size=4096):
    buf = []
    for row in iter_rows(path, fmt):
        buf.append(row)
        if len(buf) == chunk_size:
            yield np.vstack(buf)
            buf = []
    if buf:
        yield np.vstack(buf)


def read_matrix(path, fmt=None) -> np.ndarray:
    fmt = infer_format(path, fmt)
    if fmt == "csv":
        rows = list(_csv_rows(path))
        if not rows:
            raise ParseError(f"{path}: no data", line=1, offset=0)
        return np.vstack(rows)
    with open(path, "rb") as f:
        rows, cols = _raw_header(f, path)
        need = 8 * rows * cols
        payload = f.read(need)
    if len(payload) < need:
        raise ParseError(f"{path}: expected {need} payload bytes, found {len(payload)}",
                         offset=HEADER.size + len(payload))
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(rows, cols)


def write_matrix(path, a, fmt=None):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidInput(f"can only write 2-D matrices, got shape {a.shape}")
    fmt = infer_format(path, fmt)
    tmp = f"{path}.tmp"
    if fmt == "csv":
        with open(tmp, "w") as f:
            for row in a:
                f.write(",".join(repr(float(v)) for v in row))
                f.write("\n")
    else:
        with open(tmp, "wb") as f:
            f.write(HEADER.pack(*a.shape))
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    os.replace(tmp, path)

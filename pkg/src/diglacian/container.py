"""Matrix file formats used for preprocessing artifacts.

Dense matrices use a small binary container::

    b"DGL1"            magic
    uint8              dtype code (1 float64, 2 float32, 3 int64, 4 int32)
    uint8              number of dimensions
    uint64 * ndim      shape
    payload            little-endian, row-major

Sparse matrices are written as ``row<TAB>col<TAB>value`` TSV triplets in
row-major order, with a ``# shape <rows> <cols>`` header line.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ParseError

MAGIC = b"DGL1"
DTYPE_CODES = {1: "<f8", 2: "<f4", 3: "<i8", 4: "<i4"}
CODE_FOR = {np.dtype(v): k for k, v in DTYPE_CODES.items()}


def write_dense(path, array):
    array = np.asarray(array)
    dtype = array.dtype.newbyteorder("<")
    if dtype not in CODE_FOR:
        raise TypeError(f"unsupported dtype {array.dtype}")
    header = MAGIC + struct.pack("<BB", CODE_FOR[dtype], array.ndim)
    header += struct.pack(f"<{array.ndim}Q", *array.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(array, dtype=dtype).tobytes(order="C"))


def read_dense(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ParseError(path, 0, "missing DGL1 magic bytes")
    code, ndim = struct.unpack_from("<BB", data, 4)
    if code not in DTYPE_CODES:
        raise ParseError(path, 0, f"unknown dtype code {code}")
    shape = struct.unpack_from(f"<{ndim}Q", data, 6)
    offset = 6 + 8 * ndim
    dtype = np.dtype(DTYPE_CODES[code])
    expected = int(np.prod(shape)) * dtype.itemsize
    if len(data) - offset != expected:
        raise ParseError(path, 0, f"payload has {len(data) - offset} bytes, expected {expected}")
    return np.frombuffer(data, dtype=dtype, offset=offset).reshape(shape).astype(dtype.newbyteorder("="))


def write_sparse(path, M):
    M = sp.csr_matrix(M)
    M.sort_indices()
    coo = M.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# shape {M.shape[0]} {M.shape[1]}\n")
        for r, c, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
            fh.write(f"{r}\t{c}\t{v!r}\n")


def read_sparse(path) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    shape = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("# shape"):
                shape = tuple(int(x) for x in line.split()[2:4])
                continue
            if line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(path, lineno, "expected row, col, value")
            try:
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                vals.append(float(parts[2]))
            except ValueError:
                raise ParseError(path, lineno, "malformed triplet") from None
    if shape is None:
        raise ParseError(path, 1, "missing '# shape' header")
    M = sp.csr_matrix((vals, (rows, cols)), shape=shape)
    M.sort_indices()
    return M


def write_vector(path, v):
    Path(path).write_text("".join(f"{float(x)!r}\n" for x in v), encoding="utf-8")


def read_vector(path) -> np.ndarray:
    return np.array([float(x) for x in Path(path).read_text(encoding="utf-8").split()])

import struct

import numpy as np
import pytest
import scipy.sparse as sp

from diglacian.container import read_dense, read_sparse, read_vector, write_dense, write_sparse, write_vector
from diglacian.errors import ParseError


@pytest.mark.parametrize("dtype", ["<f8", "<f4", "<i8", "<i4"])
def test_dense_round_trip(tmp_path, dtype):
    a = (np.random.default_rng(0).standard_normal((5, 7)) * 100).astype(dtype)
    write_dense(tmp_path / "a.dgl", a)
    b = read_dense(tmp_path / "a.dgl")
    assert b.dtype == a.dtype and np.array_equal(a, b)


def test_dense_header_layout(tmp_path):
    write_dense(tmp_path / "a.dgl", np.arange(6, dtype=np.float64).reshape(2, 3))
    raw = (tmp_path / "a.dgl").read_bytes()
    assert raw[:4] == b"DGL1"
    assert struct.unpack_from("<BB2Q", raw, 4) == (1, 2, 2, 3)
    assert np.frombuffer(raw[22:], "<f8").tolist() == [0, 1, 2, 3, 4, 5]


def test_dense_rejects_corruption(tmp_path):
    p = tmp_path / "a.dgl"
    write_dense(p, np.ones((3, 3)))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ParseError):
        read_dense(p)
    p.write_bytes(b"NOPE" + bytes(10))
    with pytest.raises(ParseError):
        read_dense(p)
    with pytest.raises(TypeError):
        write_dense(p, np.ones(3, dtype=np.complex128))


def test_sparse_round_trip(tmp_path):
    M = sp.random(20, 15, density=0.2, random_state=1, format="csr")
    write_sparse(tmp_path / "m.tsv", M)
    back = read_sparse(tmp_path / "m.tsv")
    assert back.shape == (20, 15) and (back != M).nnz == 0


def test_sparse_requires_shape(tmp_path):
    p = tmp_path / "m.tsv"
    p.write_text("0\t1\t2.0\n")
    with pytest.raises(ParseError):
        read_sparse(p)
    p.write_text("# shape 2 2\n0\t1\n")
    with pytest.raises(ParseError):
        read_sparse(p)


def test_vector_round_trip(tmp_path):
    v = np.random.default_rng(2).random(11)
    write_vector(tmp_path / "v.tsv", v)
    assert np.array_equal(read_vector(tmp_path / "v.tsv"), v)

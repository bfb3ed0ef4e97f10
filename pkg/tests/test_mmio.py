import numpy as np
import pytest

from blockhhl.errors import MatrixMarketError
from blockhhl.matrix import GeneratorSpec, SparseMatrix, generate_rhs, generate_spd
from blockhhl.mmio import load_matrix_market, load_vector, save_matrix_market, save_vector


def write(tmp_path, text, name="a.mtx"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_identity_round_trip(tmp_path):
    p = tmp_path / "i.mtx"
    save_matrix_market(SparseMatrix.identity(2), p)
    assert load_matrix_market(p).same_as(SparseMatrix.identity(2))


def test_symmetric_expansion(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n2 1 5\n2 2 1\n")
    d = load_matrix_market(p).to_dense()
    assert d[0, 1] == 5 and d[1, 0] == 5


def test_hermitian_expansion_conjugates(tmp_path):
    p = write(tmp_path, "%%MatrixMarket matrix coordinate complex hermitian\n2 2 3\n1 1 2 0\n2 1 1 1\n2 2 3 0\n")
    d = load_matrix_market(p).to_dense()
    assert d[1, 0] == 1 + 1j and d[0, 1] == 1 - 1j


def test_generated_round_trip(tmp_path):
    A = generate_spd(GeneratorSpec(8, 0.2, 42, 2))
    p = tmp_path / "g.mtx"
    save_matrix_market(A, p)
    B = load_matrix_market(p)
    assert np.array_equal(A.row_offsets, B.row_offsets)
    assert np.array_equal(A.col_indices, B.col_indices)
    assert np.max(np.abs(A.values - B.values)) <= 1e-15


def test_complex_round_trip(tmp_path):
    A = generate_spd(GeneratorSpec(6, 0.5, 3, 2, True))
    p = tmp_path / "c.mtx"
    save_matrix_market(A, p)
    assert load_matrix_market(p).same_as(A)


@pytest.mark.parametrize("text,line", [
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n1 1 2\n", 4),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n% note\n2 2 2\n1 1 1\n2 5 1\n", 5),
    ("%%MatrixMarket matrix coordinate real general\n2 x 1\n1 1 1\n", 2),
    ("%%NotMatrixMarket\n2 2 1\n1 1 1\n", 1),
    ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1\n", 3),
])
def test_parse_errors_carry_line(tmp_path, text, line):
    with pytest.raises(MatrixMarketError) as exc:
        load_matrix_market(write(tmp_path, text))
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_entry_count_mismatch(tmp_path):
    with pytest.raises(MatrixMarketError):
        load_matrix_market(write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1\n"))


def test_vector_formats(tmp_path):
    plain = write(tmp_path, "1\n2.5\n3 -1\n", "v.txt")
    assert np.array_equal(load_vector(plain), [1, 2.5, 3 - 1j])
    arr = write(tmp_path, "%%MatrixMarket matrix array real general\n2 1\n4\n5\n", "v.mtx")
    assert np.array_equal(load_vector(arr), [4, 5])


@pytest.mark.parametrize("cplx", [False, True])
def test_vector_round_trip(tmp_path, cplx):
    v = generate_rhs(9, 4, cplx)
    p = tmp_path / "v.txt"
    save_vector(v, p)
    assert np.array_equal(load_vector(p), v)

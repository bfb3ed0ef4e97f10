"""Matrix Market coordinate I/O and plain-text vector files.

Only the coordinate format with ``real``/``integer``/``complex`` fields and
``general``/``symmetric``/``hermitian`` symmetry is read. Writing always uses
``general`` symmetry so the stored pattern round-trips exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import MatrixMarketError
from .matrix import SparseMatrix, as_vector

_FIELDS = ("real", "integer", "complex")
_SYMMETRIES = ("general", "symmetric", "hermitian")


def _fmt(x: float) -> str:
    return repr(float(x))


def _data_lines(lines, start):
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        text = raw.strip()
        if text and not text.startswith("%"):
            yield lineno, text


def load_matrix_market(path) -> SparseMatrix:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    header = lines[0].split()
    if len(header) != 5 or header[0].lower() != "%%matrixmarket" or header[1].lower() != "matrix":
        raise MatrixMarketError("missing %%MatrixMarket matrix header", 1)
    fmt, field, symmetry = (h.lower() for h in header[2:])
    if fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format {fmt!r}", 1)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r}", 1)
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", 1)

    body = _data_lines(lines, 1)
    try:
        size_line, size_text = next(body)
    except StopIteration:
        raise MatrixMarketError("missing size line") from None
    try:
        nrows, ncols, nnz = (int(t) for t in size_text.split())
    except ValueError:
        raise MatrixMarketError(f"bad size line {size_text!r}", size_line) from None
    if nrows != ncols:
        raise MatrixMarketError(f"matrix is not square ({nrows}x{ncols})", size_line)

    ncol_expected = 4 if field == "complex" else 3
    rows, cols, vals = [], [], []
    seen = {}
    for lineno, text in body:
        parts = text.split()
        if len(parts) != ncol_expected:
            raise MatrixMarketError(f"expected {ncol_expected} columns, got {len(parts)}", lineno)
        try:
            i, j = int(parts[0]) - 1, int(parts[1]) - 1
            v = complex(float(parts[2]), float(parts[3])) if field == "complex" else complex(float(parts[2]))
        except ValueError:
            raise MatrixMarketError(f"cannot parse entry {text!r}", lineno) from None
        if not (0 <= i < nrows and 0 <= j < ncols):
            raise MatrixMarketError(f"index ({i + 1}, {j + 1}) out of range", lineno)
        if symmetry != "general" and j > i:
            raise MatrixMarketError("upper-triangle entry in a symmetric file", lineno)
        if (i, j) in seen:
            raise MatrixMarketError(f"duplicate entry ({i + 1}, {j + 1}), first on line {seen[i, j]}", lineno)
        seen[i, j] = lineno
        rows.append(i)
        cols.append(j)
        vals.append(v)
        if symmetry != "general" and i != j:
            rows.append(j)
            cols.append(i)
            vals.append(v.conjugate() if symmetry == "hermitian" else v)
    if len(seen) != nnz:
        raise MatrixMarketError(f"header declares {nnz} entries, found {len(seen)}")
    return SparseMatrix.from_coo(nrows, rows, cols, np.array(vals, dtype=np.complex128))


def save_matrix_market(A: SparseMatrix, path) -> None:
    rows, cols, vals = A.to_coo()
    is_complex = bool(np.any(vals.imag != 0))
    field = "complex" if is_complex else "real"
    out = [f"%%MatrixMarket matrix coordinate {field} general", f"{A.n} {A.n} {A.nnz}"]
    for i, j, v in zip(rows, cols, vals):
        if is_complex:
            out.append(f"{i + 1} {j + 1} {_fmt(v.real)} {_fmt(v.imag)}")
        else:
            out.append(f"{i + 1} {j + 1} {_fmt(v.real)}")
    Path(path).write_text("\n".join(out) + "\n")


def load_vector(path) -> np.ndarray:
    """Read a dense vector from Matrix Market array format or plain text.

    Plain text holds one value per line; complex values are written ``re im``.
    """
    lines = Path(path).read_text().splitlines()
    if lines and lines[0].lower().startswith("%%matrixmarket"):
        header = lines[0].split()
        if len(header) != 5 or header[2].lower() != "array":
            raise MatrixMarketError("vector files must use the array format", 1)
        field = header[3].lower()
        body = _data_lines(lines, 1)
        try:
            size_line, size_text = next(body)
            nrows, ncols = (int(t) for t in size_text.split())
        except (StopIteration, ValueError):
            raise MatrixMarketError("bad size line", 2) from None
        if ncols != 1:
            raise MatrixMarketError(f"expected one column, got {ncols}", size_line)
        entries = list(body)
        if len(entries) != nrows:
            raise MatrixMarketError(f"header declares {nrows} values, found {len(entries)}")
        expect = 2 if field == "complex" else 1
    else:
        entries = list(_data_lines(lines, 0))
        expect = None
    out = []
    for lineno, text in entries:
        parts = text.split()
        if expect is not None and len(parts) != expect or len(parts) not in (1, 2):
            raise MatrixMarketError(f"cannot parse value {text!r}", lineno)
        try:
            out.append(complex(float(parts[0]), float(parts[1]) if len(parts) == 2 else 0.0))
        except ValueError:
            raise MatrixMarketError(f"cannot parse value {text!r}", lineno) from None
    return as_vector(out)


def save_vector(v, path) -> None:
    v = as_vector(v)
    if np.any(v.imag != 0):
        lines = [f"{_fmt(z.real)} {_fmt(z.imag)}" for z in v]
    else:
        lines = [_fmt(z.real) for z in v]
    Path(path).write_text("\n".join(lines) + "\n")

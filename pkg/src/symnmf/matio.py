"""Matrix file formats.

Two plain-text layouts, chosen by extension:
  dense (.txt, .dat): header "rows cols", then one whitespace-separated
    row per line
  coordinate (.mtx, .coo): optional %-comment lines, header
    "rows cols nnz", then 1-based "i j value" triples; when a square file
    carries only one off-diagonal triangle the other is mirrored in
Values are written with 17 significant digits so round trips are lossless.
"""

import math
import os

from . import linalg as la
from .errors import MatrixFormatError

_DENSE_EXTS = {".txt", ".dat"}
_COORD_EXTS = {".mtx", ".coo"}


def _fmt(v):
    return f"{v:.17g}"


def _parse_float(token, line_no):
    try:
        value = float(token)
    except ValueError:
        raise MatrixFormatError(f"non-numeric token {token!r}", line_no) from None
    if not math.isfinite(value):
        raise MatrixFormatError(f"non-finite value {token!r}", line_no)
    return value


def _parse_int(token, line_no, what):
    try:
        value = int(token)
    except ValueError:
        raise MatrixFormatError(
            f"expected integer {what}, got {token!r}", line_no
        ) from None
    return value


def save_matrix(m, path):
    """Write m in the format implied by the file extension."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext in _DENSE_EXTS:
        _save_dense(m, path)
    elif ext in _COORD_EXTS:
        _save_coordinate(m, path)
    else:
        raise MatrixFormatError(f"unsupported extension {ext!r} in {path}")


def load_matrix(path):
    """Read a matrix written by save_matrix (or compatible by hand)."""
    ext = os.path.splitext(str(path))[1].lower()
    if ext in _DENSE_EXTS:
        return _load_dense(path)
    if ext in _COORD_EXTS:
        return _load_coordinate(path)
    raise MatrixFormatError(f"unsupported extension {ext!r} in {path}")


def _save_dense(m, path):
    with open(path, "w") as fh:
        fh.write(f"{m.rows} {m.cols}\n")
        for i in range(m.rows):
            fh.write(" ".join(_fmt(m.get(i, j)) for j in range(m.cols)))
            fh.write("\n")


def _load_dense(path):
    with open(path) as fh:
        lines = fh.readlines()
    body = [
        (no, line.split())
        for no, line in enumerate(lines, start=1)
        if line.strip()
    ]
    if not body:
        raise MatrixFormatError("empty file, expected a 'rows cols' header")
    header_no, header = body[0]
    if len(header) != 2:
        raise MatrixFormatError(
            f"expected 'rows cols' header, got {len(header)} tokens", header_no
        )
    rows = _parse_int(header[0], header_no, "row count")
    cols = _parse_int(header[1], header_no, "column count")
    if rows < 1 or cols < 1:
        raise MatrixFormatError(f"invalid dimensions {rows}x{cols}", header_no)
    if len(body) - 1 != rows:
        raise MatrixFormatError(
            f"expected {rows} data rows, found {len(body) - 1}",
            body[-1][0] if len(body) > 1 else header_no,
        )
    m = la.DenseMatrix.zeros(rows, cols)
    for i, (no, tokens) in enumerate(body[1:]):
        if len(tokens) != cols:
            raise MatrixFormatError(
                f"expected {cols} values in row {i + 1}, found {len(tokens)}", no
            )
        for j, tok in enumerate(tokens):
            m.set(i, j, _parse_float(tok, no))
    return m


def _save_coordinate(m, path):
    symmetric = m.rows == m.cols and la.max_asymmetry(m) == 0.0
    entries = []
    for i in range(m.rows):
        j_start = i if symmetric else 0
        for j in range(j_start, m.cols):
            v = m.get(i, j)
            if v != 0.0:
                entries.append((i + 1, j + 1, v))
    with open(path, "w") as fh:
        fh.write(f"{m.rows} {m.cols} {len(entries)}\n")
        for i, j, v in entries:
            fh.write(f"{i} {j} {_fmt(v)}\n")


def _load_coordinate(path):
    with open(path) as fh:
        lines = fh.readlines()
    body = [
        (no, line.split())
        for no, line in enumerate(lines, start=1)
        if line.strip() and not line.lstrip().startswith("%")
    ]
    if not body:
        raise MatrixFormatError("empty file, expected a 'rows cols nnz' header")
    header_no, header = body[0]
    if len(header) != 3:
        raise MatrixFormatError(
            f"expected 'rows cols nnz' header, got {len(header)} tokens", header_no
        )
    rows = _parse_int(header[0], header_no, "row count")
    cols = _parse_int(header[1], header_no, "column count")
    nnz = _parse_int(header[2], header_no, "entry count")
    if rows < 1 or cols < 1 or nnz < 0:
        raise MatrixFormatError(
            f"invalid header values {rows} {cols} {nnz}", header_no
        )
    if len(body) - 1 != nnz:
        raise MatrixFormatError(
            f"expected {nnz} entries, found {len(body) - 1}",
            body[-1][0] if len(body) > 1 else header_no,
        )
    m = la.DenseMatrix.zeros(rows, cols)
    seen = set()
    lower = 0
    upper = 0
    for no, tokens in body[1:]:
        if len(tokens) != 3:
            raise MatrixFormatError(
                f"expected 'i j value', got {len(tokens)} tokens", no
            )
        i = _parse_int(tokens[0], no, "row index")
        j = _parse_int(tokens[1], no, "column index")
        if not (1 <= i <= rows) or not (1 <= j <= cols):
            raise MatrixFormatError(
                f"index ({i}, {j}) outside {rows}x{cols}", no
            )
        if (i, j) in seen:
            raise MatrixFormatError(f"duplicate entry ({i}, {j})", no)
        seen.add((i, j))
        if i > j:
            lower += 1
        elif i < j:
            upper += 1
        m.set(i - 1, j - 1, _parse_float(tokens[2], no))
    # mirror when a square file populates only one off-diagonal triangle
    if rows == cols and (lower == 0) != (upper == 0):
        for i in range(rows):
            for j in range(i + 1, cols):
                if upper:
                    m.set(j, i, m.get(i, j))
                else:
                    m.set(i, j, m.get(j, i))
    return m

"""Benchmark model constructors and Matrix Market ingestion.

The heat-rod generator fixes the input at x ~ 1/3 and the output at x ~ 2/3
of the domain (the source problem statement leaves the I/O maps open); this
choice is documented in the README so experiments are reproducible.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, ParseError
from .linalg import DenseOperator, TridiagonalOperator
from .system import StateSpaceModel

__all__ = [
    "heat_rod",
    "random_stable",
    "illustrative4",
    "load_matrix_market",
    "read_matrix_market",
    "save_matrix_market",
]


def heat_rod(n: int) -> StateSpaceModel:
    """1-D heat equation on (0, 1) with Dirichlet boundaries, discretized by
    centered second differences on ``n`` interior points.

    ``A = (n+1)^2 tridiag(1, -2, 1)`` is kept in tridiagonal form with O(n)
    shifted solves. SISO: the input enters at grid point round(n/3) with
    weight n+1 and the output reads grid point round(2n/3). ``A`` is
    symmetric negative definite, hence Hurwitz by construction.
    """
    if n < 3:
        raise ValueError("heat_rod requires n >= 3")
    h2 = float(n + 1) ** 2
    a = TridiagonalOperator(
        lower=np.full(n - 1, h2),
        diag=np.full(n, -2.0 * h2),
        upper=np.full(n - 1, h2),
        known_hurwitz=True,
    )
    j = min(max(int(round(n / 3)), 1), n)
    k = min(max(int(round(2 * n / 3)), 1), n)
    b = np.zeros((n, 1))
    b[j - 1, 0] = float(n + 1)
    c = np.zeros((1, n))
    c[0, k - 1] = 1.0
    return StateSpaceModel(a, b, c)


def random_stable(n: int, m: int, p: int, seed: int) -> StateSpaceModel:
    """Random stable system: ``A = M - (||M||_2 + 1) I`` with Gaussian ``M``,
    Gaussian ``B`` and ``C`` from seed-derived substreams.

    The norm shift guarantees every eigenvalue satisfies Re < -1, so the
    result is Hurwitz for every seed, and the construction is deterministic
    in ``seed``.
    """
    if min(n, m, p) < 1:
        raise ValueError("n, m, p must all be >= 1")
    streams = np.random.SeedSequence(seed).spawn(3)
    ma = np.random.default_rng(streams[0]).standard_normal((n, n))
    a = ma - (np.linalg.norm(ma, 2) + 1.0) * np.eye(n)
    b = np.random.default_rng(streams[1]).standard_normal((n, m))
    c = np.random.default_rng(streams[2]).standard_normal((p, n))
    return StateSpaceModel(DenseOperator(a, known_hurwitz=True), b, c)


def illustrative4() -> StateSpaceModel:
    """Fourth-order modal-form model whose Gramian truncation defeats naive
    low-rank balanced truncation.

    The pole at -100 is strongly controllable but weakly observable and the
    pole at -200 the reverse, so truncating either Gramian independently
    discards information the other one needs.
    """
    a = np.diag([-0.1, -0.2, -100.0, -200.0])
    b = np.array([[1.0], [1.0], [1.0e4], [1.0]])
    c = np.array([[1.0, 1.0, 1.0, 1.0e4]])
    return StateSpaceModel(DenseOperator(a, known_hurwitz=True), b, c)


def _mm_parse(path):
    """Parse one Matrix Market file (coordinate or array; general or
    symmetric; real entries) into a dense array."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.readlines()
    if not lines:
        raise ParseError("empty file", line=1)
    header = lines[0].strip().split()
    if len(header) != 5 or header[0] != "%%MatrixMarket":
        raise ParseError("expected '%%MatrixMarket object format field symmetry'",
                         line=1)
    _, obj, fmt, field, symmetry = (tok.lower() for tok in header)
    if obj != "matrix":
        raise ParseError(f"unsupported object '{obj}'", line=1)
    if fmt not in ("coordinate", "array"):
        raise ParseError(f"unsupported format '{fmt}'", line=1)
    if field not in ("real", "integer"):
        raise ParseError(f"unsupported field '{field}'", line=1)
    if symmetry not in ("general", "symmetric"):
        raise ParseError(f"unsupported symmetry '{symmetry}'", line=1)

    data = [(i + 1, ln.strip()) for i, ln in enumerate(lines[1:], start=1)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not data:
        raise ParseError("missing size line", line=len(lines))

    size_lineno, size_line = data[0]
    sizes = size_line.split()
    if fmt == "coordinate":
        if len(sizes) != 3:
            raise ParseError("coordinate size line needs 'rows cols nnz'",
                             line=size_lineno)
        try:
            rows, cols, nnz = (int(tok) for tok in sizes)
        except ValueError:
            raise ParseError("non-integer size entry", line=size_lineno) from None
        if len(data) - 1 != nnz:
            raise ParseError(f"expected {nnz} entries, found {len(data) - 1}",
                             line=size_lineno)
        mat = np.zeros((rows, cols))
        for lineno, entry in data[1:]:
            toks = entry.split()
            if len(toks) != 3:
                raise ParseError("coordinate entry needs 'i j value'", line=lineno)
            try:
                i, j, v = int(toks[0]), int(toks[1]), float(toks[2])
            except ValueError:
                raise ParseError("malformed coordinate entry", line=lineno) from None
            if not (1 <= i <= rows and 1 <= j <= cols):
                raise ParseError(f"index ({i}, {j}) out of bounds", line=lineno)
            mat[i - 1, j - 1] = v
            if symmetry == "symmetric" and i != j:
                mat[j - 1, i - 1] = v
    else:
        if len(sizes) != 2:
            raise ParseError("array size line needs 'rows cols'", line=size_lineno)
        try:
            rows, cols = (int(tok) for tok in sizes)
        except ValueError:
            raise ParseError("non-integer size entry", line=size_lineno) from None
        if symmetry == "symmetric" and rows != cols:
            raise ParseError("symmetric array matrix must be square",
                             line=size_lineno)
        expected = rows * cols if symmetry == "general" \
            else rows * (rows + 1) // 2
        if len(data) - 1 != expected:
            raise ParseError(f"expected {expected} values, found {len(data) - 1}",
                             line=size_lineno)
        mat = np.zeros((rows, cols))
        it = iter(data[1:])
        if symmetry == "general":
            for j in range(cols):
                for i in range(rows):
                    lineno, entry = next(it)
                    try:
                        mat[i, j] = float(entry)
                    except ValueError:
                        raise ParseError("malformed value", line=lineno) from None
        else:
            for j in range(cols):
                for i in range(j, rows):
                    lineno, entry = next(it)
                    try:
                        v = float(entry)
                    except ValueError:
                        raise ParseError("malformed value", line=lineno) from None
                    mat[i, j] = v
                    mat[j, i] = v
    return mat


def read_matrix_market(path) -> np.ndarray:
    """Read a single Matrix Market file as a dense array."""
    return _mm_parse(path)


def _is_tridiagonal(a):
    n = a.shape[0]
    if n != a.shape[1]:
        return False
    mask = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :]) > 1
    return not np.any(a[mask])


def load_matrix_market(a_path, b_path, c_path) -> StateSpaceModel:
    """Assemble a state-space model from three Matrix Market files.

    ``A`` becomes a tridiagonal operator when its pattern allows, otherwise
    a dense one. Raises :class:`DimensionMismatchError` when the shapes of
    the three matrices are inconsistent.
    """
    a = _mm_parse(a_path)
    b = _mm_parse(b_path)
    c = _mm_parse(c_path)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"A must be square, got {a.shape}")
    n = a.shape[0]
    if b.shape[0] != n:
        raise DimensionMismatchError(f"B has {b.shape[0]} rows, expected {n}")
    if c.shape[1] != n:
        raise DimensionMismatchError(f"C has {c.shape[1]} columns, expected {n}")
    if n > 2 and _is_tridiagonal(a):
        op = TridiagonalOperator(np.diag(a, -1).copy(), np.diag(a).copy(),
                                 np.diag(a, 1).copy())
        return StateSpaceModel(op, b, c)
    return StateSpaceModel(a, b, c)


def save_matrix_market(path, matrix) -> None:
    """Write a dense matrix in Matrix Market array format (full precision,
    so a read-back reproduces the entries bitwise)."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("%%MatrixMarket matrix array real general\n")
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for j in range(m.shape[1]):
            for i in range(m.shape[0]):
                fh.write(f"{m[i, j]:.17g}\n")

"""Dense linear-algebra kernels and structured Sylvester/Lyapunov solvers.

Everything here is a pure function of its inputs (no shared mutable state),
so all operations are safe to call concurrently.
"""

from __future__ import annotations

import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    EmptyInputError,
    NonHurwitzError,
    NotSymmetricError,
    ShiftSolveFailure,
    SingularSeparationError,
    SpectrumOverlapError,
)

__all__ = [
    "LinearOperator",
    "DenseOperator",
    "TridiagonalOperator",
    "SpdFactor",
    "as_operator",
    "solve_lyapunov_dense",
    "solve_sylvester_skinny",
    "orthonormalize",
    "psd_factor",
    "ordered_svd",
]

# Columns whose post-projection residual falls below this fraction of the
# largest input column norm are considered linearly dependent.
ORTH_DROP_RTOL = 1e-12

# Eigenvalues of a PSD matrix below this fraction of the largest one are
# clipped to zero when factoring.
PSD_CLIP_RTOL = 1e-14


class LinearOperator(ABC):
    """Square real operator with products and shifted solves.

    Concrete operators must keep ``apply`` and ``shifted_solve`` consistent
    with the dense matrix they abstract (to ~1e-12 relative when both exist).
    ``known_hurwitz`` may be set by constructors that guarantee stability
    structurally, avoiding an eigenvalue computation.
    """

    known_hurwitz: bool | None = None

    @property
    @abstractmethod
    def n(self) -> int:
        """Dimension of the (square) operator."""

    @abstractmethod
    def apply(self, x):
        """Return ``A @ x`` for a vector or (n, k) block ``x``."""

    @abstractmethod
    def apply_transpose(self, x):
        """Return ``A.T @ x``."""

    @abstractmethod
    def shifted_solve(self, s, b):
        """Solve ``(A - s I) x = b`` for a real or complex scalar shift ``s``.

        Raises
        ------
        ShiftSolveFailure
            If the shifted system is singular or the solve produced
            non-finite values.
        """

    @abstractmethod
    def transpose(self) -> "LinearOperator":
        """Return an operator representing ``A.T``."""

    @abstractmethod
    def to_dense(self) -> np.ndarray:
        """Materialize the operator as a dense array."""


def _check_solution_finite(x):
    if not np.all(np.isfinite(x)):
        raise ShiftSolveFailure("shifted solve produced non-finite values")
    return x


class DenseOperator(LinearOperator):
    """Operator backed by a dense square matrix."""

    def __init__(self, matrix, known_hurwitz=None):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] < 1:
            raise ValueError("operator dimension must be >= 1")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        self._m = m
        self.known_hurwitz = known_hurwitz

    @property
    def n(self):
        return self._m.shape[0]

    def apply(self, x):
        return self._m @ x

    def apply_transpose(self, x):
        return self._m.T @ x

    def shifted_solve(self, s, b):
        s = complex(s)
        real = s.imag == 0.0 and not np.iscomplexobj(b)
        shift = s.real if real else s
        a = self._m - shift * np.eye(self.n, dtype=float if real else complex)
        try:
            # singularity surfaces as non-finite entries; scipy's warning is
            # redundant with the check below
            with warnings.catch_warnings(), np.errstate(divide="ignore",
                                                        invalid="ignore"):
                warnings.simplefilter("ignore")
                x = sla.solve(a, b)
        except sla.LinAlgError as exc:
            raise ShiftSolveFailure(f"(A - sI) singular for s = {s}") from exc
        return _check_solution_finite(x)

    def transpose(self):
        return DenseOperator(self._m.T, known_hurwitz=self.known_hurwitz)

    def to_dense(self):
        return self._m.copy()


class TridiagonalOperator(LinearOperator):
    """Tridiagonal operator with O(n) products and shifted solves."""

    def __init__(self, lower, diag, upper, known_hurwitz=None):
        d = np.asarray(diag, dtype=float)
        lo = np.asarray(lower, dtype=float)
        up = np.asarray(upper, dtype=float)
        n = d.shape[0]
        if n < 1 or d.ndim != 1:
            raise ValueError("diag must be a 1-D array of length >= 1")
        if lo.shape != (max(n - 1, 0),) or up.shape != (max(n - 1, 0),):
            raise ValueError("lower/upper diagonals must have length n - 1")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(lo)) and np.all(np.isfinite(up))):
            raise ValueError("matrix entries must be finite")
        self._lo = lo
        self._d = d
        self._up = up
        self.known_hurwitz = known_hurwitz

    @property
    def n(self):
        return self._d.shape[0]

    def _matvec(self, lo, d, up, x):
        vec = x.ndim == 1
        if vec:
            x = x[:, None]
        y = d[:, None] * x
        if self.n > 1:
            y[:-1] += up[:, None] * x[1:]
            y[1:] += lo[:, None] * x[:-1]
        return y[:, 0] if vec else y

    def apply(self, x):
        return self._matvec(self._lo, self._d, self._up, np.asarray(x))

    def apply_transpose(self, x):
        return self._matvec(self._up, self._d, self._lo, np.asarray(x))

    def shifted_solve(self, s, b):
        s = complex(s)
        b = np.asarray(b)
        real = s.imag == 0.0 and not np.iscomplexobj(b)
        dtype = float if real else complex
        vec = b.ndim == 1
        rhs = np.array(b[:, None] if vec else b, dtype=dtype, order="F")
        d = (self._d - (s.real if real else s)).astype(dtype)
        if self.n == 1:
            if d[0] == 0:
                raise ShiftSolveFailure(f"(A - sI) singular for s = {s}")
            x = rhs / d[0]
        else:
            gtsv = sla.get_lapack_funcs("gtsv", (d, rhs))
            _, _, _, x, info = gtsv(
                self._lo.astype(dtype), d, self._up.astype(dtype), rhs,
                overwrite_dl=True, overwrite_d=True, overwrite_du=True,
                overwrite_b=True,
            )
            if info != 0:
                raise ShiftSolveFailure(f"(A - sI) singular for s = {s}")
        _check_solution_finite(x)
        return x[:, 0] if vec else x

    def transpose(self):
        return TridiagonalOperator(self._up, self._d, self._lo,
                                   known_hurwitz=self.known_hurwitz)

    def to_dense(self):
        if self.n > 20_000:
            raise MemoryError(
                f"refusing to densify a {self.n}x{self.n} tridiagonal operator")
        a = np.diag(self._d)
        if self.n > 1:
            a += np.diag(self._lo, -1) + np.diag(self._up, 1)
        return a


def as_operator(a) -> LinearOperator:
    """Wrap a dense array as a :class:`DenseOperator`; pass operators through."""
    if isinstance(a, LinearOperator):
        return a
    return DenseOperator(a)


def quasi_triangular_eigvals(t):
    """Eigenvalues of a real quasi-upper-triangular (Schur form) matrix."""
    n = t.shape[0]
    ev = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and t[i + 1, i] != 0.0:
            a, b = t[i, i], t[i, i + 1]
            c, d = t[i + 1, i], t[i + 1, i + 1]
            mu = 0.5 * (a + d)
            disc = 0.25 * (a - d) ** 2 + b * c
            if disc < 0.0:
                w = np.sqrt(-disc)
                ev[i] = mu + 1j * w
                ev[i + 1] = mu - 1j * w
            else:  # non-standardized block with real eigenvalues
                w = np.sqrt(disc)
                ev[i] = mu + w
                ev[i + 1] = mu - w
            i += 2
        else:
            ev[i] = t[i, i]
            i += 1
    return ev


def solve_lyapunov_dense(a, g):
    """Solve ``A P + P A^T + G = 0`` for symmetric ``P``.

    Uses the real Schur form of ``A`` and a quasi-triangular Sylvester
    back-substitution (LAPACK ``trsyl``). The result is symmetrized before
    returning.

    Parameters
    ----------
    a : (n, n) array_like
        Hurwitz coefficient matrix.
    g : (n, n) array_like
        Symmetric right-hand side.

    Raises
    ------
    NonHurwitzError
        If some eigenvalue of ``A`` has a nonnegative real part.
    SingularSeparationError
        If some eigenvalue pair satisfies ``lambda_i + lambda_j ~ 0``.
    """
    a = np.asarray(a, dtype=float)
    g = np.asarray(g, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"A must be square, got shape {a.shape}")
    if g.shape != a.shape:
        raise ValueError(f"G must match A, got {g.shape} vs {a.shape}")

    t, u = sla.schur(a, output="real")
    ev = quasi_triangular_eigvals(t)
    if np.max(ev.real) >= 0.0:
        raise NonHurwitzError(
            f"A has an eigenvalue with Re = {np.max(ev.real):.3e} >= 0")
    pair_sums = np.abs(ev[:, None] + ev[None, :])
    if np.min(pair_sums) <= 1e-12:
        raise SingularSeparationError(
            "eigenvalue pair with lambda_i + lambda_j ~ 0; equation singular")

    ghat = u.T @ g @ u
    trsyl = sla.get_lapack_funcs("trsyl", (t, ghat))
    y, scale, info = trsyl(t, t, -ghat, tranb="C")
    if info == 1:
        raise SingularSeparationError(
            "trsyl perturbed nearly-common eigenvalues; equation singular")
    if info < 0:
        raise ValueError(f"illegal argument {-info} passed to trsyl")
    p = u @ (y / scale) @ u.T
    return 0.5 * (p + p.T)


def _complex_pair_solve(op, tblock, rhs):
    # Solve A Y + Y T_b^T = -rhs for a standardized 2x2 Schur block T_b with a
    # complex-conjugate eigenvalue pair, using one complex shifted solve.
    lam = quasi_triangular_eigvals(tblock)[0]
    t11, t12 = tblock[0]
    t21, t22 = tblock[1]
    if abs(t21) >= abs(t12):
        v = np.array([t21, lam - t11], dtype=complex)
    else:
        v = np.array([lam - t22, t12], dtype=complex)
    w = op.shifted_solve(-lam, -(rhs @ v))
    # Y = [w, conj(w)] @ inv([v, conj(v)]) is exactly real:
    denom = (v[0] * np.conj(v[1])).imag
    if denom == 0.0:
        raise SpectrumOverlapError("degenerate 2x2 Schur block")
    y1 = (w * np.conj(v[1])).imag / denom
    y2 = -(w * np.conj(v[0])).imag / denom
    return np.column_stack([y1, y2])


def solve_sylvester_skinny(a, m, f):
    """Solve the skinny-tall Sylvester equation ``A X + X M^T + F = 0``.

    ``A`` is an operator of dimension n (dense array accepted), ``M`` is a
    small r-by-r dense matrix and ``F`` is n-by-r. ``M`` is reduced to real
    Schur form and the columns of ``X`` are obtained by back-substitution,
    each requiring one shifted solve with ``A`` (a single complex solve per
    2x2 block keeps the result exactly real).

    Raises
    ------
    SpectrumOverlapError
        If some shifted system ``A + m_ii I`` is singular, i.e. the spectra
        of ``A`` and ``-M`` intersect.
    ShiftSolveFailure
        Propagated from the operator for non-spectral solve failures.
    """
    op = as_operator(a)
    m = np.asarray(m, dtype=float)
    f = np.asarray(f, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"M must be square, got shape {m.shape}")
    r = m.shape[0]
    if f.shape != (op.n, r):
        raise ValueError(f"F must be ({op.n}, {r}), got {f.shape}")
    if r == 0:
        return np.zeros((op.n, 0))

    t, u = sla.schur(m, output="real")
    g = f @ u
    y = np.zeros_like(g)
    j = r - 1
    while j >= 0:
        pair = j > 0 and t[j, j - 1] != 0.0
        jb = j - 1 if pair else j
        ncols = 2 if pair else 1
        rhs = g[:, jb:jb + ncols].copy()
        if jb + ncols < r:
            rhs += y[:, jb + ncols:] @ t[jb:jb + ncols, jb + ncols:].T
        try:
            if pair:
                y[:, jb:jb + 2] = _complex_pair_solve(op, t[jb:jb + 2, jb:jb + 2], rhs)
            else:
                y[:, jb] = op.shifted_solve(-t[jb, jb], -rhs[:, 0])
        except ShiftSolveFailure as exc:
            raise SpectrumOverlapError(
                f"spectrum of A meets eigenvalue {-t[jb, jb]:.6g} of -M") from exc
        j = jb - 1
    return y @ u.T


def orthonormalize(m):
    """Orthonormal basis of the numerical range of ``m`` (n-by-k, k' <= k).

    Rank-deficient directions are dropped: after column-pivoted QR, trailing
    columns whose pivot magnitude falls below ``ORTH_DROP_RTOL`` times the
    largest input column norm are discarded. A (numerically) zero input
    yields an empty basis.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {m.shape}")
    n, k = m.shape
    if n < 1:
        raise ValueError("row dimension must be >= 1")
    if k == 0:
        return np.zeros((n, 0))
    max_col = np.max(np.sqrt(np.einsum("ij,ij->j", m, m)))
    if max_col == 0.0 or not np.isfinite(max_col):
        if not np.isfinite(max_col):
            raise ValueError("input contains non-finite entries")
        return np.zeros((n, 0))
    q, r, _ = sla.qr(m, mode="economic", pivoting=True)
    # pivoting makes |diag(R)| non-increasing, so the kept set is a prefix
    resid = np.abs(np.diag(r))
    kept = int(np.sum(resid > ORTH_DROP_RTOL * max_col))
    if kept == 0:
        raise EmptyInputError("nonzero input reduced to an empty basis")
    return np.ascontiguousarray(q[:, :kept])


@dataclass(frozen=True)
class SpdFactor:
    """Tall factor ``Z`` with ``Z Z^T`` approximating a PSD matrix."""

    z: np.ndarray

    @property
    def cols(self) -> int:
        return self.z.shape[1]

    def reconstruct(self) -> np.ndarray:
        return self.z @ self.z.T


def psd_factor(p):
    """Factor a symmetric positive-semidefinite matrix as ``Z Z^T``.

    Eigenvalues below ``PSD_CLIP_RTOL`` times the largest are clipped to
    zero (round-off may make them slightly negative), so the column count of
    ``Z`` equals the retained rank. Columns are ordered by descending
    eigenvalue.

    Raises
    ------
    NotSymmetricError
        If ``||P - P^T||_F > 1e-10 ||P||_F``.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError(f"P must be square, got shape {p.shape}")
    nrm = np.linalg.norm(p)
    if np.linalg.norm(p - p.T) > 1e-10 * max(nrm, np.finfo(float).tiny):
        raise NotSymmetricError("matrix is not symmetric to 1e-10 relative")
    w, v = np.linalg.eigh(0.5 * (p + p.T))
    w = w[::-1]
    v = v[:, ::-1]
    if w[0] <= 0.0:
        return SpdFactor(np.zeros((p.shape[0], 0)))
    keep = w >= PSD_CLIP_RTOL * w[0]
    return SpdFactor(v[:, keep] * np.sqrt(w[keep]))


def ordered_svd(m):
    """Economy SVD ``M = U diag(S) V^T`` with ``S`` non-increasing."""
    m = np.asarray(m, dtype=float)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return u, s, vh.T

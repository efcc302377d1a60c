"""Error measures: Gramian errors, PQ-product error, sampled H-infinity
ratio, and frequency sweeps.

The H-infinity quantities are computed by sampling a log-spaced frequency
grid and refining around the peak, so they are lower bounds on the true
norms; outputs are labeled accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alrs import LowRankGramian
from .errors import DenseInfeasibleError, DimensionMismatchError
from .linalg import solve_lyapunov_dense
from .reducers import ReducedModel
from .system import StateSpaceModel, eval_transfer, gramians_dense

__all__ = [
    "FreqGrid",
    "gramian_rel_error",
    "pq_rel_error",
    "hinf_rel_error",
    "sigma_sweep",
]

DENSE_CAP_DEFAULT = 5000


@dataclass(frozen=True)
class FreqGrid:
    """Positive frequency samples (rad/s), sorted ascending."""

    points: np.ndarray
    refine_rel_resolution: float = 1e-3

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or len(pts) < 2:
            raise ValueError("grid needs at least two points")
        if np.any(pts <= 0) or np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be positive and ascending")
        object.__setattr__(self, "points", pts)

    @classmethod
    def log_spaced(cls, lo: float, hi: float, count: int = 400, **kw) -> "FreqGrid":
        if not 0 < lo < hi:
            raise ValueError("need 0 < lo < hi")
        return cls(points=np.logspace(np.log10(lo), np.log10(hi), count), **kw)

    @classmethod
    def default_for(cls, model: StateSpaceModel, count: int = 400) -> "FreqGrid":
        """Grid spanning [1e-3 |lambda|_min, 1e3 |lambda|_max] of the model's
        spectrum estimate."""
        lo, hi = _spectrum_abs_range(model)
        return cls.log_spaced(1e-3 * lo, 1e3 * hi, count)


def _spectrum_abs_range(model):
    op = model.A
    if op.n <= DENSE_CAP_DEFAULT:
        lam = np.abs(np.linalg.eigvals(op.to_dense()))
        lam = lam[lam > 0]
        if len(lam) == 0:
            return 1.0, 1.0
        return float(np.min(lam)), float(np.max(lam))
    # estimate for large operators: power iteration above, inverse power below
    rng = np.random.default_rng(0)
    x = rng.standard_normal(op.n)
    x /= np.linalg.norm(x)
    for _ in range(12):
        y = op.apply(x)
        x = y / np.linalg.norm(y)
    hi = float(np.linalg.norm(op.apply(x)))
    x = np.ones(op.n) / np.sqrt(op.n)
    for _ in range(12):
        y = op.shifted_solve(0.0, x)
        x = y / np.linalg.norm(y)
    lo = float(np.linalg.norm(op.apply(x)))
    return min(lo, hi), max(lo, hi)


def gramian_rel_error(p_exact, factor) -> float:
    """Spectral-norm relative error ``||P - V Pr V^T||_2 / ||P||_2`` via a
    symmetric eigensolve of the difference."""
    p_exact = np.asarray(p_exact, dtype=float)
    approx = factor.reconstruct() if isinstance(factor, LowRankGramian) \
        else np.asarray(factor, dtype=float)
    if approx.shape != p_exact.shape:
        raise DimensionMismatchError(
            f"shapes {approx.shape} and {p_exact.shape} differ")
    num = np.max(np.abs(np.linalg.eigvalsh(p_exact - approx)))
    den = np.max(np.abs(np.linalg.eigvalsh(p_exact)))
    return float(num / den)


def pq_rel_error(model: StateSpaceModel, red: ReducedModel,
                 dense_cap: int = DENSE_CAP_DEFAULT) -> float:
    """Relative spectral-norm error of the Gramian product,
    ``||PQ - (V Pr V^T)(W Qr W^T)||_2 / ||PQ||_2``."""
    if model.n > dense_cap:
        raise DenseInfeasibleError(f"n = {model.n} exceeds dense cap {dense_cap}")
    gram = gramians_dense(model)
    ar = red.rom.A.to_dense()
    pr = solve_lyapunov_dense(ar, red.rom.B @ red.rom.B.T)
    qr = solve_lyapunov_dense(ar.T, red.rom.C.T @ red.rom.C)
    approx = (red.Vr @ pr @ red.Vr.T) @ (red.Wr @ qr @ red.Wr.T)
    exact = gram.P @ gram.Q
    num = np.linalg.norm(exact - approx, 2)
    den = np.linalg.norm(exact, 2)
    return float(num / den)


def _sigma_max(model, omega):
    h = eval_transfer(model, 1j * omega)
    return float(np.linalg.norm(h, 2))


def _sigma_max_diff(model, rom, omega):
    h = eval_transfer(model, 1j * omega) - eval_transfer(rom, 1j * omega)
    return float(np.linalg.norm(h, 2))


def _refine_peak(fun, grid: FreqGrid):
    """Sampled peak of ``fun`` over the grid, golden-section refined around
    the arg-max until the bracket is narrower than the grid's relative
    resolution. Returns (peak_value, peak_frequency)."""
    pts = grid.points
    vals = np.array([fun(w) for w in pts])
    idx = int(np.argmax(vals))
    best_v, best_w = vals[idx], pts[idx]
    lo = pts[idx - 1] if idx > 0 else pts[0]
    hi = pts[idx + 1] if idx + 1 < len(pts) else pts[-1]
    if hi <= lo:
        return best_v, best_w
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = np.log(lo), np.log(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(np.exp(c)), fun(np.exp(d))
    while (np.exp(b) - np.exp(a)) > grid.refine_rel_resolution * np.exp(0.5 * (a + b)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(np.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(np.exp(d))
        if max(fc, fd) > best_v:
            best_v = max(fc, fd)
            best_w = np.exp(c if fc > fd else d)
    return float(best_v), float(best_w)


def hinf_rel_error(model: StateSpaceModel, rom: StateSpaceModel,
                   grid: FreqGrid | None = None) -> float:
    """Sampled-peak relative error ratio between ``model`` and ``rom``.

    Both peaks (of the error response and of the original response) are
    grid-sampled and locally refined, so the result is a lower bound on the
    true H-infinity ratio.
    """
    if grid is None:
        grid = FreqGrid.default_for(model)
    num, _ = _refine_peak(lambda w: _sigma_max_diff(model, rom, w), grid)
    den, _ = _refine_peak(lambda w: _sigma_max(model, w), grid)
    if den == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return float(num / den)


def sigma_sweep(model: StateSpaceModel, grid: FreqGrid) -> np.ndarray:
    """Largest singular value of ``H(j omega)`` over the grid.

    Returns an array of rows ``(omega, sigma_max)`` in grid order.
    """
    rows = np.empty((len(grid.points), 2))
    for idx, w in enumerate(grid.points):
        rows[idx] = (w, _sigma_max(model, w))
    return rows

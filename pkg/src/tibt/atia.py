"""Adaptive tangential-interpolation balanced truncation.

The two-sided counterpart of the adaptive Lyapunov solver: each sweep
enforces bi-tangential Hermite interpolation at the mirror images of the
current ROM's poles, grows both trial bases, and balances the projected
Gramian factors. Stagnation of the retained Hankel estimates triggers an
order increase and a basis reset; the run ends when the r-th estimate falls
below ``tol`` times the largest, leaving a ROM that carries the dominant
Hankel singular values of the full model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .alrs import (
    AlrsConfig,
    IterationRecord,
    padded_change,
    scaled_truncation,
)
from .errors import DenseInfeasibleError
from .linalg import (
    ordered_svd,
    orthonormalize,
    psd_factor,
    solve_lyapunov_dense,
    solve_sylvester_skinny,
)
from .reducers import ReducedModel, reflect_spectrum
from .system import StateSpaceModel, SvReport, hankel_singular_values, require_hurwitz

__all__ = ["AtiaConfig", "AtiaResult", "atia_bt", "atia_hsv_compare"]

# Margin pushed into the left half-plane when reflecting unstable interim
# eigenvalues, and the condition-number cap on W_k^T V_k.
REFLECT_FLOOR = 1e-8
BIORTH_COND_CAP = 1e12


class AtiaConfig(AlrsConfig):
    """Run parameters; identical fields and semantics as the Lyapunov
    solver's configuration (r0 is the initial ROM order)."""


@dataclass(frozen=True)
class AtiaResult:
    rom: ReducedModel
    hankel_estimates: SvReport
    history: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    iterations_used: int = 0


def _arbitrary_stable_rom(r, m, p, seed):
    streams = np.random.SeedSequence(seed).spawn(3)
    g = np.random.default_rng(streams[0]).standard_normal((r, r))
    ar = g - (np.linalg.norm(g, 2) + 1.0) * np.eye(r)
    br = np.random.default_rng(streams[1]).standard_normal((r, m))
    cr = np.random.default_rng(streams[2]).standard_normal((p, r))
    return ar, br, cr


def _rebiorthogonalize(vk, wk, wv):
    """Trim directions along which span(W_k) and span(V_k) are nearly
    orthogonal, keeping both bases orthonormal and their cross product
    well conditioned."""
    uu, ss, vv = ordered_svd(wv)
    keep = ss > ss[0] / BIORTH_COND_CAP
    return vk @ vv[:, keep], wk @ uu[:, keep]


def atia_bt(model: StateSpaceModel, cfg: AtiaConfig, on_iteration=None) -> AtiaResult:
    """Reduce ``model`` adaptively, preserving its dominant Hankel values.

    Per iteration: the dual pair of skinny Sylvester equations produces
    fresh interpolation data for both bases, projected Lyapunov solves give
    Gramian factors on the current subspaces, and the SVD of the weighted
    factor product yields the oblique truncation pair plus updated Hankel
    estimates. Interim unstable ROM matrices are reflected into the left
    half-plane before the next solve; the ``converged`` flag reports
    whether rank growth stopped by tolerance or by ``k_max`` exhaustion.

    ``on_iteration``, when given, is called once per sweep with
    ``(record, v_basis, w_basis, new_v_directions, new_w_directions)``.
    """
    require_hurwitz(model)
    r = cfg.r0
    ar, br, cr = _arbitrary_stable_rom(r, model.m, model.p, cfg.seed)
    vk = np.zeros((model.n, 0))
    wk = np.zeros((model.n, 0))
    s_prev = np.zeros(0)
    history: list[IterationRecord] = []
    k = 1
    i = 1
    converged = False
    vr = wr = None
    while True:
        ar = reflect_spectrum(ar, floor=REFLECT_FLOOR)
        phat = solve_sylvester_skinny(model.A, ar, model.B @ br.T)
        qhat = solve_sylvester_skinny(model.A.transpose(), ar.T, model.C.T @ cr)
        vk = orthonormalize(np.hstack([vk, phat]))
        wk = orthonormalize(np.hstack([wk, qhat]))
        if vk.shape[1] == 0 or wk.shape[1] == 0:
            raise ValueError(
                "model has numerically zero input or output coupling; "
                "nothing to reduce")
        wv = wk.T @ vk
        if np.linalg.cond(wv) > BIORTH_COND_CAP:
            vk, wk = _rebiorthogonalize(vk, wk, wv)
            wv = wk.T @ vk

        avk = model.A.apply(vk)
        atwk = model.A.apply_transpose(wk)
        ak_v = vk.T @ avk
        ak_w = wk.T @ atwk
        bk = vk.T @ model.B
        ck = model.C @ wk
        pk = solve_lyapunov_dense(ak_v, bk @ bk.T)
        qk = solve_lyapunov_dense(ak_w, ck.T @ ck)
        zp = psd_factor(pk).z
        zq = psd_factor(qk).z
        u, s_full, v = ordered_svd(zq.T @ wv @ zp)
        r_eff = min(r, len(s_full))
        s_r = s_full[:r_eff].copy()
        history.append(IterationRecord(k=k, i=i, r=r, values=s_r))
        if on_iteration is not None:
            on_iteration(history[-1], vk, wk, phat, qhat)

        stage_done = (padded_change(s_r, s_prev) <= cfg.effective_stage_tol
                      or i >= cfg.i_max)
        if stage_done:
            # raise the target order before rebuilding: the returned ROM
            # over-captures by up to dr, so the run ends only once the
            # insignificant values are already included
            r += cfg.dr
        r_cols = min(r, len(s_full))
        vr_small = zp @ scaled_truncation(v, s_full, r_cols)
        wr_small = zq @ scaled_truncation(u, s_full, r_cols)
        vr = vk @ vr_small
        wr = wk @ wr_small
        retained = s_full[: vr.shape[1]].copy()

        # oblique projection update in the small coordinates
        wav = wk.T @ avk
        ar = wr_small.T @ wav @ vr_small
        br = wr_small.T @ (wk.T @ model.B)
        cr = (model.C @ vk) @ vr_small

        if stage_done:
            vk = orthonormalize(phat)
            wk = orthonormalize(qhat)
            s_prev = np.zeros(0)
            i = 0
        else:
            s_prev = s_r
        i += 1
        k += 1

        if s_full[0] <= 0.0:
            converged = True
            break
        # a rank-deficient factor product means the r-th value is exactly zero
        s_r_r = s_full[r - 1] if r <= len(s_full) else 0.0
        if s_r_r / s_full[0] < cfg.tol:
            converged = True
            break
        if k > cfg.k_max:
            break

    rom = StateSpaceModel(ar, br, cr)
    values = retained
    red = ReducedModel(rom=rom, Vr=vr, Wr=wr,
                       retained_sv=SvReport(values=values, kind="hankel"),
                       converged=converged, iterations=k - 1)
    estimates = SvReport(values=values.copy(), kind="hankel",
                         history=list(history))
    return AtiaResult(rom=red, hankel_estimates=estimates, history=history,
                      converged=converged, iterations_used=k - 1)


def atia_hsv_compare(result: AtiaResult, model: StateSpaceModel,
                     dense_cap: int = 5000):
    """Tabulate the run's Hankel estimates against dense ground truth.

    Returns a list of ``(index, estimate, dense, rel_diff)`` rows, one per
    retained value. Requires the model to be small enough for dense Gramian
    computation.

    Raises
    ------
    DenseInfeasibleError
        If ``model.n`` exceeds ``dense_cap``.
    """
    if model.n > dense_cap:
        raise DenseInfeasibleError(
            f"n = {model.n} exceeds dense cap {dense_cap}")
    dense = hankel_singular_values(model).values
    rows = []
    for idx, est in enumerate(result.hankel_estimates.values, start=1):
        sigma = dense[idx - 1] if idx <= len(dense) else 0.0
        rel = abs(est - sigma) / sigma if sigma > 0 else np.inf
        rows.append((idx, float(est), float(sigma), float(rel)))
    return rows

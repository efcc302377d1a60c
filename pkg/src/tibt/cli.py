"""Batch experiment runner.

Reads a JSON experiment config, runs one task (a Lyapunov solve, a reducer,
or an adaptive-vs-dense comparison) and writes CSV artifacts plus a
``run.json`` echo of the resolved configuration. Unknown config keys are
rejected; nothing is written until the run finished, so a failing run never
leaves partial CSVs behind.

Exit codes: 0 success, 1 input or algorithm error, 2 finished without
convergence (artifacts are still written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import benchmarks
from .alrs import AlrsConfig, alrs_lyap
from .atia import AtiaConfig, atia_bt, atia_hsv_compare
from .errors import TibtError
from .metrics import DENSE_CAP_DEFAULT, FreqGrid, gramian_rel_error, hinf_rel_error, pq_rel_error
from .reducers import bt_square_root, h2_optimality_residuals, tcr, tor, tsia
from .system import gramians_dense, hankel_singular_values

TASKS = ("solve-lyap", "atia-bt", "dense-bt", "tcr", "tor", "tsia", "compare")

_MODEL_KEYS = {
    "heat_rod": {"n"},
    "random_stable": {"n", "m", "p", "seed"},
    "illustrative4": set(),
    "matrix_market": {"a_path", "b_path", "c_path"},
}

_TOP_KEYS = {"model", "task", "r", "alg", "tols", "output_dir", "dense_cap",
             "seed", "side", "grid_points"}

_ALG_KEYS = {"r0", "dr", "tol", "i_max", "k_max", "seed", "stage_tol"}


class ConfigError(TibtError):
    """Invalid experiment configuration."""


def _fmt(x) -> str:
    return f"{float(x):.15e}"


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    if "task" not in raw or raw["task"] not in TASKS:
        raise ConfigError(f"{path}: 'task' must be one of {TASKS}")
    if "model" not in raw or not isinstance(raw["model"], dict):
        raise ConfigError(f"{path}: 'model' object is required")
    model = dict(raw["model"])
    kind = model.pop("kind", None)
    if kind not in _MODEL_KEYS:
        raise ConfigError(
            f"{path}: model.kind must be one of {sorted(_MODEL_KEYS)}")
    unknown = set(model) - _MODEL_KEYS[kind]
    if unknown:
        raise ConfigError(f"{path}: unknown model keys {sorted(unknown)}")
    missing = _MODEL_KEYS[kind] - set(model) - {"seed"}
    if missing:
        raise ConfigError(f"{path}: model keys missing: {sorted(missing)}")
    alg = raw.get("alg", {})
    if not isinstance(alg, dict) or set(alg) - _ALG_KEYS:
        raise ConfigError(f"{path}: 'alg' accepts keys {sorted(_ALG_KEYS)}")
    if raw["task"] in ("dense-bt", "tcr", "tor", "tsia") and "r" not in raw:
        raise ConfigError(f"{path}: task {raw['task']!r} requires 'r'")
    if raw["task"] == "compare" and not raw.get("tols"):
        raise ConfigError(f"{path}: task 'compare' requires a 'tols' list")
    return raw


def build_model(cfg, seed):
    model = dict(cfg["model"])
    kind = model.pop("kind")
    if kind == "heat_rod":
        return benchmarks.heat_rod(int(model["n"]))
    if kind == "random_stable":
        return benchmarks.random_stable(int(model["n"]), int(model["m"]),
                                        int(model["p"]),
                                        int(model.get("seed", seed)))
    if kind == "illustrative4":
        return benchmarks.illustrative4()
    return benchmarks.load_matrix_market(model["a_path"], model["b_path"],
                                         model["c_path"])


def _alg_config(cfg, seed, cls, tol=None):
    alg = dict(cfg.get("alg", {}))
    alg.setdefault("seed", seed)
    if tol is not None:
        alg["tol"] = tol
    return cls(**alg)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _hsv_rows(values):
    return [(str(i), _fmt(v)) for i, v in enumerate(values, start=1)]


def _history_rows(history):
    rows = []
    for rec in history:
        top = rec.values[0] if len(rec.values) else 0.0
        last = rec.values[-1] if len(rec.values) else 0.0
        ratio = last / top if top > 0 else 0.0
        rows.append((str(rec.k), str(rec.i), str(rec.r),
                     _fmt(top), _fmt(last), _fmt(ratio)))
    return rows


def _default_grid(model, cfg):
    count = int(cfg.get("grid_points", 400))
    return FreqGrid.default_for(model, count=count)


def run_task(cfg, seed, out_dir):
    """Execute one experiment; returns (exit_code, artifact dict)."""
    task = cfg["task"]
    model = build_model(cfg, seed)
    dense_cap = int(cfg.get("dense_cap", DENSE_CAP_DEFAULT))
    dense_ok = model.n <= dense_cap
    artifacts = {}
    code = 0

    if task == "solve-lyap":
        side = cfg.get("side", "p")
        if side not in ("p", "q"):
            raise ConfigError("'side' must be 'p' or 'q'")
        work = model if side == "p" else model.dual()
        result = alrs_lyap(work.A, work.B, _alg_config(cfg, seed, AlrsConfig))
        artifacts["hsv.csv"] = (("index", "value"), _hsv_rows(result.values))
        err_rows = [("lyapunov_residual", _fmt(result.residual),
                     str(result.factor.rank))]
        if dense_ok:
            gram = gramians_dense(model)
            exact = gram.P if side == "p" else gram.Q
            err_rows.append(("gramian_rel_error",
                             _fmt(gramian_rel_error(exact, result.factor)),
                             str(result.factor.rank)))
        artifacts["errors.csv"] = (("metric", "value", "r"), err_rows)
        artifacts["history.csv"] = (("k", "i", "r", "s_top", "s_last", "ratio"),
                                    _history_rows(result.singular_history))
        code = 0 if result.converged else 2

    elif task == "atia-bt":
        result = atia_bt(model, _alg_config(cfg, seed, AtiaConfig))
        artifacts["hsv.csv"] = (("index", "value"),
                                _hsv_rows(result.hankel_estimates.values))
        err_rows = [("hinf_rel_error_vs_original",
                     _fmt(hinf_rel_error(model, result.rom.rom,
                                         _default_grid(model, cfg))),
                     str(result.rom.r))]
        if dense_ok:
            table = atia_hsv_compare(result, model, dense_cap=dense_cap)
            worst = max((row[3] for row in table), default=0.0)
            err_rows.append(("hsv_max_rel_diff", _fmt(worst), str(result.rom.r)))
        artifacts["errors.csv"] = (("metric", "value", "r"), err_rows)
        artifacts["history.csv"] = (("k", "i", "r", "s_top", "s_last", "ratio"),
                                    _history_rows(result.history))
        code = 0 if result.converged else 2

    elif task in ("dense-bt", "tcr", "tor"):
        r = int(cfg["r"])
        reducer = {"dense-bt": bt_square_root, "tcr": tcr, "tor": tor}[task]
        red = reducer(model, r)
        artifacts["hsv.csv"] = (("index", "value"),
                                _hsv_rows(red.retained_sv.values))
        err_rows = [("hinf_rel_error",
                     _fmt(hinf_rel_error(model, red.rom,
                                         _default_grid(model, cfg))), str(r))]
        if dense_ok and task != "dense-bt":
            gram = gramians_dense(model)
            exact = gram.P if task == "tcr" else gram.Q
            basis = red.Vr if task == "tcr" else red.Wr
            approx = basis @ np.diag(red.retained_sv.values) @ basis.T
            err_rows.append(("gramian_rel_error",
                             _fmt(gramian_rel_error(exact, approx)), str(r)))
        if dense_ok:
            err_rows.append(("pq_rel_error",
                             _fmt(pq_rel_error(model, red, dense_cap)), str(r)))
        artifacts["errors.csv"] = (("metric", "value", "r"), err_rows)

    elif task == "tsia":
        r = int(cfg["r"])
        init = benchmarks.random_stable(r, model.m, model.p, seed)
        red = tsia(model, init)
        hsv = hankel_singular_values(red.rom) if red.rom.n <= dense_cap else None
        if hsv is not None:
            artifacts["hsv.csv"] = (("index", "value"), _hsv_rows(hsv.values))
        res = h2_optimality_residuals(model, red)
        artifacts["errors.csv"] = (
            ("metric", "value", "r"),
            [(f"optimality_residual_{key}", _fmt(val), str(r))
             for key, val in sorted(res.items())],
        )
        code = 0 if red.converged else 2

    else:  # compare
        if not dense_ok:
            raise ConfigError(
                f"compare needs a dense-feasible model (n = {model.n} exceeds "
                f"dense_cap = {dense_cap})")
        rows = []
        any_unconverged = False
        grid = _default_grid(model, cfg)
        for tol in cfg["tols"]:
            result = atia_bt(model, _alg_config(cfg, seed, AtiaConfig, tol=float(tol)))
            r_sel = result.rom.r
            atia_ratio = hinf_rel_error(model, result.rom.rom, grid)
            bt_red = bt_square_root(model, r_sel)
            bt_ratio = hinf_rel_error(model, bt_red.rom, grid)
            any_unconverged |= not result.converged
            rows.append((_fmt(tol), str(r_sel), _fmt(atia_ratio),
                         _fmt(bt_ratio), str(result.converged).lower()))
        artifacts["comparison.csv"] = (
            ("tol", "r_selected", "atia_hinf_ratio", "bt_hinf_ratio", "converged"),
            rows,
        )
        code = 2 if any_unconverged else 0

    os.makedirs(out_dir, exist_ok=True)
    for name, (header, rows) in artifacts.items():
        _write_csv(os.path.join(out_dir, name), header, rows)
    return code


def _limit_threads():
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return None
    return threadpool_limits(limits=1)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tibt", description="Model-reduction experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "compare"):
        cmd = sub.add_parser(name)
        cmd.add_argument("config", help="path to a JSON experiment config")
        cmd.add_argument("--deterministic", action="store_true",
                         help="force single-threaded execution")
        cmd.add_argument("--output-dir", default=None)
        cmd.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    started = time.monotonic()
    try:
        cfg = load_config(args.config)
        if args.command == "compare" and cfg["task"] != "compare":
            raise ConfigError("the compare command requires task 'compare'")
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        out_dir = args.output_dir or cfg.get("output_dir", ".")
        limiter = _limit_threads() if args.deterministic else None
        try:
            code = run_task(cfg, seed, out_dir)
        finally:
            if limiter is not None:
                limiter.__exit__(None, None, None)
        run_echo = {
            "config": cfg,
            "seed": seed,
            "output_dir": out_dir,
            "deterministic": bool(args.deterministic),
            "wall_clock_sec": time.monotonic() - started,
            "exit_code": code,
        }
        with open(os.path.join(out_dir, "run.json"), "w", encoding="utf-8") as fh:
            json.dump(run_echo, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return code
    except TibtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())

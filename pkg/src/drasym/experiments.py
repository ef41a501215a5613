"""Empirical trials, prediction runs and gamma sweeps, plus CSV/metadata output."""

import csv
import io
import json
import logging
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, _kernels
from .config import config_hash, dump_config
from .dr import dr_run
from .model import sample_instance
from .state_evolution import se_run

__all__ = [
    "ResultRow",
    "TrialError",
    "SweepResult",
    "CSV_HEADER",
    "run_empirical",
    "run_prediction",
    "run_both",
    "sweep_gamma",
    "tune_lambda",
    "rows_to_csv",
    "write_csv",
    "write_meta",
]

log = logging.getLogger(__name__)

CSV_HEADER = (
    "k", "gamma", "mse_empirical_mean", "mse_empirical_stderr",
    "mse_predicted", "alpha_star", "beta_star",
)


class TrialError(RuntimeError):
    def __init__(self, trial, exc):
        super().__init__(f"trial {trial} failed: {exc}")
        self.trial = trial


@dataclass(frozen=True)
class ResultRow:
    k: int
    gamma: float
    mse_empirical_mean: Optional[float] = None
    mse_empirical_stderr: Optional[float] = None
    mse_predicted: Optional[float] = None
    alpha_star: Optional[float] = None
    beta_star: Optional[float] = None

    def __post_init__(self):
        if self.mse_empirical_mean is None and self.mse_predicted is None:
            raise ValueError("a row needs an empirical or a predicted MSE")


def _one_trial(system, t, iterations):
    try:
        inst = sample_instance(system, (system.seed, t))
        return np.asarray(dr_run(inst, system, iterations).mse)
    except Exception as exc:  # noqa: BLE001 - re-raised with the trial index
        raise TrialError(t, exc) from exc


def empirical_curves(cfg, iterations=None, workers=None):
    """Per-trial MSE curves, shape ``(trials, iterations)``, ordered by trial index."""
    system = cfg.system
    iterations = system.iterations if iterations is None else iterations
    workers = cfg.workers if workers is None else workers
    trials = range(1, system.trials + 1)
    # BLAS pinned to one thread so results do not depend on the worker count
    with threadpool_limits(limits=1, user_api="blas"):
        if workers == 1:
            curves = [_one_trial(system, t, iterations) for t in trials]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                curves = list(pool.map(lambda t: _one_trial(system, t, iterations), trials))
    return np.vstack(curves)


def _mean_stderr(curves):
    mean = curves.mean(axis=0)
    if curves.shape[0] < 2:
        return mean, None
    return mean, curves.std(axis=0, ddof=1) / math.sqrt(curves.shape[0])


def run_empirical(cfg, workers=None):
    curves = empirical_curves(cfg, workers=workers)
    mean, se = _mean_stderr(curves)
    g = cfg.system.gamma
    return [
        ResultRow(
            k=k + 1, gamma=g, mse_empirical_mean=float(mean[k]),
            mse_empirical_stderr=None if se is None else float(se[k]),
        )
        for k in range(mean.shape[0])
    ]


def run_prediction(cfg, opts=None):
    trace = se_run(cfg.system, opts=opts, persistent_h=cfg.persistent_h)
    for note in trace.diagnostics:
        log.warning("saddle search: %s", note)
    g = cfg.system.gamma
    return [
        ResultRow(
            k=r.k, gamma=g, mse_predicted=r.predicted_mse,
            alpha_star=r.alpha_star, beta_star=r.beta_star,
        )
        for r in trace.rows
    ]


def _merge(empirical, predicted):
    by_key = {(r.gamma, r.k): r for r in predicted}
    out = []
    for r in empirical:
        p = by_key.pop((r.gamma, r.k), None)
        if p is not None:
            r = replace(r, mse_predicted=p.mse_predicted, alpha_star=p.alpha_star, beta_star=p.beta_star)
        out.append(r)
    out.extend(by_key.values())
    return sorted(out, key=lambda r: (r.gamma, r.k))


def run_both(cfg, workers=None, opts=None):
    return _merge(run_empirical(cfg, workers), run_prediction(cfg, opts))


@dataclass
class SweepResult:
    rows: list
    argmin_gamma: dict

    def predicted_at(self, k):
        return {r.gamma: r.mse_predicted for r in self.rows if r.k == k}


def sweep_gamma(cfg, empirical=False, workers=None, opts=None):
    """Predicted (and optionally empirical) MSE at the snapshot iterations for each gamma.

    ``argmin_gamma`` maps each snapshot iteration to the gamma with the
    smallest predicted MSE there.
    """
    snaps = sorted(set(cfg.snapshot_iterations)) or [cfg.system.iterations]
    kmax = max(snaps)
    rows = []
    for g in cfg.gamma_grid:
        sub = cfg.with_overrides(gamma=float(g), iterations=kmax, snapshot_iterations=(), mode="predict")
        pred = [r for r in run_prediction(sub, opts) if r.k in snaps]
        if empirical:
            emp = [r for r in run_empirical(sub, workers) if r.k in snaps]
            rows.extend(_merge(emp, pred))
        else:
            rows.extend(pred)
        log.info("gamma=%g done", g)
    rows.sort(key=lambda r: (r.gamma, r.k))
    argmin = {}
    for k in snaps:
        at_k = [r for r in rows if r.k == k]
        argmin[k] = min(at_k, key=lambda r: (r.mse_predicted, r.gamma)).gamma
    return SweepResult(rows=rows, argmin_gamma=argmin)


def tune_lambda(system, grid, iterations=60, particles=None, persistent_h=True):
    """Pick lambda from ``grid`` by the smallest predicted MSE after ``iterations`` steps.

    Returns ``(best_lambda, [(lambda, predicted_mse), ...])``.
    """
    table = []
    for lam in grid:
        trace = se_run(
            replace(system, lam=float(lam)), iterations, particles=particles, persistent_h=persistent_h
        )
        table.append((float(lam), float(trace.predicted[-1])))
    best = min(table, key=lambda t: (t[1], t[0]))[0]
    return best, table


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def rows_to_csv(rows):
    rows = sorted(rows, key=lambda r: (r.gamma, r.k))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])
    return buf.getvalue()


def write_csv(rows, path):
    text = rows_to_csv(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text


def _versions():
    import scipy

    v = {
        "drasym": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "kernels": "numba" if _kernels.USE_NUMBA else "numpy",
    }
    if _kernels.USE_NUMBA:
        import numba

        v["numba"] = numba.__version__
    return v


def write_meta(cfg, path, wall_times, extra=None):
    meta = {
        "config_hash": config_hash(cfg),
        "config": dump_config(cfg),
        "versions": _versions(),
        "wall_time_s": wall_times,
        "delta": cfg.system.delta,
        "overdetermined": cfg.system.overdetermined,
        "written_at_unix": time.time(),
    }
    if extra:
        meta.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return meta

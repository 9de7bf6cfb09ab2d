"""Runtime-scaling benchmark of batch versus recursive Newton smoothers."""

from __future__ import annotations

import dataclasses
import logging
import os
import time

import numpy as np

from .models import CoordinatedTurnModel, prior_rollout, simulate
from .strategies import (
    BatchStepper,
    LineSearchConfig,
    RecursiveStepper,
    TrustRegionConfig,
    run_line_search,
    run_trust_region,
)

log = logging.getLogger(__name__)

DEFAULT_GRID = tuple(range(100, 1501, 100))
DEFAULT_RUNS = 20
DEFAULT_ITERS = 30
ALL_METHODS = ("batch-ls", "batch-tr", "recursive-ls", "recursive-tr")


def thread_cap():
    try:
        return max(1, int(os.environ.get("NEWTON_IKS_THREADS", "1")))
    except ValueError:
        return 1


def _runner(method, model, ys, iters, ls_cfg, tr_cfg):
    kind, strat = method.split("-")
    stepper = BatchStepper(model, ys) if kind == "batch" else RecursiveStepper(model, ys)
    if strat == "ls":
        cfg = dataclasses.replace(ls_cfg, outer_iters=iters, rel_tol=None)
        return lambda x0: run_line_search(model, x0, ys, cfg, stepper, method)
    cfg = dataclasses.replace(tr_cfg, outer_iters=iters, rel_tol=None)
    return lambda x0: run_trust_region(model, x0, ys, cfg, stepper, method)


def time_method(method, model, ys, x0, iters, ls_cfg=None, tr_cfg=None):
    """Wall time (ms) of ``iters`` outer iterations after one untimed warm-up iteration."""
    ls_cfg = ls_cfg or LineSearchConfig()
    tr_cfg = tr_cfg or TrustRegionConfig()
    _runner(method, model, ys, 1, ls_cfg, tr_cfg)(x0)
    run = _runner(method, model, ys, iters, ls_cfg, tr_cfg)
    t0 = time.perf_counter()
    run(x0)
    return 1e3 * (time.perf_counter() - t0)


def run_benchmark(grid=DEFAULT_GRID, runs=DEFAULT_RUNS, iters=DEFAULT_ITERS, methods=ALL_METHODS,
                  ct=None, seed=0, ls_cfg=None, tr_cfg=None, progress=None):
    """Mean and std wall time per (N, method); data re-simulated per run with seed + run index."""
    if not grid:
        raise ValueError("grid must be nonempty")
    for m in methods:
        if m not in ALL_METHODS:
            raise ValueError(f"unknown method {m!r}")
    ct = ct or CoordinatedTurnModel()
    model = ct.ssm
    rows = []
    for N in grid:
        times = {m: [] for m in methods}
        for r in range(runs):
            sim = simulate(model, N, seed=seed + r)
            x0 = prior_rollout(model, N)
            for m in methods:
                times[m].append(time_method(m, model, sim.measurements, x0, iters, ls_cfg, tr_cfg))
        for m in methods:
            t = np.asarray(times[m])
            row = dict(N=N, method=m, mean_ms=float(t.mean()), std_ms=float(t.std()), runs=runs, iters=iters)
            rows.append(row)
            log.info("N=%d %s mean=%.1fms std=%.1fms", N, m, row["mean_ms"], row["std_ms"])
            if progress:
                progress(row)
    return rows

"""Globalized Newton smoothers: backtracking line search and trust region.

Both outer loops are written against a *stepper*, which linearizes at the
current iterate and, for a given lambda, returns a candidate trajectory
together with the expected reduction of the regularized quadratic model.
:class:`RecursiveStepper` runs the Kalman-smoother sweep, :class:`BatchStepper`
the dense Newton solve; the outer logic is shared so both variants are
directly comparable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .batch import assemble_dense, newton_direction, quadratic_decrease_dense
from .core import Trajectory, as_measurements, as_trajectory
from .errors import RegularizationTooSmall
from .linearize import expand
from .objective import cost, quadratic_decrease
from .smoother import newton_iks_iteration


@dataclass(frozen=True)
class LineSearchConfig:
    beta: float = 0.5
    max_backtracks: int = 20
    outer_iters: int = 30
    lambda_init: float = 1e-6
    lambda_mult: float = 10.0
    lambda_cap: float = 1e16
    rel_tol: Optional[float] = 1e-10

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.max_backtracks < 1 or self.outer_iters < 1:
            raise ValueError("max_backtracks and outer_iters must be positive")
        if not 0.0 < self.lambda_init <= self.lambda_cap:
            raise ValueError("need 0 < lambda_init <= lambda_cap")
        if self.lambda_mult <= 1.0:
            raise ValueError("lambda_mult must exceed 1")


@dataclass(frozen=True)
class TrustRegionConfig:
    lambda0: float = 1e-2
    nu_init: float = 2.0
    outer_iters: int = 30
    rel_tol: Optional[float] = 1e-10

    def __post_init__(self):
        if self.lambda0 <= 0:
            raise ValueError(f"lambda0 must be positive, got {self.lambda0}")
        if self.nu_init <= 1:
            raise ValueError("nu_init must exceed 1")
        if self.outer_iters < 1:
            raise ValueError("outer_iters must be positive")


@dataclass
class RunReport:
    """Per-iteration trace of an outer loop.

    ``costs[i]`` is L after iteration i; ``lambdas[i]`` the lambda that produced
    the step; ``alpha_or_rho[i]`` the accepted step size (line search) or the
    gain ratio (trust region), NaN when unavailable.
    """

    method: str
    initial_cost: float
    trajectory: Trajectory = None
    costs: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    alpha_or_rho: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    lambda_ladders: list = field(default_factory=list)
    nus: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    events: list = field(default_factory=list)
    termination: str = "max_iters"

    @property
    def n_iters(self):
        return len(self.costs)

    @property
    def final_cost(self):
        return self.costs[-1] if self.costs else self.initial_cost

    def accepted_costs(self):
        return [self.initial_cost] + [c for c, a in zip(self.costs, self.accepted) if a]


class RecursiveStepper:
    name = "recursive"

    def __init__(self, model, ys, joseph=False):
        self.model = model
        self.ys = as_measurements(ys)
        self.joseph = joseph

    def prepare(self, x: Trajectory):
        return expand(self.model, x, self.ys)

    def step(self, ctx, lam):
        aug = ctx.with_lambda(lam)
        cand, _ = newton_iks_iteration(aug, self.ys, joseph=self.joseph)
        return cand, quadratic_decrease(aug, cand, self.ys)


class BatchStepper:
    name = "batch"

    def __init__(self, model, ys, structured=False):
        self.model = model
        self.ys = as_measurements(ys)
        self.structured = structured

    def prepare(self, x: Trajectory):
        return x, assemble_dense(self.model, x, self.ys)

    def step(self, ctx, lam):
        x, system = ctx
        p = newton_direction(system, lam, self.structured)
        return Trajectory(x.states + p.reshape(x.states.shape)), quadratic_decrease_dense(system, p, lam)


def _small_decrease(old, new, tol):
    return tol is not None and (old - new) <= tol * max(abs(old), 1e-300)


def run_line_search(model, x0, ys, cfg: LineSearchConfig, stepper, method="ls"):
    x = as_trajectory(x0)
    ys = as_measurements(ys)
    Lx = cost(model, x, ys)
    rep = RunReport(method=method, initial_cost=Lx)

    def attempt(ctx, lam):
        try:
            cand, dec = stepper.step(ctx, lam)
        except RegularizationTooSmall:
            return None
        return cand if dec > 0 else None

    for i in range(cfg.outer_iters):
        t0 = time.perf_counter()
        ctx = stepper.prepare(x)
        lam = 0.0
        ladder = [lam]
        cand = attempt(ctx, lam)
        if cand is None:
            lam = cfg.lambda_init
            ladder.append(lam)
            cand = attempt(ctx, lam)
            while cand is None and lam <= cfg.lambda_cap:
                lam *= cfg.lambda_mult
                ladder.append(lam)
                cand = attempt(ctx, lam)

        alpha, accepted = float("nan"), False
        if cand is None:
            rep.events.append(f"iter {i}: RegularizationExhausted (lambda={lam:g})")
        else:
            p = cand.states - x.states
            alpha, n_back = 1.0, 0
            L_try = cost(model, x.states + alpha * p, ys)
            while L_try >= Lx and n_back <= cfg.max_backtracks:
                alpha *= cfg.beta
                n_back += 1
                L_try = cost(model, x.states + alpha * p, ys)
            if L_try < Lx:
                accepted = True
                x_new = Trajectory(x.states + alpha * p)
            else:
                alpha = float("nan")
        rep.wall_ms.append(1e3 * (time.perf_counter() - t0))

        L_old = Lx
        if accepted:
            x, Lx = x_new, L_try
        rep.costs.append(Lx)
        rep.lambdas.append(lam)
        rep.alpha_or_rho.append(alpha)
        rep.accepted.append(accepted)
        rep.lambda_ladders.append(ladder)
        rep.iterates.append(x.states)
        if cfg.rel_tol is not None:
            if not accepted:
                # the next iteration would repeat this one exactly
                rep.termination = "stalled"
                break
            if _small_decrease(L_old, Lx, cfg.rel_tol):
                rep.termination = "converged"
                break
    rep.trajectory = x
    return rep


def run_trust_region(model, x0, ys, cfg: TrustRegionConfig, stepper, method="tr"):
    x = as_trajectory(x0)
    ys = as_measurements(ys)
    Lx = cost(model, x, ys)
    rep = RunReport(method=method, initial_cost=Lx)
    lam, nu = float(cfg.lambda0), float(cfg.nu_init)
    ctx = None
    for i in range(cfg.outer_iters):
        t0 = time.perf_counter()
        if ctx is None:
            ctx = stepper.prepare(x)
        rho, accepted, L_cand = float("nan"), False, None
        try:
            cand, dL_model = stepper.step(ctx, lam)
        except RegularizationTooSmall as exc:
            rep.events.append(f"iter {i}: {exc}")
        else:
            L_cand = cost(model, cand, ys)
            if abs(dL_model) >= 1e-300:
                rho = (Lx - L_cand) / dL_model
                accepted = rho > 0 and dL_model > 0
        lam_used = lam
        if accepted:
            lam *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = float(cfg.nu_init)
        else:
            lam *= nu
            nu *= 2.0
        rep.wall_ms.append(1e3 * (time.perf_counter() - t0))

        L_old = Lx
        if accepted:
            x, Lx, ctx = cand, L_cand, None
        rep.costs.append(Lx)
        rep.lambdas.append(lam_used)
        rep.nus.append(nu)
        rep.alpha_or_rho.append(rho)
        rep.accepted.append(accepted)
        rep.iterates.append(x.states)
        if accepted and _small_decrease(L_old, Lx, cfg.rel_tol):
            rep.termination = "converged"
            break
    rep.trajectory = x
    return rep


def ls_newton_iks(model, x0, ys, cfg=None, joseph=False):
    return run_line_search(model, x0, ys, cfg or LineSearchConfig(), RecursiveStepper(model, ys, joseph), "recursive-ls")


def tr_newton_iks(model, x0, ys, cfg=None, joseph=False):
    return run_trust_region(model, x0, ys, cfg or TrustRegionConfig(), RecursiveStepper(model, ys, joseph), "recursive-tr")


def ls_batch(model, x0, ys, cfg=None, structured=False):
    return run_line_search(model, x0, ys, cfg or LineSearchConfig(), BatchStepper(model, ys, structured), "batch-ls")


def tr_batch(model, x0, ys, cfg=None, structured=False):
    return run_trust_region(model, x0, ys, cfg or TrustRegionConfig(), BatchStepper(model, ys, structured), "batch-tr")


METHODS = {
    "recursive-ls": ls_newton_iks,
    "recursive-tr": tr_newton_iks,
    "batch-ls": ls_batch,
    "batch-tr": tr_batch,
}


def run_method(name, model, x0, ys, ls_cfg=None, tr_cfg=None):
    if name not in METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {sorted(METHODS)}")
    cfg = ls_cfg if name.endswith("-ls") else tr_cfg
    return METHODS[name](model, x0, ys, cfg)

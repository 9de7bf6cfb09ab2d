"""Command-line interface: simulate, smooth, bench, check-derivatives.

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import io
from .autodiff import fd_check
from .bench import ALL_METHODS, DEFAULT_GRID, DEFAULT_ITERS, DEFAULT_RUNS, run_benchmark, thread_cap
from .core import Trajectory
from .errors import NonFiniteDerivative, NotPositiveDefinite
from .models import REGISTERED_MODELS, CoordinatedTurnModel, position_rmse, prior_rollout, simulate
from .strategies import METHODS, LineSearchConfig, TrustRegionConfig, run_method

log = logging.getLogger("newton_iks")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text, flag):
    try:
        return tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated numbers, got {text!r}") from None


def _sensors(text):
    pts = []
    for item in str(text).split(";"):
        xy = _floats(item, "--sensors")
        if len(xy) != 2:
            raise UsageError(f"--sensors: each sensor needs two coordinates, got {item!r}")
        pts.append(xy)
    return tuple(pts)


MODEL_KEYS = {
    "dt": float,
    "q_pos": float,
    "q_omega": float,
    "bearing_std": float,
    "sensors": _sensors,
    "m0": lambda s: _floats(s, "--m0"),
    "P0_diag": lambda s: _floats(s, "--P0-diag"),
}


def _add_model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--config", help="flat 'key = value' file; flags override it")
    g.add_argument("--dt", type=float)
    g.add_argument("--q-pos", dest="q_pos", type=float)
    g.add_argument("--q-omega", dest="q_omega", type=float)
    g.add_argument("--bearing-std", dest="bearing_std", type=float)
    g.add_argument("--sensors", help="'x1,y1;x2,y2'")
    g.add_argument("--m0", help="comma-separated prior mean")
    g.add_argument("--P0-diag", dest="P0_diag", help="comma-separated prior variances")


def _merge_config(args, parser):
    """Apply config-file values to every flag the user did not set."""
    if not getattr(args, "config", None):
        return
    allowed = {a.dest for a in parser._actions if a.dest not in ("help", "config", "cmd")}
    try:
        values = io.read_config(args.config, allowed)
    except (OSError, ValueError) as exc:
        raise UsageError(f"--config: {exc}") from None
    by_dest = {a.dest: a for a in parser._actions}
    for key, raw in values.items():
        if getattr(args, key) is not None and getattr(args, key) != by_dest[key].default:
            continue
        conv = by_dest[key].type
        try:
            setattr(args, key, conv(raw) if conv else raw)
        except (TypeError, ValueError):
            raise UsageError(f"--config: bad value for {key!r}: {raw!r}") from None
        if by_dest[key].choices and getattr(args, key) not in by_dest[key].choices:
            raise UsageError(f"--config: {key} must be one of {sorted(by_dest[key].choices)}")


def _ct_from_args(args):
    kw = {}
    for key, conv in MODEL_KEYS.items():
        val = getattr(args, key, None)
        if val is not None:
            kw[key] = conv(val) if isinstance(val, str) else val
    try:
        return CoordinatedTurnModel(**kw)
    except (ValueError, NotPositiveDefinite) as exc:
        raise UsageError(f"invalid model configuration: {exc}") from None


def _meta(ct, seed, extra=None):
    meta = {"seed": seed, "model": "coordinated-turn", "defaults_are_choices": "true"}
    meta.update(ct.config())
    meta.update(extra or {})
    return meta


def build_parser():
    p = _Parser(prog="newton-iks", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate coordinated-turn truth and bearings")
    s.add_argument("--N", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--noiseless", action="store_true")
    s.add_argument("--truth", default="truth.csv")
    s.add_argument("--measurements", default="measurements.csv")
    _add_model_flags(s)

    m = sub.add_parser("smooth", help="run a Newton smoother")
    m.add_argument("--measurements", help="measurement CSV; simulated when omitted")
    m.add_argument("--truth", help="truth CSV, used only to report RMSE")
    m.add_argument("--N", type=int, default=500)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--method", default="recursive-tr", choices=sorted(METHODS))
    m.add_argument("--iters", type=int, default=30)
    m.add_argument("--beta", type=float, default=0.5)
    m.add_argument("--max-backtracks", dest="max_backtracks", type=int, default=20)
    m.add_argument("--lambda0", type=float, default=1e-2)
    m.add_argument("--init", default="prior-rollout", choices=["prior-rollout", "zeros", "file"])
    m.add_argument("--init-file")
    m.add_argument("--no-early-stop", dest="no_early_stop", action="store_true")
    m.add_argument("--out", default="smoothed.csv")
    m.add_argument("--report", default="report.csv")
    _add_model_flags(m)

    b = sub.add_parser("bench", help="runtime scaling benchmark")
    b.add_argument("--grid", default=",".join(str(n) for n in DEFAULT_GRID))
    b.add_argument("--runs", type=int, default=DEFAULT_RUNS)
    b.add_argument("--iters", type=int, default=DEFAULT_ITERS)
    b.add_argument("--methods", default=",".join(ALL_METHODS))
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="bench.csv")
    _add_model_flags(b)

    c = sub.add_parser("check-derivatives", help="autodiff vs finite differences on registered models")
    c.add_argument("--points", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--step", type=float, default=1e-6)
    return p


def _cmd_simulate(args):
    ct = _ct_from_args(args)
    if args.N < 1:
        raise UsageError("--N must be at least 1")
    sim = simulate(ct.ssm, args.N, seed=args.seed, noiseless=args.noiseless)
    meta = _meta(ct, args.seed, {"N": args.N, "noiseless": args.noiseless})
    io.write_trajectory(args.truth, sim.true_states, meta)
    io.write_measurements(args.measurements, sim.measurements, meta)
    print(f"wrote {args.truth} and {args.measurements} (N={args.N}, seed={args.seed})")
    return 0


def _initial(args, model, N):
    if args.init == "prior-rollout":
        return prior_rollout(model, N)
    if args.init == "zeros":
        return Trajectory(np.zeros((N + 1, model.d)))
    if not args.init_file:
        raise UsageError("--init file requires --init-file")
    try:
        x0, _ = io.read_trajectory(args.init_file)
    except (OSError, ValueError) as exc:
        raise UsageError(f"--init-file: {exc}") from None
    if x0.states.shape != (N + 1, model.d):
        raise UsageError(f"--init-file: shape {x0.states.shape} does not match ({N + 1}, {model.d})")
    return x0


def _cmd_smooth(args):
    ct = _ct_from_args(args)
    model = ct.ssm
    truth = None
    if args.measurements:
        try:
            ys, _ = io.read_measurements(args.measurements)
        except (OSError, ValueError) as exc:
            raise UsageError(f"--measurements: {exc}") from None
        if ys.m != model.m:
            raise UsageError(f"--measurements: {ys.m} columns but the model has {model.m} sensors")
    else:
        if args.N < 1:
            raise UsageError("--N must be at least 1")
        sim = simulate(model, args.N, seed=args.seed)
        ys, truth = sim.measurements, sim.true_states
    if args.truth:
        try:
            truth, _ = io.read_trajectory(args.truth)
        except (OSError, ValueError) as exc:
            raise UsageError(f"--truth: {exc}") from None
    if args.iters < 1:
        raise UsageError("--iters must be positive")
    try:
        rel_tol = None if args.no_early_stop else 1e-10
        ls_cfg = LineSearchConfig(beta=args.beta, max_backtracks=args.max_backtracks,
                                  outer_iters=args.iters, rel_tol=rel_tol)
        tr_cfg = TrustRegionConfig(lambda0=args.lambda0, outer_iters=args.iters, rel_tol=rel_tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    x0 = _initial(args, model, ys.N)
    report = run_method(args.method, model, x0, ys, ls_cfg, tr_cfg)

    from .linearize import build_modified_model
    from .smoother import newton_iks_iteration

    covs = None
    try:
        # Newton-model covariances around the final iterate (not a calibrated posterior)
        _, sp = newton_iks_iteration(build_modified_model(model, report.trajectory, ys, 0.0), ys)
        covs = sp.Ps
    except NotPositiveDefinite:
        log.info("final-iterate covariances unavailable (Hessian not positive-definite)")
    meta = _meta(ct, args.seed, {"method": args.method, "iters": args.iters})
    io.write_smoothed(args.out, report.trajectory, covs, meta)
    io.write_report(args.report, report, meta)
    msg = f"{args.method}: cost {report.initial_cost:.6g} -> {report.final_cost:.6g} in {report.n_iters} iterations ({report.termination})"
    if truth is not None:
        msg += f"; position RMSE {position_rmse(x0, truth):.4g} -> {position_rmse(report.trajectory, truth):.4g}"
    print(msg)
    return 0


def _cmd_bench(args):
    ct = _ct_from_args(args)
    try:
        grid = [int(v) for v in args.grid.split(",")]
    except ValueError:
        raise UsageError(f"--grid: expected comma-separated integers, got {args.grid!r}") from None
    methods = [m.strip() for m in args.methods.split(",")]
    bad = [m for m in methods if m not in ALL_METHODS]
    if bad or not grid or min(grid) < 1 or args.runs < 1 or args.iters < 1:
        raise UsageError(f"--methods/--grid/--runs/--iters invalid (unknown methods: {bad})")
    rows = run_benchmark(grid, args.runs, args.iters, methods, ct=ct, seed=args.seed,
                         progress=lambda r: print(f"N={r['N']:5d} {r['method']:13s} {r['mean_ms']:10.1f} ms"))
    io.write_bench(args.out, rows, _meta(ct, args.seed, {"threads": thread_cap()}))
    print(f"wrote {args.out}")
    return 0


def _cmd_check(args):
    rng = np.random.default_rng(args.seed)
    ok = True
    for name, factory in REGISTERED_MODELS.items():
        model = factory()
        for label, fn in (("f", model.f), ("h", model.h)):
            worst_j = worst_h = 0.0
            passed = True
            for _ in range(args.points):
                x = rng.normal(size=model.d) * 2.0
                rep = fd_check(fn, x, step=args.step)
                worst_j = max(worst_j, rep.max_jac_err)
                worst_h = max(worst_h, rep.max_hess_err)
                passed &= rep.ok()
            ok &= passed
            print(f"{name:17s} {label}: max|dJ|={worst_j:.2e} max|dH|={worst_h:.2e} {'ok' if passed else 'FAIL'}")
    return 0 if ok else 2


COMMANDS = {
    "simulate": _cmd_simulate,
    "smooth": _cmd_smooth,
    "bench": _cmd_bench,
    "check-derivatives": _cmd_check,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.cmd is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        sub = parser._subparsers._group_actions[0].choices[args.cmd]
        _merge_config(args, sub)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
        with threadpool_limits(thread_cap()):
            return COMMANDS[args.cmd](args)
    except UsageError as exc:
        print(f"newton-iks: error: {exc}", file=sys.stderr)
        return 1
    except (NotPositiveDefinite, NonFiniteDerivative, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"newton-iks: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

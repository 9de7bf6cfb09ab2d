"""CSV files and flat ``key = value`` config files."""

from __future__ import annotations

import csv
import math

import numpy as np

from .core import MeasurementSeq, Trajectory


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows, meta=None):
    """Write '# key=value' metadata lines, then the header row, then data rows."""
    with open(path, "w", newline="") as fh:
        for key, val in (meta or {}).items():
            fh.write(f"# {key}={val}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path):
    """Return (meta, header, rows) with rows as lists of strings."""
    meta = {}
    with open(path, newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif line.strip():
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    return meta, header, [r for r in reader]


def _numeric(rows):
    return np.array([[float(v) for v in r] for r in rows], dtype=float)


def write_trajectory(path, traj: Trajectory, meta=None):
    X = traj.states
    header = ["k"] + [f"x{i}" for i in range(X.shape[1])]
    write_csv(path, header, ([k, *X[k]] for k in range(X.shape[0])), meta)


def read_trajectory(path):
    meta, header, rows = read_csv(path)
    if not header or header[0] != "k" or not all(h == f"x{i}" for i, h in enumerate(header[1:])):
        raise ValueError(f"{path}: unexpected trajectory header {header}")
    return Trajectory(_numeric(rows)[:, 1:]), meta


def write_measurements(path, ys: MeasurementSeq, meta=None):
    Y = ys.values
    header = ["k"] + [f"y{i}" for i in range(Y.shape[1])]
    write_csv(path, header, ([k + 1, *Y[k]] for k in range(Y.shape[0])), meta)


def read_measurements(path):
    meta, header, rows = read_csv(path)
    if not header or header[0] != "k" or not all(h == f"y{i}" for i, h in enumerate(header[1:])):
        raise ValueError(f"{path}: unexpected measurement header {header}")
    data = _numeric(rows)
    if not np.array_equal(data[:, 0], np.arange(1, data.shape[0] + 1)):
        raise ValueError(f"{path}: measurement indices must run 1..N")
    return MeasurementSeq(data[:, 1:]), meta


def write_smoothed(path, traj: Trajectory, covs=None, meta=None):
    X = traj.states
    d = X.shape[1]
    if covs is None:
        covs = np.full((X.shape[0], d, d), np.nan)
    header = ["k"] + [f"mean{i}" for i in range(d)] + [f"P{i}{j}" for i in range(d) for j in range(d)]
    write_csv(path, header, ([k, *X[k], *covs[k].reshape(-1)] for k in range(X.shape[0])), meta)


def read_smoothed(path):
    meta, header, rows = read_csv(path)
    data = _numeric(rows)
    d = sum(1 for h in header if h.startswith("mean"))
    return Trajectory(data[:, 1 : 1 + d]), data[:, 1 + d :].reshape(-1, d, d), meta


REPORT_HEADER = ["iter", "cost", "lambda", "alpha_or_rho", "accepted", "wall_ms"]
BENCH_HEADER = ["N", "method", "mean_ms", "std_ms", "runs", "iters"]


def write_report(path, report, meta=None):
    rows = [
        [i + 1, c, lam, a, bool(acc), t]
        for i, (c, lam, a, acc, t) in enumerate(
            zip(report.costs, report.lambdas, report.alpha_or_rho, report.accepted, report.wall_ms)
        )
    ]
    meta = dict(meta or {})
    meta.setdefault("method", report.method)
    meta.setdefault("initial_cost", repr(report.initial_cost))
    meta.setdefault("termination", report.termination)
    write_csv(path, REPORT_HEADER, rows, meta)


def read_report(path):
    meta, header, rows = read_csv(path)
    if header != REPORT_HEADER:
        raise ValueError(f"{path}: unexpected report header {header}")
    return _numeric(rows), meta


def write_bench(path, rows, meta=None):
    write_csv(path, BENCH_HEADER, ([r[h] for h in BENCH_HEADER] for r in rows), meta)


def read_config(path, allowed):
    """Parse a flat ``key = value`` file; '#' starts a comment; unknown keys are errors."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or not key:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            if key not in allowed:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            out[key] = val.strip()
    return out


def isnan(v):
    return isinstance(v, float) and math.isnan(v)

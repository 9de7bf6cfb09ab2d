"""Runtime scaling of batch versus recursive Newton smoothers on the coordinated-turn model.

Defaults reproduce the full protocol (N = 100..1500, 20 runs, 30 iterations),
which takes hours on one core; use --quick for the desk-scale grid.
"""

import argparse

from threadpoolctl import threadpool_limits

from newton_iks import io
from newton_iks.bench import ALL_METHODS, DEFAULT_GRID, DEFAULT_ITERS, DEFAULT_RUNS, run_benchmark, thread_cap


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--quick", action="store_true", help="grid 100,200,400,800 with 5 runs")
    p.add_argument("--runs", type=int)
    p.add_argument("--iters", type=int, default=DEFAULT_ITERS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="bench.csv")
    args = p.parse_args()

    grid = (100, 200, 400, 800) if args.quick else DEFAULT_GRID
    runs = args.runs or (5 if args.quick else DEFAULT_RUNS)
    with threadpool_limits(thread_cap()):
        rows = run_benchmark(grid, runs, args.iters, ALL_METHODS, seed=args.seed,
                             progress=lambda r: print(f"N={r['N']:5d} {r['method']:13s} "
                                                      f"{r['mean_ms']:9.1f} +- {r['std_ms']:.1f} ms", flush=True))
    io.write_bench(args.out, rows, {"seed": args.seed, "threads": thread_cap()})

    by = {(r["N"], r["method"]): r["mean_ms"] for r in rows}
    lo, hi = min(grid), max(grid)
    for m in ALL_METHODS:
        print(f"{m:13s} time({hi})/time({lo}) = {by[(hi, m)] / by[(lo, m)]:.1f}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()

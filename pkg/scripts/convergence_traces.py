"""Cost-versus-iteration traces of all four methods on one coordinated-turn problem."""

import argparse

from newton_iks import io
from newton_iks.models import coordinated_turn, prior_rollout, simulate
from newton_iks.strategies import METHODS, LineSearchConfig, TrustRegionConfig, run_method


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--out", default="traces.csv")
    args = p.parse_args()

    model = coordinated_turn()
    sim = simulate(model, args.N, seed=args.seed)
    x0 = prior_rollout(model, args.N)
    ls = LineSearchConfig(outer_iters=args.iters, rel_tol=None)
    tr = TrustRegionConfig(outer_iters=args.iters, rel_tol=None)
    rows = []
    for name in sorted(METHODS):
        rep = run_method(name, model, x0, sim.measurements, ls, tr)
        rows.append([name, 0, rep.initial_cost])
        rows += [[name, i + 1, c] for i, c in enumerate(rep.costs)]
        print(f"{name:13s} {rep.initial_cost:.6g} -> {rep.final_cost:.10g}")
    io.write_csv(args.out, ["method", "iter", "cost"], rows, {"seed": args.seed, "N": args.N})
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()

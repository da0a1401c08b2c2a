"""Time the compiled simplex kernel against the numpy fallback.

    python3 benchmarks/bench_simplex.py [--repeat N]

Each case builds one MILP, then times the root LP relaxation and a full
branch-and-bound solve with both kernels (root only for the largest case,
where the fallback's tree search runs for minutes). Objectives are
cross-checked.
"""

import argparse
import statistics
import sys
import time

from p2piot.milp import available_kernels, build, solve_exact
from p2piot.milp.simplex import StandardForm, solve_lp
from p2piot.model import build_instance, random_small_instance


def cases():
    yield "tiny (seed 7)", random_small_instance(7), True
    yield "tiny (seed 31)", random_small_instance(31), True
    yield "6 obj / 2x2 relays", build_instance(3, n_objects=6, grid=(2, 2), area=(12.0, 12.0),
                                               profile=(3, 2, 2, 1, 1, 1, 1, 0, 0, 0)), True
    yield "8 obj / 2x3 relays", build_instance(5, n_objects=8, grid=(2, 3), area=(18.0, 12.0),
                                               profile=(3, 3, 2, 2, 1, 1, 1, 1, 0, 0)), False


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), statistics.median(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    kernels = available_kernels()
    if "compiled" not in kernels:
        print("compiled kernel not built; only the numpy fallback is available", file=sys.stderr)

    print(f"{'case':<22}{'rows x cols':>14}  {'stage':<6}" + "".join(f"{k:>14}" for k in kernels)
          + ("  speedup" if len(kernels) == 2 else ""))
    for label, inst, tree in cases():
        m = build(inst)
        sf = StandardForm(m)
        shape = "{} x {}".format(*sf.shape)
        for stage in ("root", "b&b") if tree else ("root",):
            row, objs = [], []
            for k in kernels:
                if stage == "root":
                    t, _, res = best_of(lambda: solve_lp(sf, kernel=k), args.repeat)
                else:
                    t, _, res = best_of(lambda: solve_exact(m, kernel=k), args.repeat)
                row.append(t)
                objs.append(res.objective)
            if len(objs) == 2 and abs(objs[0] - objs[1]) > 1e-9 * max(1.0, abs(objs[0])):
                print(f"objective mismatch on {label} ({stage}): {objs}", file=sys.stderr)
                return 1
            line = f"{label:<22}{shape:>14}  {stage:<6}" + "".join(f"{t * 1e3:>12.2f}ms" for t in row)
            if len(row) == 2:
                line += f"  {row[1] / row[0]:6.1f}x"
            print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())

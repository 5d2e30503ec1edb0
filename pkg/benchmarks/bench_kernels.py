"""Compiled core vs pure-Python fallback on the three hot kernels.

    python benchmarks/bench_kernels.py [--sizes 100,200,400] [--steps 200] [--repeat 3]

Prints best-of-``repeat`` wall times and the speedup per kernel and size.
Inputs are the assembled Legendre operator, so the numbers reflect the
production workload.
"""

import argparse
import timeit

import numpy as np

from degencontrol import assemble, build_grid, make_coefficient
from degencontrol._kernels import backends


def workloads(n, steps):
    op = assemble(make_coefficient("legendre"), None, build_grid(n))
    diag, off = np.ascontiguousarray(-op.diag), np.ascontiguousarray(op.offdiag)
    dt = 1e-4
    m_diag = np.ascontiguousarray(1.0 - dt * op.diag)
    m_off = np.ascontiguousarray(-dt * op.offdiag)
    v0 = np.ascontiguousarray(1.0 + 0.5 * op.grid.centers)
    record = np.array([0, steps])
    neg_off = np.ascontiguousarray(-off)
    return {
        "tridiag_eigh": lambda k: k.tridiag_eigh(diag, neg_off),
        "thomas_solve": lambda k: k.thomas_solve(m_off, m_diag, m_off, v0),
        f"implicit_march[{steps}]": lambda k: k.implicit_march(m_off, m_diag, m_off, v0,
                                                               steps, record),
    }


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="100,200,400")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    found = backends()
    if "cython" not in found:
        print("compiled core not built; only the fallback is timed")
    names = sorted(found)
    print(f"{'kernel':<22}{'n':>6}" + "".join(f"{b + ' [s]':>14}" for b in names)
          + ("    speedup" if len(names) == 2 else ""))
    for n in (int(s) for s in args.sizes.split(",")):
        for label, job in workloads(n, args.steps).items():
            times = [best_time(lambda: job(found[b]), args.repeat) for b in names]
            row = f"{label:<22}{n:>6}" + "".join(f"{t:>14.5f}" for t in times)
            if len(times) == 2:
                row += f"{times[1] / times[0]:>11.1f}x"
            print(row)


if __name__ == "__main__":
    main()

"""Throughput comparison of the compiled and pure-Python kernels.

Times the two hot entry points (batch expression evaluation and segment
integration) on the same packed programs.  Run from the repo root:

    python3 benchmarks/bench_backends.py [--rows 200000] [--steps 20000]
"""

import argparse
import time

import numpy as np

from impulsekit._kernels import fallback
from impulsekit.exprlang import parse, parse_vector

try:
    from impulsekit._kernels import _speedups
except ImportError:
    _speedups = None

FLOW = ["-1.1*x1*(1 + exp(1.1*abs(x1))) + abs(x2)*exp(abs(x2))",
        "-x2*(1 + exp(abs(x2))) + abs(x1)*exp(abs(x1))"]


def best_of(runs, fn):
    best = float("inf")
    for _ in range(runs):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_eval_many(impl, rows, runs=5):
    e = parse(FLOW[0], 2, 0)
    prog = e.program
    rng = np.random.default_rng(1)
    X = rng.uniform(-2.0, 2.0, size=(rows, 2))
    U = np.zeros((rows, 0))

    def work():
        impl.eval_many(prog.code, prog.operand, prog.stack_need, X, U)

    return rows / best_of(runs, work)


def bench_rk4(impl, steps, runs=5):
    v = parse_vector(FLOW, 2, 0)
    code, operand, offsets, stack_need = v.packed()
    x0 = np.array([0.4, -0.3])
    hs = np.full(steps, 1e-4)
    u_stages = np.zeros((steps, 3, 0))

    def work():
        out = impl.rk4_segment(code, operand, offsets, stack_need,
                               x0, hs, u_stages)
        assert out[1] == 0

    return steps / best_of(runs, work)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=200000,
                    help="points per eval_many call")
    ap.add_argument("--steps", type=int, default=20000,
                    help="steps per rk4_segment call")
    args = ap.parse_args()

    impls = [("python", fallback)]
    if _speedups is not None:
        impls.append(("compiled", _speedups))
    else:
        print("compiled backend not built; benchmarking the fallback only")

    results = {}
    for name, impl in impls:
        ev = bench_eval_many(impl, args.rows)
        rk = bench_rk4(impl, args.steps)
        results[name] = (ev, rk)
        print("%-9s eval_many %12.0f pts/s   rk4_segment %10.0f steps/s"
              % (name, ev, rk))

    if len(results) == 2:
        ev_ratio = results["compiled"][0] / results["python"][0]
        rk_ratio = results["compiled"][1] / results["python"][1]
        print("speedup   eval_many %11.1fx     rk4_segment %9.1fx"
              % (ev_ratio, rk_ratio))


if __name__ == "__main__":
    main()

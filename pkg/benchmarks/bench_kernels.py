"""Compare the compiled kernels with the NumPy fallback.

Times value, Jacobian and degree-integrand evaluation on the auxiliary map
of the fixture immersion and prints the speed-up and the largest relative
difference between the two backends.

    python3 benchmarks/bench_kernels.py [--points 200000] [--repeat 5]
"""
import argparse
import time
from fractions import Fraction

import numpy as np

from sphereimm import kernels
from sphereimm.degree import build_H
from sphereimm.polycore import PolynomialMap, variables


def _best(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    x, y, z = variables(3)
    g = PolynomialMap(3, (x, y, x * z, y * z))
    cm = build_H(g, Fraction(1, 10), 4).H.compiled
    rng = np.random.default_rng(args.seed)
    pts = rng.normal(size=(args.points, cm.n))
    dirs = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    scale = np.ones(cm.m)

    cases = {
        "values": (lambda: cm.values(pts), lambda: kernels._np_eval(cm, pts, False)[0]),
        "values+jacobian": (lambda: cm.values_and_jacobian(pts)[1],
                            lambda: kernels._np_eval(cm, pts, True)[1]),
        "degree integrand": (lambda: cm.kronecker_integrand(dirs, 0.5),
                             lambda: kernels._np_kronecker(cm, dirs, 0.5, scale)),
    }
    print(f"active backend: {kernels.BACKEND}; {args.points} points, best of {args.repeat}")
    if kernels.BACKEND != "cython":
        print("compiled extension not built; only the NumPy path is timed")
    print(f"{'kernel':<18}{'compiled s':>12}{'numpy s':>12}{'speed-up':>10}{'max rel diff':>15}")
    for name, (fast, ref) in cases.items():
        t_ref, v_ref = _best(ref, args.repeat)
        if kernels.BACKEND == "cython":
            t_fast, v_fast = _best(fast, args.repeat)
            print(f"{name:<18}{t_fast:>12.4f}{t_ref:>12.4f}{t_ref / t_fast:>10.1f}"
                  f"{_rel(v_fast, v_ref):>15.2e}")
        else:
            print(f"{name:<18}{'-':>12}{t_ref:>12.4f}{'-':>10}{'-':>15}")


if __name__ == "__main__":
    main()

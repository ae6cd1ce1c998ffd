#!/usr/bin/env python3
"""Benchmark the jitted kernels against their pure-numpy twins.

Covers the two hot paths: Dormand-Prince propagation of a Liouville
vector and the pole-weight matrix of the delayed filter integrals.  Run
after warm-up so numba compilation time is excluded:

    python benchmarks/bench_kernels.py [--n-max 4] [--sensors 2]
"""

import argparse
import time

import numpy as np

from nphoton import JCParams, SensorSpec, attach_sensors, build_liouvillian, jaynes_cummings
from nphoton import kernels
from nphoton.models import probe_operator


def time_best(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-max", type=int, default=4)
    parser.add_argument("--sensors", type=int, default=2)
    parser.add_argument("--tau", type=float, default=25.0)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    p = JCParams(gamma_a=0.1, gamma_s=0.01, P_s=0.01, n_max=args.n_max)
    me = jaynes_cummings(p)
    specs = tuple(
        SensorSpec(0.4 * (i + 1), 0.21) for i in range(args.sensors)
    )
    ss = attach_sensors(me, probe_operator(me), specs)
    liou = ss.liouvillian()
    superop = liou.superop
    d2 = superop.shape[0]
    print(f"Liouville dimension {d2} ({superop.nnz} nonzeros), "
          f"span {args.tau} / g, rtol 1e-8")

    rng = np.random.default_rng(0)
    y0 = rng.normal(size=d2) + 1j * rng.normal(size=d2)
    y0 /= np.linalg.norm(y0)
    span = (0.0, args.tau)

    rows = []
    if kernels.USING_NUMBA:
        kernels.expm_action(superop, y0, (0.0, 0.1), 1e-8, 1e-12)  # warm up
        t_nb = time_best(
            lambda: kernels.expm_action(superop, y0, span, 1e-8, 1e-12,
                                        use_numba=True),
            args.repeats,
        )
        rows.append(("propagation", "numba", t_nb))
    t_np = time_best(
        lambda: kernels.expm_action(superop, y0, span, 1e-8, 1e-12,
                                    use_numba=False),
        args.repeats,
    )
    rows.append(("propagation", "numpy", t_np))

    m = np.linalg.eigvals(build_liouvillian(me).superop.toarray())
    wargs = (m, 3.0, 0.5, 0.21, 1e-10)
    if kernels.USING_NUMBA:
        kernels.pole_weights(*wargs, use_numba=True)  # warm up
        t_nb = time_best(lambda: kernels.pole_weights(*wargs, use_numba=True),
                         args.repeats)
        rows.append(("pole weights", "numba", t_nb))
    t_np = time_best(lambda: kernels.pole_weights(*wargs, use_numba=False),
                     args.repeats)
    rows.append(("pole weights", "numpy", t_np))

    print(f"{'kernel':<14} {'backend':<8} {'best of ' + str(args.repeats):>12}")
    for name, backend, t in rows:
        print(f"{name:<14} {backend:<8} {t * 1e3:>10.2f} ms")
    for name in dict.fromkeys(r[0] for r in rows):
        ts = {b: t for n, b, t in rows if n == name}
        if "numba" in ts and "numpy" in ts:
            print(f"{name}: numpy/numba = {ts['numpy'] / ts['numba']:.1f}x")


if __name__ == "__main__":
    main()

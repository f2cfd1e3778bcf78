"""Compare the compiled value-iteration kernels with the pure-Python mirror.

Runs robust sweeps over the interval chain induced by a uniform policy on a
mid-size generated model and reports per-sweep times.  The two
implementations follow the same accumulation order, so their results must
agree bit for bit.
"""

import argparse
import time

import numpy as np

from upomdp import (
    Interval,
    SpacecraftParams,
    SpecThreshold,
    gen_spacecraft,
    induce_imc,
    uniform_policy,
)
from upomdp import _kernels_py
from upomdp.robustcheck import COMPILED_KERNELS, pack_imc

try:
    from upomdp import _kernels
except ImportError:
    _kernels = None


def sweep_time(kern, arrays, sweeps):
    indptr, indices, lo, hi, reward, goal = arrays
    n = len(reward)
    v = np.zeros(n)
    v_next = np.zeros(n)
    scratch = np.zeros(int(max((indptr[1:] - indptr[:-1]).max(), 1)), dtype=np.int64)
    start = time.perf_counter()
    for _ in range(sweeps):
        kern.vi_sweep(indptr, indices, lo, hi, reward, goal, v, v_next, True, scratch)
        v, v_next = v_next, v
    elapsed = time.perf_counter() - start
    return elapsed / sweeps, v


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--orbits", type=int, default=12)
    ap.add_argument("--horizon", type=int, default=40)
    ap.add_argument("--sweeps", type=int, default=50)
    args = ap.parse_args()

    objects = frozenset(
        ((3 * t) % args.orbits, t) for t in range(2, args.horizon - 1, 3)
    )
    model = gen_spacecraft(
        SpacecraftParams(
            orbit_count=args.orbits,
            horizon=args.horizon,
            switch_radius=2,
            switch_success=Interval(0.6, 0.9),
            detect_success=Interval(0.6, 0.9),
            objects=objects,
        )
    )
    imc = induce_imc(model, uniform_policy(model))
    arrays = pack_imc(imc)
    nnz = len(arrays[1])
    print(f"chain: {imc.num_states} states, {nnz} interval entries")
    print(f"compiled kernels available: {COMPILED_KERNELS}")

    t_py, v_py = sweep_time(_kernels_py, arrays, args.sweeps)
    print(f"pure python : {t_py * 1e3:9.3f} ms/sweep")
    if _kernels is not None:
        t_cy, v_cy = sweep_time(_kernels, arrays, args.sweeps)
        print(f"compiled    : {t_cy * 1e3:9.3f} ms/sweep")
        print(f"speedup     : {t_py / t_cy:9.1f}x")
        same = np.array_equal(v_py, v_cy)
        print(f"bit-identical results: {same}")
        if not same:
            raise SystemExit(1)


if __name__ == "__main__":
    main()

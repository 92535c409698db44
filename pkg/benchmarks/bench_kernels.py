"""Compare the compiled and numpy supremum kernels on curve-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from decayscales import _kernels as K


def _time(fn, args, repeat):
    fn(*args)  # warm-up (compilation for numba)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(rng):
    u = np.logspace(-4, 12, 256 * 16 + 1)
    a = (1 + u) ** -2.0
    r = -0.5 * np.log(a * a + u * u)
    t = np.logspace(2, 8, 49)
    yield "weighted_max", (t, a, r)
    s = np.geomspace(2, 1e6, 64)
    yield "interval_profile", (a, u, np.zeros_like(s), s)
    zr = np.repeat(np.geomspace(1e-6, 1e3, 20), 200)
    zi = np.tile(-u[::20][:200], 20)
    yield "halfplane", (zr, zi, a[::4], u[::4], r[::4])


def main(argv=None):
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"numba available: {K.NUMBA_AVAILABLE}")
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, inputs in cases(rng):
        slow = getattr(K, name + "_numpy")
        t_np, out_np = _time(slow, inputs, args.repeat)
        if K.NUMBA_AVAILABLE:
            fast = getattr(K, name + "_numba")
            t_nb, out_nb = _time(fast, inputs, args.repeat)
            a = out_np[0] if isinstance(out_np, tuple) else out_np
            b = out_nb[0] if isinstance(out_nb, tuple) else out_nb
            diff = float(np.max(np.abs(a - b)))
            print(f"{name:<18}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>10.1f}{diff:>14.3g}")
        else:
            print(f"{name:<18}{t_np * 1e3:>12.2f}{'-':>12}{'-':>10}{'-':>14}")


if __name__ == "__main__":
    main()

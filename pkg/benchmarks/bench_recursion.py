"""Time the compiled semi-discrete recursion against the numpy fallback.

    python3 benchmarks/bench_recursion.py --N 200 --M 2000 --repeat 20
"""

import argparse
import timeit

import numpy as np

from spikedkpz.polymer import _fallback

try:
    from spikedkpz.polymer import _core
except ImportError:
    _core = None


def make_input(N: int, M: int, tau: float, seed: int = 0):
    rng = np.random.default_rng(seed)
    dt = tau / M
    incr = rng.normal(0.0, np.sqrt(dt), size=(N, M))
    log_d = np.full(N, -np.inf)
    log_d[0] = 0.0
    return log_d, incr, dt


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=200)
    ap.add_argument("--M", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    log_d, incr, dt = make_input(args.N, args.M, float(args.N))
    backends = [("python", _fallback.log_partition)]
    if _core is not None:
        backends.insert(0, ("cython", _core.log_partition))
    values = {}
    print(f"N={args.N} M={args.M} repeat={args.repeat}")
    for name, fn in backends:
        values[name] = fn(log_d, incr, dt)
        t = min(timeit.repeat(lambda: fn(log_d, incr, dt), number=1, repeat=args.repeat))
        print(f"{name:>7}: {1e3 * t:8.3f} ms per sample   ln Z = {values[name]:.12f}")
    if len(values) == 2:
        print(f"max |difference| = {abs(values['cython'] - values['python']):.3e}")


if __name__ == "__main__":
    main()

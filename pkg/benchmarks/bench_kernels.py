"""Time the compiled kernels against the numpy fallback.

Run ``python3 benchmarks/bench_kernels.py``; prints one line per kernel with
the median wall time of each backend and the speedup.
"""

import argparse
import timeit

import numpy as np

from pinnforensics import _fallback, kernels

try:
    from pinnforensics import _kernels as compiled
except ImportError:
    compiled = None


def cases(batch, width, nx):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((4, batch, width))
    g = rng.standard_normal((4, batch, width))
    y = np.tanh(a)
    u = np.sin(2 * np.pi * np.arange(nx) / nx)
    m = rng.standard_normal((width, width))
    return {
        "tanh_dual_forward": lambda impl: kernels.tanh_dual_forward(a, impl=impl),
        "tanh_dual_backward": lambda impl: kernels.tanh_dual_backward(a, y, g, impl=impl),
        "burgers_rhs": lambda impl: kernels.burgers_rhs(u, 1.0 / nx, 0.01 / np.pi, True, impl=impl),
        "frozen_field_rhs": lambda impl: kernels.frozen_field_rhs(u, u, 1.0 / nx, 0.01 / np.pi, impl=impl),
        "band_profile": lambda impl: kernels.band_profile(m, impl=impl),
    }


def best_of(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return float(np.median(timeit.repeat(fn, number=number, repeat=repeat))) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=1024)
    ap.add_argument("--width", type=int, default=100)
    ap.add_argument("--nx", type=int, default=2048)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"batch={args.batch} width={args.width} nx={args.nx}")
    if compiled is None:
        print("compiled extension not built; timing numpy only")
    print(f"{'kernel':<20} {'numpy [ms]':>11} {'cython [ms]':>12} {'speedup':>8}")
    for name, fn in cases(args.batch, args.width, args.nx).items():
        t_np = best_of(lambda: fn(_fallback), args.repeat)
        if compiled is None:
            print(f"{name:<20} {1e3 * t_np:11.3f} {'-':>12} {'-':>8}")
            continue
        t_cy = best_of(lambda: fn(compiled), args.repeat)
        print(f"{name:<20} {1e3 * t_np:11.3f} {1e3 * t_cy:12.3f} {t_np / t_cy:7.2f}x")


if __name__ == "__main__":
    main()

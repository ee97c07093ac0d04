"""Compare the compiled and NumPy Levinson kernels.

    python3 benchmarks/bench_levinson.py [--sizes 256,1024,4096] [--repeat 3]
"""
import argparse
import math
import time

import numpy as np

from fhtoeplitz import kernels
from fhtoeplitz.symbol import FHSingularity, fourier_coeffs, make_symbol


def best_time(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--sizes", default="256,1024,4096")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    sizes = [int(x) for x in args.sizes.split(",")]
    sym = make_symbol(None, [FHSingularity(0.0, 0.5), FHSingularity(2.0, 0.75, 0.2)])
    table = fourier_coeffs(sym, max(sizes) - 1, 1e-10)
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"{'n':>6} " + " ".join(f"{b + ' [s]':>12}" for b in backends) + f" {'speed-up':>9} {'max |diff|':>11}")
    for n in sizes:
        f = np.ascontiguousarray(table.nonnegative[:n])
        times, outs = [], []
        for b in backends:
            times.append(best_time(lambda: kernels.levinson(f, n, backend=b), args.repeat))
            outs.append(kernels.levinson(f, n, backend=b)[0])
        row = f"{n:>6} " + " ".join(f"{t:>12.4f}" for t in times)
        if len(times) == 2:
            row += f" {times[0] / times[1]:>9.1f} {float(np.max(np.abs(outs[0] - outs[1]))):>11.2e}"
        print(row)
    if len(backends) == 1:
        print("compiled kernel not built; only the NumPy fallback was timed")


if __name__ == "__main__":
    main()

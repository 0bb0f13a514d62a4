"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from sdmm.kernels import get_backend


def cases(rng):
    for n in (9, 18, 36, 72):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        yield f"cmatmul {n}x{n}", "cmatmul", (a, b)
    for terms, npts in ((7, 13), (13, 25)):
        coeffs = rng.standard_normal((terms, 36, 9)) + 1j * rng.standard_normal((terms, 36, 9))
        pts = np.exp(2j * np.pi * np.arange(1, npts + 1) / npts)
        yield f"poly_eval {terms} terms at {npts} points", "poly_eval", (coeffs, np.arange(terms), pts)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    try:
        cy = get_backend("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run pip install -e . --no-build-isolation")
    py = get_backend("python")
    print(f"{'kernel':<34}{'cython ms':>12}{'python ms':>12}{'speedup':>10}  identical")
    for label, name, args_ in cases(np.random.default_rng(0)):
        f_cy, f_py = getattr(cy, name), getattr(py, name)
        n = 20
        t_cy = min(timeit.repeat(lambda: f_cy(*args_), number=n, repeat=args.repeat)) / n
        t_py = min(timeit.repeat(lambda: f_py(*args_), number=n, repeat=args.repeat)) / n
        same = np.array_equal(f_cy(*args_), f_py(*args_))
        print(f"{label:<34}{t_cy * 1e3:>12.3f}{t_py * 1e3:>12.3f}{t_py / t_cy:>10.1f}  {same}")


if __name__ == "__main__":
    main()

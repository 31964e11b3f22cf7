#!/usr/bin/env python3
"""Print the benchmark suite: slice positions, estimated slice maxima
of upended slices, and empirical cross-correlation sign patterns."""

import sys

import numpy as np

from mixedgp.testbed import empirical_cross_corr, make_benchmark_suite


def main() -> int:
    for fn in make_benchmark_suite():
        print(f"== {fn.fid} ==")
        print("positions:", ", ".join(f"{p:.2f}" for p in fn.positions))
        if fn.upended:
            maxima = ", ".join(f"{i}: {fn.y_max_hat[i]:.3f}" for i in sorted(fn.upended))
            print("upended slice maxima:", maxima)
        est = empirical_cross_corr(fn, resolution=100)
        tri = est.matrix[np.triu_indices(fn.s, 1)]
        print(f"pairs: {int((tri > 0).sum())} positive, {int((tri < 0).sum())} negative")
        with np.printoptions(precision=2, suppress=True):
            print(est.matrix)
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())

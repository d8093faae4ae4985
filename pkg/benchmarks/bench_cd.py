"""Time the compiled and pure-Python coordinate-descent kernels.

Both kernels solve the same warm-started Lasso path on identical Gram
matrices; the script reports wall time per path and the largest
coefficient difference between backends.

    python benchmarks/bench_cd.py --T 300 --n 100 --repeat 3
"""

import argparse
import time

import numpy as np

from bmtselect import _cd_py
from bmtselect.penalized import MAX_SWEEPS, TOL, lambda_grid

try:
    from bmtselect import _cd
except ImportError:
    _cd = None


def problem(T, n, seed):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(T)
    X = rng.standard_normal((T, n)) + 0.5 * f[:, None]
    y = X[:, :4].sum(axis=1) + rng.standard_normal(T)
    X = (X - X.mean(0)) / X.std(0)
    y = y - y.mean()
    G = np.ascontiguousarray(X.T @ X / T)
    c = X.T @ y / T
    return G, c


def run_path(kernel, G, c, lambdas):
    beta = np.zeros(c.size)
    grad = c.copy()
    out = np.empty((lambdas.size, c.size))
    for i, lam in enumerate(lambdas):
        kernel(G, beta, grad, float(lam), TOL, MAX_SWEEPS)
        out[i] = beta
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=300)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    G, c = problem(args.T, args.n, args.seed)
    lambdas = lambda_grid(float(np.abs(c).max()))
    backends = [("python", _cd_py.cd_gram)]
    if _cd is not None:
        backends.insert(0, ("cython", _cd.cd_gram))
    else:
        print("compiled kernel not built; timing the Python fallback only")
    paths = {}
    for name, kernel in backends:
        times = []
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            paths[name] = run_path(kernel, G, c, lambdas)
            times.append(time.perf_counter() - t0)
        print(f"{name:>7}: best {min(times):.4f} s per 100-point path (T={args.T}, n={args.n})")
    if len(paths) == 2:
        diff = np.abs(paths["cython"] - paths["python"]).max()
        print(f"max |coef difference|: {diff:.3e}")


if __name__ == "__main__":
    main()

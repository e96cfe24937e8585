"""Benchmark: compiled vs pure-numpy explicit-Euler flow kernel.

The closed-form spectral evaluation is shown for context; the Euler
integrator is the test oracle and the only sequential hot loop in the
package.  Run as `python benchmarks/bench_euler.py [m] [steps]`.
"""

import sys
import time

import numpy as np

from rfflow import _euler_py
from rfflow import features, flow

try:
    from rfflow import _euler as _euler_c
except ImportError:
    _euler_c = None


def build_system(m: int, seed: int = 0):
    d = 10
    pts = features.sample_sphere([seed, 1], d, m)
    feats = features.sample_features([seed, 2], d, m, "relu")
    data = features.Dataset(points=pts, targets=np.ones(m), dim=d)
    phi = features.build_feature_matrix(data, feats).values
    y = np.random.default_rng([seed, 3]).standard_normal(m)
    hmat = phi.T @ phi / (m * m)
    rhs = phi.T @ y / (m * m)
    return phi, y, hmat, rhs


def time_backend(euler_path, hmat, rhs, h, steps, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        a = np.zeros(hmat.shape[0])
        scratch = np.empty_like(a)
        t0 = time.perf_counter()
        euler_path(hmat, rhs, h, steps, a, scratch)
        best = min(best, time.perf_counter() - t0)
    return best, a


def main():
    m = int(sys.argv[1]) if len(sys.argv) > 1 else 64
    steps = int(sys.argv[2]) if len(sys.argv) > 2 else 50_000
    h = 1e-4
    phi, y, hmat, rhs = build_system(m)

    t0 = time.perf_counter()
    dec = flow.decompose(phi)
    exact = flow.coefficients_at(dec, y, h * steps)
    closed_form = time.perf_counter() - t0

    print(f"system: m = {m}, steps = {steps}, h = {h:g} "
          f"(flow horizon t = {h * steps:g})")
    print(f"closed-form spectral evaluation: {closed_form * 1e3:8.2f} ms "
          "(SVD + one grid point)")

    t_py, a_py = time_backend(_euler_py.euler_path, hmat, rhs, h, steps)
    err_py = np.linalg.norm(a_py - exact) / np.linalg.norm(exact)
    print(f"python  euler_path:             {t_py * 1e3:8.2f} ms "
          f"(rel err vs closed form {err_py:.2e})")

    if _euler_c is None:
        print("compiled euler_path:             not built "
              "(pip install -e . builds it; fallback active)")
        return
    t_c, a_c = time_backend(_euler_c.euler_path, hmat, rhs, h, steps)
    err_c = np.linalg.norm(a_c - exact) / np.linalg.norm(exact)
    print(f"compiled euler_path:            {t_c * 1e3:8.2f} ms "
          f"(rel err vs closed form {err_c:.2e})")
    print(f"speedup compiled / python:      {t_py / t_c:8.2f}x")
    drift = np.max(np.abs(a_py - a_c))
    print(f"max |python - compiled|:        {drift:.3e}")


if __name__ == "__main__":
    main()

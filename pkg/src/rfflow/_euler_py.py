"""Pure-numpy fallback for the explicit-Euler flow kernel."""

import numpy as np


def euler_path(hmat, rhs, h, n_steps, a, scratch):
    for _ in range(n_steps):
        np.matmul(hmat, a, out=scratch)
        np.subtract(rhs, scratch, out=scratch)
        a += h * scratch

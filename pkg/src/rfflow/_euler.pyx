# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled explicit-Euler kernel for the least-squares gradient flow.

Integrates a' = rhs - H a in place over ``n_steps`` steps of size ``h``.
The loop is sequential in time, so it cannot be vectorised away; this is
the one hot inner loop of the package that benefits from compilation.
"""


def euler_path(double[:, ::1] hmat, double[::1] rhs, double h, long n_steps,
               double[::1] a, double[::1] scratch):
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t i, j
    cdef long step
    cdef double acc
    for step in range(n_steps):
        for i in range(m):
            acc = rhs[i]
            for j in range(m):
                acc -= hmat[i, j] * a[j]
            scratch[i] = acc
        for i in range(m):
            a[i] += h * scratch[i]

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernels.

Same contract as ``_kernels_py``: one fused IMEX step (explicit reaction,
backward-Euler diffusion, Dirichlet pin folded into the right-hand side)
plus a no-pivoting Thomas solve.  The implicit matrix is strictly
diagonally dominant, so pivoting is unnecessary.
"""

import numpy as np

cimport numpy as cnp

BACKEND_NAME = "compiled"


cdef void _thomas(double[::1] low, double[::1] diag, double[::1] up,
                  double[::1] rhs, double[::1] out,
                  double[::1] cp, double[::1] dp) noexcept nogil:
    cdef Py_ssize_t m = diag.shape[0]
    cdef Py_ssize_t i
    cdef double denom
    cp[0] = up[0] / diag[0]
    dp[0] = rhs[0] / diag[0]
    for i in range(1, m):
        denom = diag[i] - low[i] * cp[i - 1]
        cp[i] = up[i] / denom
        dp[i] = (rhs[i] - low[i] * dp[i - 1]) / denom
    out[m - 1] = dp[m - 1]
    for i in range(m - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]


def thomas_solve(double[::1] low, double[::1] diag, double[::1] up,
                 double[::1] rhs, double[::1] out):
    cdef Py_ssize_t m = diag.shape[0]
    cdef cnp.ndarray scratch = np.empty(2 * m, dtype=np.float64)
    cdef double[::1] buf = scratch
    _thomas(low, diag, up, rhs, out, buf[:m], buf[m:])


def imex_step(double[::1] w, double[::1] out, double[::1] r,
              double[::1] lap_sub, double[::1] lap_diag, double[::1] lap_sup,
              double[::1] der_m, double[::1] der_0, double[::1] der_p,
              double dt, double n_dim, double b, double mu_tilde, double bc_value):
    cdef Py_ssize_t N1 = w.shape[0]
    cdef Py_ssize_t m = N1 - 1
    cdef cnp.ndarray scratch = np.empty(6 * m, dtype=np.float64)
    cdef double[::1] buf = scratch
    cdef double[::1] low = buf[:m]
    cdef double[::1] diag = buf[m:2 * m]
    cdef double[::1] up = buf[2 * m:3 * m]
    cdef double[::1] rhs = buf[3 * m:4 * m]
    cdef double[::1] cp = buf[4 * m:5 * m]
    cdef double[::1] dp = buf[5 * m:6 * m]
    cdef Py_ssize_t i
    cdef double wr

    with nogil:
        rhs[0] = w[0] + dt * n_dim * w[0] * (w[0] - mu_tilde)
        for i in range(1, m):
            wr = der_m[i] * w[i - 1] + der_0[i] * w[i] + der_p[i] * w[i + 1]
            rhs[i] = w[i] + dt * n_dim * (w[i] + b * r[i] * wr) * (w[i] - mu_tilde)
        rhs[m - 1] = rhs[m - 1] + dt * lap_sup[m - 1] * bc_value

        for i in range(m):
            low[i] = -dt * lap_sub[i]
            diag[i] = 1.0 - dt * lap_diag[i]
            up[i] = -dt * lap_sup[i]

        _thomas(low, diag, up, rhs, out[:m], cp, dp)
        out[m] = bc_value

"""Pure numpy implementation of the hot stepping kernels.

Mirrors the compiled extension in ``_kernels.pyx``; selected automatically
when the extension is unavailable (or forced via ``KSLAB_PURE_PYTHON=1``).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

BACKEND_NAME = "python"


def thomas_solve(low, diag, up, rhs, out):
    """Solve the tridiagonal system with the given bands.

    ``low[i]`` multiplies ``x[i-1]`` (``low[0]`` unused), ``up[i]``
    multiplies ``x[i+1]`` (``up[-1]`` unused).
    """
    m = diag.size
    ab = np.zeros((3, m))
    ab[0, 1:] = up[:-1]
    ab[1, :] = diag
    ab[2, :-1] = low[1:]
    out[:] = solve_banded((1, 1), ab, rhs, check_finite=False)


def imex_step(w, out, r, lap_sub, lap_diag, lap_sup, der_m, der_0, der_p,
              dt, n_dim, b, mu_tilde, bc_value):
    """One implicit-diffusion / explicit-reaction step.

    Treats the radial diffusion (assembled in ``lap_*``) with backward
    Euler and evaluates the reaction ``n (w + b r w_r)(w - mu_tilde)``
    at the current state.  The last node is pinned to ``bc_value`` and
    folded into the right-hand side, so the solve covers nodes 0..N-1.
    """
    N1 = w.size
    rhs = np.empty(N1 - 1)
    # reaction, with w_r from the centered stencil (zero at the origin)
    wr = der_m[1:-1] * w[:-2] + der_0[1:-1] * w[1:-1] + der_p[1:-1] * w[2:]
    rhs[0] = w[0] + dt * n_dim * w[0] * (w[0] - mu_tilde)
    rhs[1:] = w[1:-1] + dt * n_dim * (w[1:-1] + b * r[1:-1] * wr) * (w[1:-1] - mu_tilde)
    rhs[-1] += dt * lap_sup[N1 - 2] * bc_value

    low = -dt * lap_sub[: N1 - 1]
    diag = 1.0 - dt * lap_diag[: N1 - 1]
    up = -dt * lap_sup[: N1 - 1]
    thomas_solve(low, diag, up, rhs, out[: N1 - 1])
    out[N1 - 1] = bc_value

"""Backend selection for the stepping kernels.

Prefers the compiled extension and falls back to the numpy implementation.
Set ``KSLAB_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and by backend-parity tests).
"""

import os

if os.environ.get("KSLAB_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND_NAME
imex_step = _impl.imex_step
thomas_solve = _impl.thomas_solve

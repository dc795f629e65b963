"""Selects the scoring kernel at import time.

The compiled extension is preferred; the pure-NumPy module is the fallback.
Set PARC_PURE_PY=1 to force the fallback (useful for benchmarking and for
environments without a compiler). `kernels.BACKEND` names the active one.
"""

from __future__ import annotations

import os

if os.environ.get("PARC_PURE_PY"):
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

__all__ = ["kernels"]

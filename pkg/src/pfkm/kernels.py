"""Kernel dispatch: compiled extension when importable, pure Python otherwise.

Set ``PFKM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("PFKM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

INF = _kernels_py.INF
nearest_two = _impl.nearest_two
swap_costs = _impl.swap_costs
dijkstra = _impl.dijkstra

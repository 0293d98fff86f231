"""Select the compiled kernels when available, else the pure-Python ones."""
from __future__ import annotations

import os

from nvcluster import _fallback

BACKEND = "python"
_impl = _fallback

if not os.environ.get("NVCLUSTER_PURE_PYTHON"):
    try:
        from nvcluster import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback

telegraph_counts = _impl.telegraph_counts
count_master_rk4 = _impl.count_master_rk4

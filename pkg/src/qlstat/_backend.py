"""Pick the compiled kernel module when it is importable.

Set ``QLSTAT_PURE_PYTHON=1`` to force the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

kernels = _kernels_py
BACKEND = "python"

if not os.environ.get("QLSTAT_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"

"""Backend selection for the hot kernels.

The compiled extension is used when it imports cleanly. Setting the
environment variable ``NOVLAB_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("NOVLAB_PURE_PYTHON", "") not in ("", "0"):
    kernels = _kernels_py
else:
    try:
        from . import _ckernels as kernels
    except ImportError:  # extension not built
        kernels = _kernels_py

BACKEND: str = kernels.BACKEND


def available_backends() -> dict:
    """Map backend name to kernel module for every importable backend."""
    found = {"python": _kernels_py}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found

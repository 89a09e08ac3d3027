"""Kernel selection.

The compiled extension is used when it imports; otherwise the numpy
fallback.  Setting ``DATASMASH_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
kernels = _fallback

if os.environ.get("DATASMASH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def compiled_kernels():
    """The compiled kernel module, or None when it is not built."""
    try:
        from . import _kernels as mod
    except ImportError:
        return None
    return mod

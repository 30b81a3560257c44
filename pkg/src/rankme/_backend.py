"""Select the rank-kernel implementation at import time.

The compiled ``_kernels`` extension is used when it imports; otherwise, or
when ``RANKME_PURE_PYTHON`` is set to a non-empty value, the numpy fallback
is used. ``BACKEND`` names the active choice.
"""

import os

from . import _fallback

if os.environ.get("RANKME_PURE_PYTHON"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels

        BACKEND = "cython"
    except ImportError:
        kernels = _fallback
        BACKEND = "python"


def available_backends():
    out = {"python": _fallback}
    try:
        from . import _kernels

        out["cython"] = _kernels
    except ImportError:
        pass
    return out

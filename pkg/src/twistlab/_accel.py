"""Backend switch for the compiled kernels.

Set ``TWISTLAB_NO_NUMBA=1`` to force the pure-numpy path even when numba is
installed. The choice is made once, at import time.
"""

import os

_FALSE = {"", "0", "false", "no", "off"}

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("TWISTLAB_NO_NUMBA", "").strip().lower() in _FALSE
BACKEND = "numba" if USE_NUMBA else "numpy"


def jit(fn):
    """Compile ``fn`` with numba when enabled, else return it unchanged."""
    if USE_NUMBA:
        return _njit(cache=True, nogil=True)(fn)
    return fn

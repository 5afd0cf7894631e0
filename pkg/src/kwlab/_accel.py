"""Selection between numba-compiled kernels and their pure-numpy fallbacks.

Set ``KWLAB_DISABLE_NUMBA=1`` in the environment to force the numpy paths
(also used automatically when numba cannot be imported).
"""

import os

_FLAG = os.environ.get("KWLAB_DISABLE_NUMBA", "").strip().lower()

try:  # pragma: no cover - exercised implicitly
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` with numba when enabled, otherwise return it unchanged."""
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)

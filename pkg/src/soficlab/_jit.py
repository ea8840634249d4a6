"""numba switch.

Set ``SOFICLAB_DISABLE_JIT=1`` to route every hot kernel through its pure
numpy implementation instead of the compiled one.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

JIT_ENABLED = numba is not None and os.environ.get("SOFICLAB_DISABLE_JIT", "0") not in ("1", "true", "yes")


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    if numba is not None:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f

"""Kernel backend selection.

Hot loops ship twice: a numba ``@njit`` version and a vectorized pure-numpy
version. ``FLOATWATCH_ACCEL`` picks which one the public dispatchers use:

    FLOATWATCH_ACCEL=numba   (default when numba imports)
    FLOATWATCH_ACCEL=numpy   (pure numpy; also the fallback without numba)

Both paths are kept bit-identical; the test-suite runs every kernel through
both.
"""

from __future__ import annotations

import logging
import os

log = logging.getLogger(__name__)

try:
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on numba-less installs
    _numba = None
    HAVE_NUMBA = False

_requested = os.environ.get("FLOATWATCH_ACCEL", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    log.warning("ignoring FLOATWATCH_ACCEL=%r; expected 'numba' or 'numpy'", _requested)
    _requested = "numba"

USE_NUMBA = HAVE_NUMBA and _requested == "numba"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    Compilation is lazy, so importing a module full of kernels costs nothing
    when the numpy path is selected.
    """
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def deco(fn):
        return fn

    return deco

"""Backend selection for the Levinson kernel.

The compiled extension is used when it imports; setting the environment
variable ``FHT_PURE_PYTHON=1`` forces the NumPy fallback.
"""
import os

import numpy as np

from . import _levinson_py

BACKEND = "python"
_compiled = None
if os.environ.get("FHT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _levinson as _compiled  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _compiled = None


def levinson(f, n, extended=False, backend=None):
    """Dispatch to the selected kernel; ``extended`` uses long double."""
    if extended:
        return _levinson_py.levinson(f, n, dtype=np.clongdouble)
    use = backend or BACKEND
    if use == "cython":
        if _compiled is None:
            raise RuntimeError("compiled Levinson kernel is not available")
        return _compiled.levinson(f, n)
    return _levinson_py.levinson(f, n)

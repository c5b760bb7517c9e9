"""Select the compiled kernels when importable, else the pure-Python ones.

Set ``SNOWDYN_PURE=1`` to force the fallback.
"""

import os

from . import _pykernels as pykernels

if os.environ.get("SNOWDYN_PURE"):
    kernels = pykernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = pykernels

BACKEND = kernels.BACKEND
STATUS_OK = pykernels.STATUS_OK
STATUS_NO_CONVERGENCE = pykernels.STATUS_NO_CONVERGENCE
STATUS_CRITICAL = pykernels.STATUS_CRITICAL


def kappa_batch(num, den, pts, j, tol, max_iter):
    """Row-wise kappa_tree; the compiled backend has a native batch loop."""
    if hasattr(kernels, "kappa_batch"):
        return kernels.kappa_batch(num, den, pts, j, tol, max_iter)
    import numpy as np

    out = [kernels.kappa_tree(num, den, a, b, j, tol, max_iter) for a, b in pts]
    return (
        np.array([o[0] for o in out], dtype=float),
        np.array([o[1] for o in out], dtype=np.int64),
        np.array([o[2] for o in out], dtype=np.int32),
    )

"""Backend selection for the hot kernels.

The compiled extension ``fnls._ckernels`` is used when it imports; otherwise
the numpy implementations in ``fnls._pykernels`` are used.  Setting
``FNLS_PURE_PYTHON=1`` forces the fallback.
"""
import os

import numpy as np

from . import _pykernels

_compiled = None
if not os.environ.get("FNLS_PURE_PYTHON"):
    try:
        from . import _ckernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if _compiled is not None else "python"


def _impl(backend):
    return BACKENDS[backend or BACKEND]


def cell_convolve(f, g, W, backend=None):
    f = np.ascontiguousarray(f, dtype=np.complex128)
    g = np.ascontiguousarray(g, dtype=np.complex128)
    W = np.ascontiguousarray(W, dtype=np.float64)
    return _impl(backend).cell_convolve(f, g, W)


def quad_rhs(c, w, backend=None):
    c = np.ascontiguousarray(c, dtype=np.complex128)
    w = np.ascontiguousarray(w, dtype=np.float64)
    return _impl(backend).quad_rhs(c, w)


def lawson_rk4(c0, lin, w, h, nsteps, keep=None, backend=None):
    """Advance ``c' = lin * c + quad_rhs(c, w)`` by ``nsteps`` steps of size ``h``.

    Modes where ``keep`` is false are zeroed after every step.
    """
    c0 = np.ascontiguousarray(c0, dtype=np.complex128)
    lin = np.ascontiguousarray(np.broadcast_to(lin, c0.shape), dtype=np.complex128)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if keep is None:
        keep = np.ones(c0.shape, dtype=np.uint8)
    keep = np.ascontiguousarray(keep, dtype=np.uint8)
    return _impl(backend).lawson_rk4(c0, lin, w, float(h), int(nsteps), keep)

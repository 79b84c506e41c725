"""Select the fixed-point kernel at import time.

The compiled extension ``adasplit._kernels`` is used when it was built;
otherwise, or when ``ADASPLIT_BACKEND=python`` is set, the numpy fallback
``adasplit._pykernels`` runs instead.  Both expose the same ``iterate``.
"""

import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

CONVERGED, MAX_ITERS, DIVERGED = _pykernels.CONVERGED, _pykernels.MAX_ITERS, _pykernels.DIVERGED

_KERNELS = {"python": _pykernels}
if _compiled is not None:
    _KERNELS["compiled"] = _compiled


def available():
    return sorted(_KERNELS)


def name_of(module):
    return next(k for k, v in _KERNELS.items() if v is module)


def get(name=None):
    """Kernel module by name; None means the import-time default."""
    if name is None or name == "auto":
        return _KERNELS[DEFAULT]
    try:
        return _KERNELS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} not available (have {available()})") from None


_requested = os.environ.get("ADASPLIT_BACKEND", "auto")
if _requested == "auto":
    DEFAULT = "compiled" if _compiled is not None else "python"
elif _requested in _KERNELS:
    DEFAULT = _requested
else:
    log.warning("ADASPLIT_BACKEND=%s unavailable, using the python kernel", _requested)
    DEFAULT = "python"

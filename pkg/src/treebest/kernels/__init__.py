"""Min-sum kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time.  Set ``TREEBEST_NUMBA=0`` to force
the numpy path; it is also used when numba cannot be imported.
"""
import os
from types import ModuleType

from . import _numpy

_FLAG = os.environ.get("TREEBEST_NUMBA", "1").strip().lower()
USE_NUMBA = _FLAG not in {"0", "false", "no", "off"}

if USE_NUMBA:
    try:
        from . import _numba as _impl
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False
        _impl = _numpy
else:
    _impl = _numpy

BACKEND = "numba" if USE_NUMBA else "numpy"

map_pass = _impl.map_pass
layer_step = _impl.layer_step
accumulate_pass = _impl.accumulate_pass
klayer_step = _impl.klayer_step
combine_admissible = _impl.combine_admissible
trace = _impl.trace
naive_mbest = _impl.naive_mbest


def get_backend(name: str) -> ModuleType:
    """Return the kernel module ``"numba"`` or ``"numpy"`` regardless of the flag."""
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba

        return _numba
    raise ValueError(f"unknown backend {name!r}")

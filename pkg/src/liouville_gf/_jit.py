"""Kernel backend selection.

Set ``LIOUVILLE_GF_DISABLE_JIT=1`` to force the pure-numpy kernels, e.g. for
debugging under the Python interpreter or when numba is unavailable.
"""

import os

_FLAG = os.environ.get("LIOUVILLE_GF_DISABLE_JIT", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

JIT_ENABLED = HAVE_NUMBA and not _DISABLED

if JIT_ENABLED:
    from . import _numba_kernels as kernels
else:
    from . import _numpy_kernels as kernels

__all__ = ["HAVE_NUMBA", "JIT_ENABLED", "kernels"]

"""Kernel backend selection.

The compiled extension is preferred; the pure-Python twin is the fallback.
``SYMNMF_FORCE_PURE=1`` forces the fallback (used by the benchmark and by
tests that compare the two).
"""

import os

from . import _purekernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

if _ckernels is not None and not os.environ.get("SYMNMF_FORCE_PURE"):
    kernels = _ckernels
else:
    kernels = _purekernels

HAVE_COMPILED = _ckernels is not None
ACTIVE = "compiled" if kernels.COMPILED else "pure"


def get_backend(name):
    """Fetch a backend module by name ('compiled' or 'pure')."""
    if name == "pure":
        return _purekernels
    if name == "compiled":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")

"""Kernel selection: compiled extension when available, numpy otherwise.

The choice is made once at import and can be forced with the
``QSDCSIM_MC_BACKEND`` environment variable ("compiled" or "numpy") or
per call via the ``backend=`` argument of run_campaign.
"""
from __future__ import annotations

import os
from typing import Callable, Optional, Tuple

from . import _kernel_numpy

try:
    from . import _kernel  # compiled extension, built by setup.py
except ImportError:  # pragma: no cover - depends on the build environment
    _kernel = None

HAVE_COMPILED = _kernel is not None

_ENV_VAR = "QSDCSIM_MC_BACKEND"


def get_kernel(backend: Optional[str] = None) -> Tuple[Callable, str]:
    """Resolve a chunk-kernel callable and its backend name.

    ``backend`` may be "compiled", "numpy" or None (auto).  Requesting
    the compiled kernel when it is not built is an error; auto silently
    falls back to numpy.
    """
    choice = backend or os.environ.get(_ENV_VAR) or "auto"
    if choice == "numpy":
        return _kernel_numpy.run_chunk, "numpy"
    if choice == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel requested but the extension is not built")
        return _kernel.run_chunk, "compiled"
    if choice == "auto":
        if HAVE_COMPILED:
            return _kernel.run_chunk, "compiled"
        return _kernel_numpy.run_chunk, "numpy"
    raise ValueError(f"unknown backend {choice!r}")

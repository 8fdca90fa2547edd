"""Compute-backend selection for the hot numeric kernels.

The environment variable ``EVCLT_BACKEND`` picks the implementation:

* ``auto`` (default) -- use numba-compiled kernels when numba imports,
  otherwise fall back to pure numpy,
* ``numba``          -- require the numba kernels, error if unavailable,
* ``numpy``          -- force the pure-numpy reference path.

The choice is resolved once at import time; a single process never mixes
backends, which keeps run outputs bit-reproducible.
"""

from __future__ import annotations

import os

from .errors import BackendError

ENV_VAR = "EVCLT_BACKEND"
_CHOICES = ("auto", "numba", "numpy")


def _resolve() -> str:
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice not in _CHOICES:
        raise BackendError(
            f"{ENV_VAR}={choice!r} is not one of {_CHOICES}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise BackendError(
                f"{ENV_VAR}=numba requested but numba is not importable"
            ) from None
        return "numpy"
    return "numba"


BACKEND: str = _resolve()


def active_backend() -> str:
    """Name of the kernel backend resolved for this process."""
    return BACKEND

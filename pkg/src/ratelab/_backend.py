"""Kernel backend selection.

The hot loops in :mod:`ratelab.kernels` are written once in numpy-compatible
form. The environment variable ``RATELAB_BACKEND`` decides how they execute:

* ``numba`` - compile each kernel with ``numba.njit`` (error if numba is
  missing)
* ``numpy`` - run the identical source interpreted, numpy doing the array work
* ``auto``  - numba when importable, numpy otherwise (default)

The variable is read once at import time; ``ratelab.bench`` builds both
variants explicitly to compare them.
"""

from __future__ import annotations

import os

ENV_VAR = "RATELAB_BACKEND"
_VALID = ("auto", "numba", "numpy")


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def resolve_backend(name: str | None = None) -> str:
    """Map an env-style backend name to the concrete backend to use."""
    if name is None:
        name = os.environ.get(ENV_VAR, "auto")
    name = name.strip().lower()
    if name not in _VALID:
        raise ValueError(
            f"unknown backend {name!r} for {ENV_VAR}; expected one of {_VALID}"
        )
    if name == "numpy":
        return "numpy"
    if name == "numba":
        if not numba_available():
            raise RuntimeError(f"{ENV_VAR}=numba but numba is not importable")
        return "numba"
    return "numba" if numba_available() else "numpy"


ACTIVE_BACKEND = resolve_backend()


def jit_wrapper(use_numba: bool):
    """Return the decorator applied to kernel sources for the chosen mode."""
    if use_numba:
        import numba

        return numba.njit(cache=True)

    def identity(fn):
        return fn

    return identity

"""Backend dispatch for the hot kernels.

Two interchangeable lanes provide ``conv2d_forward``, ``conv2d_backward``
and ``bp_decode_batch``:

* ``cython`` -- compiled extension (:mod:`linkforge.kernels._core`), built
  when a C toolchain is available at install time;
* ``numpy`` -- pure-numpy fallback (:mod:`linkforge.kernels.numpy_backend`).

The active lane is chosen at import time from the ``LINKFORGE_BACKEND``
environment variable: ``auto`` (default) prefers the compiled lane and
falls back to numpy, while ``cython`` / ``numpy`` force a lane (forcing
``cython`` raises if the extension is missing).  ``BACKEND`` names the
active lane; ``available_backends()`` / ``get_backend(name)`` expose every
built lane so tests and benchmarks can compare them.
"""

import os
from types import ModuleType

from . import numpy_backend

_LANES: dict[str, ModuleType] = {"numpy": numpy_backend}

try:
    from . import _core
except ImportError:
    _core = None
else:
    _LANES["cython"] = _core

_requested = os.environ.get("LINKFORGE_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "cython", "numpy"):
    raise ValueError(
        f"LINKFORGE_BACKEND must be 'auto', 'cython' or 'numpy', got {_requested!r}"
    )
if _requested == "auto":
    BACKEND = "cython" if "cython" in _LANES else "numpy"
elif _requested not in _LANES:
    raise ImportError(
        "LINKFORGE_BACKEND=cython but the compiled extension is not available; "
        "reinstall with a C toolchain or set LINKFORGE_BACKEND=numpy"
    )
else:
    BACKEND = _requested

_active = _LANES[BACKEND]

conv2d_forward = _active.conv2d_forward
conv2d_backward = _active.conv2d_backward
bp_decode_batch = _active.bp_decode_batch


def available_backends() -> tuple[str, ...]:
    """Names of every lane importable in this installation."""
    return tuple(sorted(_LANES))


def get_backend(name: str) -> ModuleType:
    """Return the named lane module (for cross-lane tests and benchmarks)."""
    try:
        return _LANES[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; built: {sorted(_LANES)}") from None

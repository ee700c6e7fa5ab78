"""Kernel backend selection.

The compiled Cython extension is preferred; the pure NumPy fallback is
used when the extension is unavailable or when the environment variable
``PUSHSUM_RATE_PURE`` is set to a truthy value. ``BACKEND`` records which
implementation is active.
"""

from __future__ import annotations

import os

from . import _pure

_FORCE_PURE = os.environ.get("PUSHSUM_RATE_PURE", "").strip().lower() in {
    "1",
    "true",
    "yes",
    "on",
}

if _FORCE_PURE:
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # extension not built on this platform
        _impl = _pure
        BACKEND = "pure"

jacobi_eigh = _impl.jacobi_eigh
broadcast_steps = _impl.broadcast_steps
unicast_steps = _impl.unicast_steps


def get_backend(name: str):
    """Return the kernel module for ``name`` in {'compiled', 'pure'}.

    Raises ImportError when the compiled extension was not built.
    """
    if name == "pure":
        return _pure
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")

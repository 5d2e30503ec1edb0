"""Tridiagonal kernels with import-time backend selection.

The compiled Cython core (``_core``) is used when it has been built; otherwise
the pure-Python fallback is loaded.  Set ``DEGENCONTROL_BACKEND=python`` to
force the fallback even when the extension is available.

Exposed names: ``tridiag_eigh``, ``thomas_solve``, ``implicit_march`` and
``BACKEND`` (``"cython"`` or ``"python"``).
"""

import os

from . import _fallback

_forced = os.environ.get("DEGENCONTROL_BACKEND", "").strip().lower()

if _forced == "python":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _fallback
        BACKEND = "python"
    else:
        BACKEND = "cython"

tridiag_eigh = _impl.tridiag_eigh
thomas_solve = _impl.thomas_solve
implicit_march = _impl.implicit_march


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _fallback}
    try:
        from . import _core
    except ImportError:
        pass
    else:
        found["cython"] = _core
    return found


__all__ = ["BACKEND", "backends", "implicit_march", "thomas_solve", "tridiag_eigh"]

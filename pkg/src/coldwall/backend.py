"""Select the compiled kernels when available, the pure-Python twins otherwise.

Set ``COLDWALL_BACKEND=python`` to force the fallback (used by the tests and
the benchmark to compare both).
"""

from __future__ import annotations

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled


def get_backend(name: str | None = None):
    """Return the kernel module named ``name`` (default: env var, then best available)."""
    name = name or os.environ.get("COLDWALL_BACKEND") or ("compiled" if _compiled is not None else "python")
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def backend_name(module=None) -> str:
    module = module or get_backend()
    return "compiled" if module is _compiled and _compiled is not None else "python"

"""Per-step numerical kernels.

Two interchangeable implementations share one API:

* ``_ckernels`` -- compiled Cython extension (built by ``setup.py``),
* ``_pykernels`` -- pure numpy fallback.

The compiled one is selected at import when available; set
``ETLPV_PURE_PYTHON=1`` to force the fallback, or call :func:`use_backend`.
Every kernel works on all agents at once (leading axis ``N``) and each row is
computed independently of the others, so two calls with identical rows give
bit-identical results for those rows.
"""
from __future__ import annotations

import os

from . import _pykernels

_NAMES = ("blend_rows", "network_output", "network_step", "open_loop_step", "formation_error")

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKEND = ""


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _ckernels is not None else ("python",)


def use_backend(name: str) -> None:
    """Rebind the kernel functions to ``"cython"`` or ``"python"``."""
    global BACKEND
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        impl = _ckernels
    elif name == "python":
        impl = _pykernels
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    g = globals()
    for fn in _NAMES:
        g[fn] = getattr(impl, fn)
    BACKEND = name


if _ckernels is not None and os.environ.get("ETLPV_PURE_PYTHON", "") in ("", "0"):
    use_backend("cython")
else:
    use_backend("python")

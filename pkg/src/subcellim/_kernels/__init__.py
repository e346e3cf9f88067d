"""Hot-loop kernels in two interchangeable backends.

Both modules expose the same functions operating on the axis-processing
layout ``[E, L, n, C]`` (elements, transverse lines, nodes along the
processed axis, components).  ``numba_backend`` carries ``@njit`` loop
kernels; ``numpy_backend`` is the vectorized pure-numpy fallback.

The default backend is numba when importable; set ``SUBCELLIM_BACKEND=numpy``
(or ``numba``) to force a choice.
"""

import os
import warnings

from . import numpy_backend

_BACKENDS = {"numpy": numpy_backend}
_default_name = None


def _load_numba():
    if "numba" in _BACKENDS:
        return True
    try:
        from . import numba_backend
    except ImportError as exc:    # pragma: no cover - depends on environment
        warnings.warn(f"numba backend unavailable ({exc}); falling back to numpy")
        return False
    _BACKENDS["numba"] = numba_backend
    return True


def default_backend_name():
    global _default_name
    if _default_name is None:
        requested = os.environ.get("SUBCELLIM_BACKEND", "").strip().lower()
        if requested == "numpy":
            _default_name = "numpy"
        elif requested == "numba":
            if not _load_numba():
                raise RuntimeError("SUBCELLIM_BACKEND=numba but numba is not importable")
            _default_name = "numba"
        elif requested in ("", "auto"):
            _default_name = "numba" if _load_numba() else "numpy"
        else:
            raise RuntimeError(f"unknown SUBCELLIM_BACKEND value {requested!r}")
    return _default_name


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: env selection)."""
    if name is None or name == "auto":
        name = default_backend_name()
    if name == "numba":
        _load_numba()
    try:
        return _BACKENDS[name]
    except KeyError:
        raise RuntimeError(f"unknown backend {name!r}") from None

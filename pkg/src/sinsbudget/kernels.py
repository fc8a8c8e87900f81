"""
Backend selection for the propagation kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is used. :func:`use_backend` switches explicitly (tests and the
benchmark compare both).
"""

from __future__ import annotations

import logging
from types import ModuleType

from . import _kernels_py

log = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active: ModuleType = _compiled if _compiled is not None else _kernels_py


def available_backends() -> list[str]:
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return names


def backend() -> str:
    return "compiled" if _active is _compiled else "python"


def use_backend(name: str) -> None:
    """Select ``"compiled"`` or ``"python"`` kernels for subsequent calls."""
    global _active
    if name == "python":
        _active = _kernels_py
    elif name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; reinstall the package")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    log.debug("kernel backend: %s", name)


def congruence_batch(phi, parts):
    return _active.congruence_batch(phi, parts)


def transition_batch(phi, states, inplace=False):
    return _active.transition_batch(phi, states, inplace)

"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``MPSVC_BACKEND=python`` is set, the pure-Python
implementation is used.  ``set_backend`` switches at runtime (benchmarks and
parity tests use it).
"""

from __future__ import annotations

import os
from array import array
from typing import Iterable

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_INT64_LIMIT = 1 << 62

backward_probe = _kernels_py.backward_probe
backward_commit = _kernels_py.backward_commit
_best_assignment = _kernels_py.best_assignment
BACKEND = "python"


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _compiled is not None else [])


def set_backend(name: str) -> None:
    """Select ``"compiled"`` or ``"python"`` kernels for this process."""
    global backward_probe, backward_commit, _best_assignment, BACKEND
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        mod = _compiled
    elif name == "python":
        mod = _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    backward_probe = mod.backward_probe
    backward_commit = mod.backward_commit
    _best_assignment = mod.best_assignment
    BACKEND = name


def make_row(values: Iterable[int]) -> array:
    """Residual row with a leading zero sentinel for slot 0."""
    row = array("q", [0])
    row.extend(int(v) for v in values)
    return row


def best_assignment(opt_bytes, opt_value, opt_start, caps, links):
    """Dispatch to the active backend, falling back to Python for big values."""
    if BACKEND == "compiled":
        bound = sum(abs(v) for v in opt_value)
        if bound < _INT64_LIMIT and max(opt_bytes, default=0) < _INT64_LIMIT:
            return _best_assignment(opt_bytes, opt_value, opt_start, caps, links)
        return _kernels_py.best_assignment(opt_bytes, opt_value, opt_start, caps, links)
    return _best_assignment(opt_bytes, opt_value, opt_start, caps, links)


if _compiled is not None and os.environ.get("MPSVC_BACKEND", "").lower() != "python":
    set_backend("compiled")

"""Hot numeric kernels with a selectable backend.

Two implementations exist: a pure-numpy path built on BLAS GEMMs (default)
and a numba ``@njit`` path whose ``prange`` loops pay off on many-core
machines. Select with the ``CSRDA_KERNEL_BACKEND`` environment variable
(``numpy`` or ``numba``) before import, or at runtime via ``set_backend``.
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os
import warnings

from . import numpy_backend

_impl = numpy_backend
_name = "numpy"


def set_backend(name: str) -> None:
    """Switch the active kernel backend ('numpy' or 'numba')."""
    global _impl, _name
    if name == "numpy":
        _impl, _name = numpy_backend, "numpy"
    elif name == "numba":
        from . import numba_backend

        _impl, _name = numba_backend, "numba"
    else:
        raise ValueError(f"unknown kernel backend {name!r}")


def active_backend() -> str:
    return _name


def conv3x3_forward(x, w, bias):
    return _impl.conv3x3_forward(x, w, bias)


def conv3x3_weight_grad(x, dy):
    return _impl.conv3x3_weight_grad(x, dy)


def nearest_foreground(gt):
    return _impl.nearest_foreground(gt)


_env = os.environ.get("CSRDA_KERNEL_BACKEND", "numpy").lower()
if _env != "numpy":
    try:
        set_backend(_env)
    except Exception as exc:  # missing numba, bad name: fall back, keep running
        warnings.warn(f"kernel backend {_env!r} unavailable ({exc}); using numpy")

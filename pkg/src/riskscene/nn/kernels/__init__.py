"""Backend dispatch for the convolution kernels.

The jitted path is the default whenever numba imports cleanly. Set
``RISKSCENE_NUMBA=0`` (or ``false``/``no``/``off``) before import to force
the pure-numpy fallback; both backends produce matching results to rounding
error. ``benchmarks/bench_kernels.py`` compares their throughput.
"""

import os

_flag = os.environ.get("RISKSCENE_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

if _want_numba:
    try:
        from . import numba_impl as _impl

        BACKEND = "numba"
    except ImportError:
        from . import numpy_impl as _impl

        BACKEND = "numpy"
else:
    from . import numpy_impl as _impl

    BACKEND = "numpy"

conv1d_forward = _impl.conv1d_forward
conv1d_backward_input = _impl.conv1d_backward_input
conv1d_backward_weight = _impl.conv1d_backward_weight
conv2d_forward = _impl.conv2d_forward
conv2d_backward_input = _impl.conv2d_backward_input
conv2d_backward_weight = _impl.conv2d_backward_weight

__all__ = [
    "BACKEND",
    "conv1d_forward",
    "conv1d_backward_input",
    "conv1d_backward_weight",
    "conv2d_forward",
    "conv2d_backward_input",
    "conv2d_backward_weight",
]

"""Hot inner loops with a numba backend and a pure-numpy fallback.

The numba backend is used when numba imports cleanly and the environment
variable ``CCNET_DISABLE_JIT`` is unset or ``0``. Both backends expose the
same functions; ``backend`` names the one in use.
"""
import os

from . import _numpy
from ._numpy import (  # noqa: F401
    ACT_IDENTITY, ACT_RELU, ACT_TANH, REG_L1, REG_L2, REG_NONE,
)


def _want_jit():
    return os.environ.get("CCNET_DISABLE_JIT", "0").strip().lower() in ("", "0", "false", "no")


backend = "numpy"
_impl = _numpy
if _want_jit():
    try:
        from . import _numba as _impl  # noqa: F811
        backend = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _impl = _numpy

path_nodes = _impl.path_nodes
gather_weights = _impl.gather_weights
lazy_catch_up = _impl.lazy_catch_up
lazy_step = _impl.lazy_step
train_epoch = _impl.train_epoch


def get_backend(name):
    """Return the kernel module for ``"numpy"`` or ``"numba"``."""
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba
        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")

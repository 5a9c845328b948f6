"""Backend selector for the hot loops.

Prefers the compiled extension `_fastloops`; falls back to the pure-Python
mirror `_pyloops` when the extension is unavailable or when the environment
variable REFPRIOR_PURE_PYTHON is set to a non-empty value other than "0".
`BACKEND` names the active implementation.
"""

import os

from . import _pyloops

if os.environ.get("REFPRIOR_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _pyloops
    BACKEND = "python"
else:
    try:
        from . import _fastloops as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pyloops
        BACKEND = "python"

twopiece_loglik_sum = _impl.twopiece_loglik_sum
twopiece_power_chain = _impl.twopiece_power_chain

__all__ = ["BACKEND", "twopiece_loglik_sum", "twopiece_power_chain"]

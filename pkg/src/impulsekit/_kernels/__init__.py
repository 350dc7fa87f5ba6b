"""Execution backend selection.

The compiled Cython kernel is used when it imported successfully; otherwise
the pure-Python fallback takes over.  Set IMPULSEKIT_BACKEND=python to force
the fallback (useful for benchmarking and debugging).
"""

import os

from . import fallback
from .fallback import (  # re-exported so callers have one home for these
    ERR_DIV_ZERO,
    ERR_LN_DOMAIN,
    ERR_MESSAGES,
    ERR_NONE,
    ERR_OVERFLOW,
    ERR_POW_DOMAIN,
    ERR_SQRT_DOMAIN,
    OP_ABS,
    OP_ADD,
    OP_CONST,
    OP_COS,
    OP_DIV,
    OP_EXP,
    OP_LN,
    OP_LOADU,
    OP_LOADX,
    OP_MAX,
    OP_MIN,
    OP_MUL,
    OP_NEG,
    OP_POW,
    OP_SIGN,
    OP_SIN,
    OP_SQRT,
    OP_SUB,
)

_forced = os.environ.get("IMPULSEKIT_BACKEND", "").strip().lower()
if _forced in ("python", "fallback", "pure"):
    _impl = fallback
elif _forced in ("", "auto", "compiled", "c"):
    try:
        from . import _speedups as _impl
    except ImportError:
        if _forced in ("compiled", "c"):
            raise
        _impl = fallback
else:
    raise RuntimeError("unrecognized IMPULSEKIT_BACKEND value: %r" % _forced)

eval_one = _impl.eval_one
eval_many = _impl.eval_many
rk4_segment = _impl.rk4_segment


def backend_name():
    """Name of the active backend: "compiled" or "python"."""
    return _impl.BACKEND_NAME

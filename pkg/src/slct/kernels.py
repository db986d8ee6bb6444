"""Backend selection for the quadrature kernels.

The compiled extension is used when it was built; otherwise, or when
``SLCT_PURE_PYTHON`` is set to a non-empty value other than ``0``, the numpy
fallback is used.  Both expose ``relu_forward``, ``relu_sq_error``,
``softmax_forward`` and ``softmax_sq_error``.
"""
import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _fallback}
if _compiled is not None:
    BACKENDS["cython"] = _compiled


def _pick():
    if os.environ.get("SLCT_PURE_PYTHON", "0") not in ("", "0") or _compiled is None:
        return "python"
    return "cython"


BACKEND = _pick()
impl = BACKENDS[BACKEND]


def get(name=None):
    """Kernel module for ``name`` (default: the one selected at import)."""
    if name is None:
        return impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}") from None

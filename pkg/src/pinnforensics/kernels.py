"""Backend selection for the hot loops.

The compiled extension is used when it imports cleanly; otherwise, or when
the environment variable ``PINNFORENSICS_PURE`` is set to a non-empty value
other than ``0``, the numpy fallback is used. ``BACKEND`` names the active
choice and is recorded in every weight dump.
"""

import os

import numpy as np

from . import _fallback

_force_pure = os.environ.get("PINNFORENSICS_PURE", "") not in ("", "0")

_compiled = None
if not _force_pure:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _fallback
BACKEND = "cython" if _compiled is not None else "numpy"


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def tanh_dual_forward(a, impl=None):
    """tanh of a stacked ``(value, d/dx, d/dt, d2/dx2)`` pre-activation.

    ``a`` has shape ``(4, ...)``; the result has the same shape and holds
    ``(y, y_x, y_t, y_xx)``.
    """
    impl = impl or _impl
    a = _c(a)
    y = np.empty_like(a)
    np.tanh(a[0], out=y[0])
    flat = [v.reshape(-1) for v in (y[0], a[1], a[2], a[3], y[1], y[2], y[3])]
    impl.tanh_dual_forward(*flat)
    return y


def tanh_dual_backward(a, y, g, impl=None):
    """Pull gradients on the four tanh output slots back to the pre-activation slots."""
    impl = impl or _impl
    a, y, g = _c(a), _c(y), _c(g)
    ga = np.empty_like(g)
    flat = [v.reshape(-1) for v in (y[0], a[1], a[2], a[3], g[0], g[1], g[2], g[3], ga[0], ga[1], ga[2], ga[3])]
    impl.tanh_dual_backward(*flat)
    return ga


def burgers_rhs(u, dx, nu, advect=True, impl=None):
    impl = impl or _impl
    u = _c(u)
    out = np.empty_like(u)
    impl.burgers_rhs(u, out, float(dx), float(nu), bool(advect))
    return out


def frozen_field_rhs(u, field, dx, nu, impl=None):
    impl = impl or _impl
    u = _c(u)
    out = np.empty_like(u)
    impl.frozen_field_rhs(u, _c(field), out, float(dx), float(nu))
    return out


def band_profile(m, impl=None):
    """Squared-entry mass per diagonal offset ``|i - j|``, plain and periodic."""
    impl = impl or _impl
    m = _c(m)
    n = m.shape[0]
    plain = np.empty(n)
    periodic = np.empty(n)
    impl.band_profile(m, plain, periodic)
    return plain, periodic

"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures, same output buffers. Used when the extension is not built
or when ``PINNFORENSICS_PURE=1`` is set.
"""

import numpy as np


def tanh_dual_forward(y, ax, at, axx, yx, yt, yxx):
    s = 1.0 - y * y
    sp = -2.0 * y * s
    np.multiply(s, ax, out=yx)
    np.multiply(s, at, out=yt)
    yxx[...] = s * axx + sp * ax * ax


def tanh_dual_backward(y, ax, at, axx, gy, gyx, gyt, gyxx, ga, gax, gat, gaxx):
    s = 1.0 - y * y
    sp = -2.0 * y * s
    spp = -2.0 * s * s + 4.0 * y * y * s
    ga[...] = gy * s + (gyx * ax + gyt * at + gyxx * axx) * sp + gyxx * ax * ax * spp
    gax[...] = gyx * s + 2.0 * gyxx * sp * ax
    np.multiply(gyt, s, out=gat)
    np.multiply(gyxx, s, out=gaxx)


def burgers_rhs(u, out, dx, nu, advect):
    up = np.roll(u, -1)
    um = np.roll(u, 1)
    out[...] = nu * (up - 2.0 * u + um) / (dx * dx)
    if advect:
        out -= (0.5 * up * up - 0.5 * um * um) * (0.5 / dx)


def frozen_field_rhs(u, field, out, dx, nu):
    up = np.roll(u, -1)
    um = np.roll(u, 1)
    out[...] = nu * (up - 2.0 * u + um) / (dx * dx) - field * (up - um) * (0.5 / dx)


def band_profile(m, plain, periodic):
    n = m.shape[0]
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :]).ravel()
    dw = np.minimum(d, n - d)
    sq = (m * m).ravel()
    plain[...] = np.bincount(d, weights=sq, minlength=n)
    periodic[...] = np.bincount(dw, weights=sq, minlength=n)

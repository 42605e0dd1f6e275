# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Each function mirrors one in ``_fallback.py`` and writes into caller-owned
buffers. All arrays are 1-D (or 2-D for ``band_profile``), float64 and
C-contiguous; the Python wrappers in ``kernels.py`` enforce that.
"""

ctypedef double f64


def tanh_dual_forward(const f64[::1] y, const f64[::1] ax, const f64[::1] at,
                      const f64[::1] axx, f64[::1] yx, f64[::1] yt, f64[::1] yxx):
    # y = tanh(a) is computed by the caller (numpy's vectorized tanh).
    cdef Py_ssize_t i, n = y.shape[0]
    cdef f64 v, s, sp, dx
    with nogil:
        for i in range(n):
            v = y[i]
            s = 1.0 - v * v
            sp = -2.0 * v * s
            dx = ax[i]
            yx[i] = s * dx
            yt[i] = s * at[i]
            yxx[i] = s * axx[i] + sp * dx * dx


def tanh_dual_backward(const f64[::1] y, const f64[::1] ax, const f64[::1] at,
                       const f64[::1] axx, const f64[::1] gy, const f64[::1] gyx,
                       const f64[::1] gyt, const f64[::1] gyxx, f64[::1] ga,
                       f64[::1] gax, f64[::1] gat, f64[::1] gaxx):
    cdef Py_ssize_t i, n = y.shape[0]
    cdef f64 v, s, sp, spp, dx, gxx
    with nogil:
        for i in range(n):
            v = y[i]
            s = 1.0 - v * v
            sp = -2.0 * v * s
            spp = -2.0 * s * s + 4.0 * v * v * s
            dx = ax[i]
            gxx = gyxx[i]
            ga[i] = (gy[i] * s + (gyx[i] * dx + gyt[i] * at[i] + gxx * axx[i]) * sp
                     + gxx * dx * dx * spp)
            gax[i] = gyx[i] * s + 2.0 * gxx * sp * dx
            gat[i] = gyt[i] * s
            gaxx[i] = gxx * s


def burgers_rhs(const f64[::1] u, f64[::1] out, f64 dx, f64 nu, bint advect):
    cdef Py_ssize_t i, im, ip, n = u.shape[0]
    cdef f64 inv2dx = 0.5 / dx
    cdef f64 invdx2 = 1.0 / (dx * dx)
    cdef f64 fl, fr
    with nogil:
        for i in range(n):
            im = i - 1 if i > 0 else n - 1
            ip = i + 1 if i < n - 1 else 0
            out[i] = nu * (u[ip] - 2.0 * u[i] + u[im]) * invdx2
            if advect:
                fl = 0.5 * u[im] * u[im]
                fr = 0.5 * u[ip] * u[ip]
                out[i] -= (fr - fl) * inv2dx


def frozen_field_rhs(const f64[::1] u, const f64[::1] field, f64[::1] out,
                     f64 dx, f64 nu):
    cdef Py_ssize_t i, im, ip, n = u.shape[0]
    cdef f64 inv2dx = 0.5 / dx
    cdef f64 invdx2 = 1.0 / (dx * dx)
    with nogil:
        for i in range(n):
            im = i - 1 if i > 0 else n - 1
            ip = i + 1 if i < n - 1 else 0
            out[i] = (nu * (u[ip] - 2.0 * u[i] + u[im]) * invdx2
                      - field[i] * (u[ip] - u[im]) * inv2dx)


def band_profile(const f64[:, ::1] m, f64[::1] plain, f64[::1] periodic):
    """Squared-entry mass per diagonal offset, plain and wrapped."""
    cdef Py_ssize_t i, j, d, dw, n = m.shape[0]
    cdef f64 v
    with nogil:
        for d in range(n):
            plain[d] = 0.0
            periodic[d] = 0.0
        for i in range(n):
            for j in range(n):
                v = m[i, j] * m[i, j]
                d = i - j if i >= j else j - i
                dw = n - d if n - d < d else d
                plain[d] += v
                periodic[dw] += v

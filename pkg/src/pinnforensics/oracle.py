"""Finite-difference reference solver for periodic viscous Burgers.

Second-order central differences on the conservative flux ``(u^2/2)_x`` and
on ``u_xx``, Heun (RK2) time stepping, periodic grid ``x_i = x_min + i dx``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateInputError, GridMismatchError, InstabilityError


@dataclass(frozen=True)
class FieldSnapshot:
    t: float
    grid: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        u = np.asarray(self.u, dtype=np.float64)
        if grid.shape != u.shape or grid.ndim != 1:
            raise GridMismatchError(f"grid {grid.shape} and values {u.shape} differ")
        if grid.size > 1:
            step = np.diff(grid)
            if np.any(step <= 0) or np.ptp(step) > 1e-9 * max(abs(step[0]), 1e-300) + 1e-12:
                raise GridMismatchError("grid must be uniform and increasing")
        if not np.all(np.isfinite(u)):
            raise DegenerateInputError("snapshot holds non-finite values")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "u", u)


def periodic_grid(n_x, x_min=0.0, x_max=1.0):
    return x_min + (x_max - x_min) * np.arange(n_x) / n_x


def stable_dt(u, dx, nu, cfl, advect=True):
    """``cfl`` times the smaller of the advective and diffusive step limits."""
    limits = [dx * dx / (2.0 * nu)] if nu > 0 else []
    umax = float(np.max(np.abs(u))) if advect else 0.0
    if umax > 0:
        limits.append(dx / umax)
    if not limits:
        return cfl * dx
    return cfl * min(limits)


def solve_burgers(
    nu,
    n_x,
    cfl,
    t_end,
    u0=None,
    times=None,
    advect=True,
    frozen_field=None,
    x_min=0.0,
    x_max=1.0,
):
    """Integrate to ``t_end`` and return snapshots at the requested times.

    ``times`` defaults to ``[0, t_end]``. ``advect=False`` drops the
    nonlinear term (pure heat equation). ``frozen_field`` replaces ``u`` in
    the advection term by a fixed velocity array, giving the linear problem
    ``u_t = -a(x) u_x + nu u_xx``.

    Raises :class:`InstabilityError` if ``max|u|`` grows past ten times its
    initial value.
    """
    if n_x < 64:
        raise ValueError(f"n_x must be at least 64, got {n_x}")
    if not nu > 0:
        raise ValueError("nu must be positive")
    if not 0 < cfl <= 0.5:
        raise ValueError("cfl must lie in (0, 0.5]")
    if u0 is None:
        u0 = lambda x: np.sin(2.0 * np.pi * x)  # noqa: E731
    grid = periodic_grid(n_x, x_min, x_max)
    dx = (x_max - x_min) / n_x
    u = np.asarray(u0(grid), dtype=np.float64).copy()
    times = sorted(set([0.0, float(t_end)] if times is None else [float(s) for s in times]))
    if times[-1] > t_end or times[0] < 0:
        raise ValueError("snapshot times must lie in [0, t_end]")

    if frozen_field is not None:
        field = np.asarray(frozen_field(grid) if callable(frozen_field) else frozen_field, dtype=np.float64)

        def rhs(v):
            return kernels.frozen_field_rhs(v, field, dx, nu)

        speed = field
    else:

        def rhs(v):
            return kernels.burgers_rhs(v, dx, nu, advect)

        speed = None

    bound = 10.0 * max(float(np.max(np.abs(u))), 1e-300)
    snaps = []
    t = 0.0
    for target in times:
        while t < target:
            vel = u if speed is None else speed
            dt = stable_dt(vel, dx, nu, cfl, advect or speed is not None)
            if t + dt >= target or target - (t + dt) < 1e-12 * max(target, 1.0):
                dt = target - t
            k1 = rhs(u)
            k2 = rhs(u + dt * k1)
            u = u + 0.5 * dt * (k1 + k2)
            t = target if dt == target - t else t + dt
            if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > bound:
                raise InstabilityError(f"solution blew up at t={t:.6g}; reduce cfl (now {cfl})")
        snaps.append(FieldSnapshot(target, grid.copy(), u.copy()))
    return snaps


def snapshot_at(snaps, t):
    for s in snaps:
        if abs(s.t - t) <= 1e-12:
            return s
    raise KeyError(f"no snapshot at t={t}")


def relative_l2_error(a: FieldSnapshot, b: FieldSnapshot) -> float:
    """``||a - b|| / ||b||`` on a shared grid."""
    if a.grid.shape != b.grid.shape or not np.allclose(a.grid, b.grid, rtol=0, atol=1e-12):
        raise GridMismatchError("snapshots are on different grids")
    denom = np.linalg.norm(b.u)
    if denom == 0.0:
        raise DegenerateInputError("reference snapshot is identically zero")
    return float(np.linalg.norm(a.u - b.u) / denom)


def restrict(snap: FieldSnapshot, factor: int) -> FieldSnapshot:
    """Every ``factor``-th node of a periodic snapshot (coarse-grid injection)."""
    return FieldSnapshot(snap.t, snap.grid[::factor], snap.u[::factor])


def self_convergence_order(nu, t, sizes=(256, 512, 1024), cfl=0.4, u0=None):
    """Observed order from three grids refined by 2, compared on the coarse nodes."""
    n0, n1, n2 = sizes
    if n1 != 2 * n0 or n2 != 2 * n1:
        raise ValueError("sizes must double")
    s = [snapshot_at(solve_burgers(nu, n, cfl, t, u0), t) for n in sizes]
    e01 = np.max(np.abs(s[0].u - restrict(s[1], 2).u))
    e12 = np.max(np.abs(restrict(s[1], 2).u - restrict(s[2], 4).u))
    return float(np.log2(e01 / e12))

"""Structured counterparts to trained weights.

Gaussian-derivative kernels and the Burgers weight kernel on a periodic grid,
the relaxation iteration ``z' = (1 - omega) z + omega f(W z - b)``, and
Boltzmann-weighted path composition across layers.

Kernels act by convolution, ``(K f)(x) = int K(r) f(x - r) dr``; with that
orientation the first-derivative kernel ``W1(r) = -(r/h^2) g_h(r)`` yields
``+f'(x)`` and the Burgers kernel ``-u W1 + nu W2`` yields
``-u f_x + nu f_xx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InstabilityError, UnderResolvedError
from .nnet import layer_forward, normalize_layer
from .oracle import periodic_grid

TRUNCATION = 8.0  # kernels are cut off at |r| > TRUNCATION * h


def gaussian_kernel(r, h):
    """``g_h(r) = exp(-r^2 / 2h^2) / (sqrt(2 pi) h)``."""
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    r = np.asarray(r, dtype=np.float64)
    return np.exp(-0.5 * (r / h) ** 2) / (math.sqrt(2.0 * math.pi) * h)


def derivative_kernels(r, h):
    """``(W1, W2)`` at finite ``h``: first- and second-derivative kernels.

    Signs assume the convolution orientation ``int K(r) f(x - r) dr`` used
    by :func:`convolve`, so that ``W1`` yields ``+f'`` and ``W2`` yields
    ``f''``. Against ``f(x + r)`` the ``W1`` result flips sign.
    """
    g = gaussian_kernel(r, h)
    r = np.asarray(r, dtype=np.float64)
    w1 = -(r / h**2) * g
    w2 = ((r * r - h * h) / h**4) * g
    return w1, w2


def convolve(kernel, f, x, h, n_points=4001):
    """Trapezoid quadrature of ``int K(r) f(x - r) dr`` over ``|r| <= 8h``."""
    r = np.linspace(-TRUNCATION * h, TRUNCATION * h, n_points)
    return float(np.trapezoid(kernel(r) * f(x - r), r))


@dataclass(frozen=True)
class KernelSpec:
    h: float
    n: int
    nu: float
    u_field: np.ndarray | None = None
    x_min: float = 0.0
    x_max: float = 1.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.n < 2:
            raise ValueError("grid needs at least two nodes")
        if self.u_field is not None:
            u = np.asarray(self.u_field, dtype=np.float64)
            if u.shape != (self.n,):
                raise ValueError(f"u_field has shape {u.shape}, grid has {self.n} nodes")
            object.__setattr__(self, "u_field", u)

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.n

    @property
    def grid(self):
        return periodic_grid(self.n, self.x_min, self.x_max)

    @property
    def field(self):
        return np.zeros(self.n) if self.u_field is None else self.u_field


def _offset_matrix(n, dx, length):
    # Signed separations x_i - x_j reduced to the nearest periodic image,
    # computed from integer offsets so that r_ji == -r_ij exactly.
    idx = np.arange(n)
    d = (idx[:, None] - idx[None, :]) % n
    d = np.where(d > n // 2, d - n, d)
    return d * dx


def kernel_matrices(spec: KernelSpec):
    """Quadrature matrices of ``W1`` and ``W2`` on the periodic grid."""
    if spec.h < 2.0 * spec.dx * (1 - 1e-12):
        raise UnderResolvedError(f"h={spec.h:g} is below 2*dx={2 * spec.dx:g}")
    length = spec.x_max - spec.x_min
    r = _offset_matrix(spec.n, spec.dx, length)
    w1 = np.zeros_like(r)
    w2 = np.zeros_like(r)
    # nearest image plus one image either side, each cut off at 8h
    for shift in (-length, 0.0, length):
        rr = r + shift
        a, b = derivative_kernels(rr, spec.h)
        keep = np.abs(rr) <= TRUNCATION * spec.h
        w1 += np.where(keep, a, 0.0)
        w2 += np.where(keep, b, 0.0)
    return w1 * spec.dx, w2 * spec.dx


def burgers_kernel_matrix(spec: KernelSpec) -> np.ndarray:
    """Row ``i`` holds the quadrature weights of ``-u(x_i) W1 + nu W2``.

    ``M @ f`` approximates ``-u f_x + nu f_xx`` for smooth periodic ``f``
    with ``u`` the frozen external field.
    """
    w1, w2 = kernel_matrices(spec)
    return -spec.field[:, None] * w1 + spec.nu * w2


# --------------------------------------------------------------------------
# relaxation dynamics


@dataclass(frozen=True)
class RelaxationState:
    z: np.ndarray
    omega: float
    bias: np.ndarray | None = None
    activation: str = "identity"

    def __post_init__(self):
        if not 0 < self.omega <= 1:
            raise ValueError(f"omega must lie in (0, 1], got {self.omega}")
        z = np.asarray(self.z, dtype=np.float64)
        if not np.all(np.isfinite(z)):
            raise ValueError("state has non-finite entries")
        object.__setattr__(self, "z", z)
        b = np.zeros_like(z) if self.bias is None else np.asarray(self.bias, dtype=np.float64)
        if b.shape != z.shape:
            raise ValueError("bias and state shapes differ")
        object.__setattr__(self, "bias", b)


def attractor(state: RelaxationState, w) -> np.ndarray:
    """Convolve, shift by the bias, then apply the local nonlinearity."""
    return layer_forward(w, state.bias, state.z, state.activation)


def relaxation_step(state: RelaxationState, w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (state.z.shape[-1], state.z.shape[-1]):
        raise ValueError(f"weight shape {w.shape} does not match state length {state.z.shape[-1]}")
    om = state.omega
    return (1.0 - om) * state.z + om * attractor(state, w)


def simulate_relaxation(spec: KernelSpec, z0, dt, steps, omega=1.0, activation="identity", bias=None,
                        normalize=False):
    """Iterate the relaxation map with ``W = I + dt * M_Burgers``.

    With ``omega=1`` and the identity activation each step is explicit Euler
    for ``z_t = -u z_x + nu z_xx`` under the frozen field. ``normalize=True``
    rescales every iterate to the norm of ``z0``. Returns the trajectory,
    shape ``(steps + 1, n)``.
    """
    w = np.eye(spec.n) + dt * burgers_kernel_matrix(spec)
    z = np.asarray(z0, dtype=np.float64).copy()
    norm0 = float(np.linalg.norm(z))
    traj = np.empty((steps + 1, z.size))
    traj[0] = z
    for k in range(1, steps + 1):
        z = relaxation_step(RelaxationState(z, omega, bias, activation), w)
        if normalize and norm0 > 0:
            z = normalize_layer(z, norm0)
        norm = float(np.linalg.norm(z))
        if not np.isfinite(norm) or (norm0 > 0 and norm > 10.0 * norm0):
            raise InstabilityError(f"relaxation norm grew past 10x its initial value at step {k}")
        traj[k] = z
    return traj


# --------------------------------------------------------------------------
# paths


def path_count(n, depth) -> float:
    """``log10`` of the ``N**L`` input-to-output paths.

    For ``N = 10**3`` and ``L = 10**2`` this is 300. A figure of ``10**30``
    sometimes quoted for these sizes does not follow from ``N**L``.
    """
    if n < 1 or depth < 0:
        raise ValueError("need N >= 1 and L >= 0")
    return depth * math.log10(n)


def weight_count(n, depth) -> int:
    return n * n * depth


def boltzmann_transition(action, beta) -> np.ndarray:
    """Row-normalized Boltzmann factors ``exp(-beta S_ij) / Z_i``."""
    s = np.asarray(action, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("actions must be square matrices")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if beta == 0:
        return np.full(s.shape, 1.0 / s.shape[1])
    e = -beta * s
    e = np.exp(e - e.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def boltzmann_path_composition(actions, beta):
    """Per-hop transition matrices and their ordered product."""
    hops = [boltzmann_transition(s, beta) for s in actions]
    if not hops:
        raise ValueError("need at least one action layer")
    total = hops[0]
    for p in hops[1:]:
        if p.shape[0] != total.shape[1]:
            raise ValueError("action layers are not conformable")
        total = total @ p
    return hops, total


def transformer_vs_boltzmann_contrast(matrices):
    """Sign balance and row-sum behaviour of each matrix.

    A Boltzmann transition matrix has no negative entries and unit row sums;
    trained weights are expected to sit near half negative with rows that do
    not sum to anything in particular.
    """
    rows = []
    for i, m in enumerate(matrices):
        m = np.asarray(m, dtype=np.float64)
        sums = m.sum(axis=1)
        rows.append(
            {
                "layer": i,
                "negative_fraction": float(np.mean(m < 0)),
                "row_sum_mean": float(sums.mean()),
                "row_sum_std": float(sums.std()),
                "row_sum_max_dev_from_1": float(np.max(np.abs(sums - 1.0))),
                "stochastic": bool(np.all(m >= 0) and np.allclose(sums, 1.0, rtol=0, atol=1e-12)),
            }
        )
    return rows

"""Dense feed-forward networks with exact input derivatives and parameter gradients.

Layers follow the subtractive bias convention ``z' = f(W z - b)``. Input
derivatives for two-input networks ``u(x, t)`` are carried forward as four
slots (value, d/dx, d/dt, d2/dx2). Parameter gradients come from a reverse
sweep over the recorded forward pass, including the derivative slots, so
losses built from ``u_x`` or ``u_xx`` differentiate correctly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import (
    DegenerateInputError,
    NetworkOverflowError,
    NonFiniteLossError,
    ShapeMismatchError,
    UnsupportedActivationError,
)

ACTIVATIONS = ("tanh", "relu", "identity")

VALUE, DX, DT, DXX = range(4)


@dataclass(frozen=True)
class NetworkParams:
    """Ordered ``(W, b)`` pairs plus the nonlinearity.

    ``activation`` is applied after every layer except the last, which uses
    ``output_activation``. Arrays are copied to float64 and frozen.
    """

    layers: tuple
    activation: str = "tanh"
    output_activation: str = "identity"

    def __post_init__(self):
        frozen = []
        for i, (w, b) in enumerate(self.layers):
            w = np.array(w, dtype=np.float64)
            b = np.array(b, dtype=np.float64).reshape(-1)
            if w.ndim != 2:
                raise ShapeMismatchError(f"layer {i}: weights must be 2-D, got shape {w.shape}", layer=i)
            if b.shape[0] != w.shape[0]:
                raise ShapeMismatchError(
                    f"layer {i}: bias length {b.shape[0]} != weight out-dimension {w.shape[0]}", layer=i
                )
            if frozen and frozen[-1][0].shape[0] != w.shape[1]:
                raise ShapeMismatchError(
                    f"layer {i}: in-dimension {w.shape[1]} != out-dimension {frozen[-1][0].shape[0]} of layer {i - 1}",
                    layer=i,
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ShapeMismatchError(f"layer {i}: non-finite entries", layer=i)
            w.setflags(write=False)
            b.setflags(write=False)
            frozen.append((w, b))
        if not frozen:
            raise ShapeMismatchError("network has no layers")
        for act in (self.activation, self.output_activation):
            if act not in ACTIVATIONS:
                raise UnsupportedActivationError(f"unknown activation {act!r}")
        object.__setattr__(self, "layers", tuple(frozen))

    @property
    def in_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in self.layers)

    def activation_of(self, index: int) -> str:
        return self.output_activation if index == len(self.layers) - 1 else self.activation

    def flat(self) -> np.ndarray:
        """All parameters as one vector, layer by layer, ``W`` (row-major) then ``b``."""
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in self.layers])

    def with_flat(self, vec: np.ndarray) -> "NetworkParams":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.n_params,):
            raise ShapeMismatchError(f"flat vector has shape {vec.shape}, expected ({self.n_params},)")
        layers = []
        pos = 0
        for w, b in self.layers:
            nw = vec[pos : pos + w.size].reshape(w.shape)
            pos += w.size
            nb = vec[pos : pos + b.size]
            pos += b.size
            layers.append((nw, nb))
        return NetworkParams(tuple(layers), self.activation, self.output_activation)

    def equals(self, other: "NetworkParams") -> bool:
        """Bit-exact equality of structure and every entry."""
        if (self.activation, self.output_activation) != (other.activation, other.output_activation):
            return False
        if len(self.layers) != len(other.layers):
            return False
        for (w1, b1), (w2, b2) in zip(self.layers, other.layers):
            if w1.shape != w2.shape or w1.tobytes() != w2.tobytes() or b1.tobytes() != b2.tobytes():
                return False
        return True


def init_params(sizes: Sequence[int], activation="tanh", output_activation="identity", seed=0, scheme="normal"):
    """Seeded initial parameters for a net with the given layer widths.

    ``scheme="normal"``: weights ``N(0, 1/fan_in)``, zero biases.
    ``scheme="uniform"``: weights and biases ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        if scheme == "normal":
            w = rng.standard_normal((fan_out, fan_in)) * bound
            b = np.zeros(fan_out)
        elif scheme == "uniform":
            w = rng.uniform(-bound, bound, (fan_out, fan_in))
            b = rng.uniform(-bound, bound, fan_out)
        else:
            raise ValueError(f"unknown init scheme {scheme!r}")
        layers.append((w, b))
    return NetworkParams(tuple(layers), activation, output_activation)


def _act_value(name, a):
    if name == "tanh":
        return np.tanh(a)
    if name == "relu":
        return np.maximum(a, 0.0)
    return a


def layer_forward(w, b, z, activation="tanh"):
    """One layer ``f(W z - b)`` on a vector or on a batch of row vectors."""
    z = np.asarray(z, dtype=np.float64)
    return _act_value(activation, z @ np.asarray(w).T - b)


def _check_finite(arr, index):
    if not np.all(np.isfinite(arr)):
        raise NetworkOverflowError(f"non-finite activation at layer {index}", layer=index)


def forward(params: NetworkParams, inputs) -> np.ndarray:
    """Network output for one input vector or a ``(batch, in_dim)`` array."""
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    z = np.atleast_2d(x)
    if z.shape[1] != params.in_dim:
        raise ShapeMismatchError(f"layer 0: input length {z.shape[1]} != in-dimension {params.in_dim}", layer=0)
    with np.errstate(over="ignore", invalid="ignore"):
        for i, (w, b) in enumerate(params.layers):
            z = layer_forward(w, b, z, params.activation_of(i))
            _check_finite(z, i)
    return z[0] if single else z


# --------------------------------------------------------------------------
# recorded forward pass with derivative slots


@dataclass
class _Record:
    order: int
    inputs: list = field(default_factory=list)  # z entering each layer, (S, B, n_in)
    pre: list = field(default_factory=list)  # pre-activation slots, (S, B, n_out)
    post: list = field(default_factory=list)  # activation output slots


def _seed_slots(xt: np.ndarray, order: int) -> np.ndarray:
    if order == 0:
        return xt[None]
    if xt.shape[1] != 2:
        raise ShapeMismatchError(f"layer 0: derivative slots need 2 inputs (x, t), got {xt.shape[1]}", layer=0)
    slots = np.zeros((4,) + xt.shape)
    slots[VALUE] = xt
    slots[DX, :, 0] = 1.0
    slots[DT, :, 1] = 1.0
    return slots


def _activate(name, a, order):
    if name == "identity":
        return a
    if name == "tanh":
        if order == 0:
            return np.tanh(a)
        return kernels.tanh_dual_forward(a)
    # relu
    if order == 2:
        raise UnsupportedActivationError("relu has no second derivative; derivative slots need tanh or identity")
    return np.maximum(a, 0.0)


def _record_forward(params: NetworkParams, xt: np.ndarray, order: int) -> _Record:
    rec = _Record(order)
    z = _seed_slots(xt, order)
    n_layers = len(params.layers)
    with np.errstate(over="ignore", invalid="ignore"):
        for i, (w, b) in enumerate(params.layers):
            s, bsz, n_in = z.shape
            a = (z.reshape(s * bsz, n_in) @ w.T).reshape(s, bsz, w.shape[0])
            a[0] -= b
            y = _activate(params.activation_of(i), a, order)
            _check_finite(y, i)
            rec.inputs.append(z)
            rec.pre.append(a)
            rec.post.append(y)
            z = y
    assert len(rec.post) == n_layers
    return rec


def _activate_backward(name, a, y, g, order):
    if name == "identity":
        return g
    if name == "tanh":
        if order == 0:
            return g * (1.0 - y * y)
        return kernels.tanh_dual_backward(a, y, g)
    return g * (a[0] > 0.0)


def _backward(params: NetworkParams, rec: _Record, g_out: np.ndarray):
    grads = [None] * len(params.layers)
    g = g_out
    for i in range(len(params.layers) - 1, -1, -1):
        w, _ = params.layers[i]
        ga = _activate_backward(params.activation_of(i), rec.pre[i], rec.post[i], g, rec.order)
        z = rec.inputs[i]
        s, bsz, n_out = ga.shape
        ga2 = ga.reshape(s * bsz, n_out)
        gw = ga2.T @ z.reshape(s * bsz, z.shape[2])
        gb = -ga[0].sum(axis=0)
        grads[i] = (gw, gb)
        if i > 0:
            g = (ga2 @ w).reshape(s, bsz, w.shape[1])
    return grads


def derivatives(params: NetworkParams, x, t):
    """``(u, u_x, u_t, u_xx)`` of a scalar-output network ``u(x, t)``.

    ``x`` and ``t`` may be scalars or equal-length arrays; results match
    their shape. Values are propagated exactly through each layer.
    """
    x_arr, t_arr = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))
    shape = x_arr.shape
    xt = np.stack([x_arr.ravel(), t_arr.ravel()], axis=1)
    if params.in_dim != 2:
        raise ShapeMismatchError(f"layer 0: derivatives need a 2-input network, got {params.in_dim}", layer=0)
    for name in (params.activation, params.output_activation):
        if name == "relu":
            raise UnsupportedActivationError("relu has no second derivative; derivatives() needs tanh or identity")
    rec = _record_forward(params, xt, 2)
    out = rec.post[-1][:, :, 0]
    return tuple(out[k].reshape(shape) if shape else out[k][0] for k in range(4))


# --------------------------------------------------------------------------
# losses over network outputs


@dataclass
class LossTerm:
    """A scalar loss built from network outputs at fixed inputs.

    ``fn`` receives the output slots, shape ``(S, batch, out_dim)`` with
    ``S = 1`` for ``order=0`` or ``S = 4`` (value, x, t, xx) for ``order=2``,
    and returns ``(value, d value / d slots)``.
    """

    inputs: np.ndarray
    fn: Callable
    order: int = 0


def _as_terms(loss):
    if isinstance(loss, LossTerm):
        return [loss]
    return list(loss)


def loss_value(params: NetworkParams, loss) -> float:
    total = 0.0
    for term in _as_terms(loss):
        rec = _record_forward(params, np.atleast_2d(np.asarray(term.inputs, dtype=np.float64)), term.order)
        total += float(term.fn(rec.post[-1])[0])
    return total


def loss_and_gradient(params: NetworkParams, loss):
    """Loss value and its gradient with respect to every ``W`` and ``b``.

    ``loss`` is a :class:`LossTerm` or a sequence of them (summed). The
    gradient comes back as a :class:`NetworkParams` of the same shape.
    """
    terms = _as_terms(loss)
    total = 0.0
    acc = None
    for term in terms:
        xt = np.atleast_2d(np.asarray(term.inputs, dtype=np.float64))
        rec = _record_forward(params, xt, term.order)
        value, g_out = term.fn(rec.post[-1])
        if not np.isfinite(value):
            raise NonFiniteLossError(f"loss is {value}; refusing to differentiate")
        total += float(value)
        grads = _backward(params, rec, np.asarray(g_out, dtype=np.float64))
        if acc is None:
            acc = grads
        else:
            acc = [(gw0 + gw1, gb0 + gb1) for (gw0, gb0), (gw1, gb1) in zip(acc, grads)]
    return total, _unfrozen_params(acc, params)


def _unfrozen_params(grads, like: NetworkParams) -> NetworkParams:
    # Gradients may legitimately be large but must be finite to build NetworkParams.
    for i, (gw, gb) in enumerate(grads):
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise NonFiniteLossError(f"non-finite gradient in layer {i}")
    return NetworkParams(tuple(grads), like.activation, like.output_activation)


def loss_gradient(params: NetworkParams, loss) -> NetworkParams:
    return loss_and_gradient(params, loss)[1]


def squared_error_term(inputs, targets) -> LossTerm:
    """``sum ||f(x_i) - y_i||^2`` over the rows of ``inputs``."""
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))

    def fn(out):
        r = out[0] - targets
        g = np.zeros_like(out)
        g[0] = 2.0 * r
        return float(np.sum(r * r)), g

    return LossTerm(np.atleast_2d(inputs), fn, 0)


def normalize_layer(z, target_norm: float) -> np.ndarray:
    """Rescale ``z`` to the given L2 norm, keeping its direction."""
    if not target_norm > 0:
        raise DegenerateInputError(f"target_norm must be positive, got {target_norm}")
    z = np.asarray(z, dtype=np.float64)
    norm = np.linalg.norm(z)
    if norm == 0.0:
        raise DegenerateInputError("cannot normalize the zero vector")
    # Vectors already at the target (to rounding) pass through untouched so
    # that normalizing twice is bit-identical to normalizing once.
    if abs(norm - target_norm) <= 8 * np.finfo(np.float64).eps * target_norm:
        return z.copy()
    return z * (target_norm / norm)

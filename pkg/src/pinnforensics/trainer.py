"""Physics-informed training of ``u(x, t)`` for the viscous Burgers equation.

The residual ``u_t + u u_x - nu u_xx`` is penalized at interior collocation
points, the initial profile ``sin(2 pi x)`` on ``t = 0`` and periodicity
``u(0, t) = u(1, t)`` on paired boundary points.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ConfigError, DivergenceError, NonFiniteLossError, NetworkOverflowError
from .nnet import DT, DX, DXX, VALUE, LossTerm, NetworkParams, derivatives, forward, init_params, loss_and_gradient


@dataclass(frozen=True)
class PinnConfig:
    """Everything needed to reproduce one training run.

    ``hidden_layers`` counts hidden activations of size ``width``; the net
    then has ``hidden_layers + 1`` weight matrices, ``hidden_layers - 1`` of
    them square. ``batch_interior = 0`` uses every interior point each step;
    otherwise a seeded minibatch of that size is drawn from the fixed set.
    ``lr_decay`` multiplies the Adam rate geometrically so that the last step
    runs at ``learning_rate * lr_decay``.
    """

    hidden_layers: int = 8
    width: int = 100
    activation: str = "tanh"
    nu: float = 0.01 / math.pi
    x_min: float = 0.0
    x_max: float = 1.0
    t_min: float = 0.0
    t_max: float = 1.0
    n_interior: int = 10000
    n_initial: int = 512
    n_boundary: int = 512
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    steps: int = 20000
    lambda_res: float = 1.0
    lambda_ic: float = 1.0
    lambda_bc: float = 1.0
    batch_interior: int = 0
    lr_decay: float = 1.0
    init: str = "normal"
    seed: int = 42

    def __post_init__(self):
        for name in ("hidden_layers", "width", "n_interior", "n_initial", "n_boundary"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}", key=name)
        if self.steps < 0:
            raise ConfigError(f"steps must be non-negative, got {self.steps}", key="steps")
        if not self.nu > 0:
            raise ConfigError(f"nu must be positive, got {self.nu}", key="nu")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}", key="learning_rate")
        if not self.x_max > self.x_min:
            raise ConfigError("x domain is degenerate", key="x_max")
        if not self.t_max > self.t_min:
            raise ConfigError("t domain is degenerate", key="t_max")
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"optimizer must be sgd or adam, got {self.optimizer!r}", key="optimizer")
        if self.activation not in ("tanh", "identity"):
            raise ConfigError(f"activation must be tanh or identity, got {self.activation!r}", key="activation")
        for name in ("lambda_res", "lambda_ic", "lambda_bc"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative", key=name)
        if self.batch_interior < 0:
            raise ConfigError("batch_interior must be non-negative", key="batch_interior")
        if self.init not in ("normal", "uniform"):
            raise ConfigError(f"init must be normal or uniform, got {self.init!r}", key="init")
        if not 0 < self.lr_decay <= 1:
            raise ConfigError("lr_decay must lie in (0, 1]", key="lr_decay")

    @property
    def layer_sizes(self) -> list[int]:
        return [2] + [self.width] * self.hidden_layers + [1]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PinnConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}", key=key)
            kwargs[key] = _coerce(key, value, type(getattr(cls(), key)))
        return cls(**kwargs)


def _coerce(key, value, kind):
    if isinstance(value, kind) and not (kind is int and isinstance(value, bool)):
        return value
    try:
        if kind is int:
            if isinstance(value, float):
                if not value.is_integer():
                    raise ValueError
                return int(value)
            return int(str(value).strip())
        if kind is float:
            return float(_eval_float(str(value)))
        return str(value).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"bad value {value!r} for {key}", key=key) from None


def _eval_float(text):
    # Accepts plain numbers plus the "a/pi" spelling used for the viscosity.
    text = text.strip().lower().replace(" ", "")
    if text.endswith("/pi"):
        return float(text[:-3]) / math.pi
    return float(text)


@dataclass
class TrainingHistory:
    step: list = field(default_factory=list)
    total: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    ic: list = field(default_factory=list)
    bc: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)

    def append(self, step, losses, wall):
        if self.step and step <= self.step[-1]:
            raise ValueError("history steps must increase")
        self.step.append(int(step))
        for name, value in zip(("total", "residual", "ic", "bc"), losses):
            getattr(self, name).append(float(value))
        self.wall_time.append(float(wall))

    def __len__(self):
        return len(self.step)

    def summary(self) -> dict:
        if not self.step:
            return {"records": 0}
        return {
            "records": len(self.step),
            "last_step": self.step[-1],
            "final_total": self.total[-1],
            "final_residual": self.residual[-1],
            "final_ic": self.ic[-1],
            "final_bc": self.bc[-1],
            "min_total": min(self.total),
        }


@dataclass(frozen=True)
class CollocationSets:
    interior: np.ndarray  # (n, 2) columns x, t
    initial: np.ndarray  # (n,) x values at t = t_min
    boundary: np.ndarray  # (n,) t values, paired (x_min, t) / (x_max, t)


def sample_collocation(config: PinnConfig, seed=None) -> CollocationSets:
    """Fixed, seeded collocation sets for one run."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    x = rng.uniform(config.x_min, config.x_max, config.n_interior)
    # (t_min, t_max]: flip numpy's half-open [low, high)
    t = config.t_max - rng.uniform(0.0, config.t_max - config.t_min, config.n_interior)
    interior = np.stack([x, t], axis=1)
    initial = rng.uniform(config.x_min, config.x_max, config.n_initial)
    boundary = rng.uniform(config.t_min, config.t_max, config.n_boundary)
    return CollocationSets(interior, initial, boundary)


def initial_profile(x):
    return np.sin(2.0 * np.pi * np.asarray(x, dtype=np.float64))


def residual(params: NetworkParams, x, t, nu):
    """Burgers residual ``u_t + u u_x - nu u_xx`` of the network at ``(x, t)``."""
    u, ux, ut, uxx = derivatives(params, x, t)
    return ut + u * ux - nu * uxx


def _residual_term(points, nu, weight):
    n = points.shape[0]

    def fn(out):
        u, ux, ut, uxx = out[VALUE, :, 0], out[DX, :, 0], out[DT, :, 0], out[DXX, :, 0]
        r = ut + u * ux - nu * uxx
        c = 2.0 * weight / n
        g = np.zeros_like(out)
        g[VALUE, :, 0] = c * r * ux
        g[DX, :, 0] = c * r * u
        g[DT, :, 0] = c * r
        g[DXX, :, 0] = -c * nu * r
        return weight * float(np.mean(r * r)), g

    return LossTerm(points, fn, 2)


def _initial_term(x, t0, weight):
    n = x.shape[0]
    target = initial_profile(x)

    def fn(out):
        d = out[0, :, 0] - target
        g = np.zeros_like(out)
        g[0, :, 0] = 2.0 * weight / n * d
        return weight * float(np.mean(d * d)), g

    return LossTerm(np.stack([x, np.full_like(x, t0)], axis=1), fn, 0)


def _boundary_term(t, x_lo, x_hi, weight):
    n = t.shape[0]
    pts = np.concatenate([np.stack([np.full_like(t, x_lo), t], 1), np.stack([np.full_like(t, x_hi), t], 1)])

    def fn(out):
        d = out[0, :n, 0] - out[0, n:, 0]
        g = np.zeros_like(out)
        c = 2.0 * weight / n * d
        g[0, :n, 0] = c
        g[0, n:, 0] = -c
        return weight * float(np.mean(d * d)), g

    return LossTerm(pts, fn, 0)


def _loss_terms(config, sets, interior=None):
    pts = sets.interior if interior is None else interior
    if pts.shape[0] == 0 or sets.initial.shape[0] == 0 or sets.boundary.shape[0] == 0:
        raise ConfigError("collocation sets must be non-empty")
    return [
        _residual_term(pts, config.nu, config.lambda_res),
        _initial_term(sets.initial, config.t_min, config.lambda_ic),
        _boundary_term(sets.boundary, config.x_min, config.x_max, config.lambda_bc),
    ]


def pinn_loss(params: NetworkParams, config: PinnConfig, sets: CollocationSets):
    """``(total, residual_term, ic_term, bc_term)``; each term already weighted."""
    if sets.interior.shape[0] == 0 or sets.initial.shape[0] == 0 or sets.boundary.shape[0] == 0:
        raise ConfigError("collocation sets must be non-empty")
    x, t = sets.interior[:, 0], sets.interior[:, 1]
    r = residual(params, x, t, config.nu)
    res = config.lambda_res * float(np.mean(r * r))
    u0 = forward(params, np.stack([sets.initial, np.full_like(sets.initial, config.t_min)], 1))[:, 0]
    ic = config.lambda_ic * float(np.mean((u0 - initial_profile(sets.initial)) ** 2))
    tb = sets.boundary
    ua = forward(params, np.stack([np.full_like(tb, config.x_min), tb], 1))[:, 0]
    ub = forward(params, np.stack([np.full_like(tb, config.x_max), tb], 1))[:, 0]
    bc = config.lambda_bc * float(np.mean((ua - ub) ** 2))
    return res + ic + bc, res, ic, bc


def pinn_loss_and_gradient(params, config, sets, interior=None):
    """Total loss, its three parts and the parameter gradient."""
    terms = _loss_terms(config, sets, interior)
    parts = []
    grad_vec = None
    for term in terms:
        value, grad = loss_and_gradient(params, term)
        parts.append(value)
        vec = grad.flat()
        grad_vec = vec if grad_vec is None else grad_vec + vec
    return sum(parts), parts, grad_vec


class Adam:
    """Adam on a flat parameter vector with bias-corrected moments."""

    def __init__(self, n, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, theta, grad, lr=None):
        lr = self.lr if lr is None else lr
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        mhat = self.m / (1.0 - self.beta1**self.t)
        vhat = self.v / (1.0 - self.beta2**self.t)
        return theta - lr * mhat / (np.sqrt(vhat) + self.eps)


def sgd_step(params: NetworkParams, grad: NetworkParams, lr: float) -> NetworkParams:
    """Plain steepest descent ``W' = W - lr dE/dW`` for every layer."""
    return NetworkParams(
        tuple((w - lr * gw, b - lr * gb) for (w, b), (gw, gb) in zip(params.layers, grad.layers)),
        params.activation,
        params.output_activation,
    )


def initial_params(config: PinnConfig) -> NetworkParams:
    return init_params(config.layer_sizes, config.activation, "identity", seed=config.seed, scheme=config.init)


def train(config: PinnConfig, callback=None, log_every=0):
    """Run the configured optimizer; return ``(params, history)``.

    The network is initialized from ``config.seed`` and collocation points
    from ``config.seed + 1``; minibatches (if any) from ``config.seed + 2``.
    On a non-finite loss a :class:`DivergenceError` carries the last finite
    parameters and history.
    """
    params = initial_params(config)
    history = TrainingHistory()
    if config.steps == 0:
        return params, history
    sets = sample_collocation(config, seed=config.seed + 1)
    batch_rng = np.random.default_rng(config.seed + 2)
    theta = params.flat()
    adam = Adam(theta.size, config.learning_rate) if config.optimizer == "adam" else None
    decay = config.lr_decay ** (1.0 / max(config.steps - 1, 1))
    start = time.perf_counter()
    for step in range(1, config.steps + 1):
        interior = None
        if 0 < config.batch_interior < config.n_interior:
            idx = batch_rng.choice(config.n_interior, config.batch_interior, replace=False)
            interior = sets.interior[np.sort(idx)]
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                total, parts, grad = pinn_loss_and_gradient(params, config, sets, interior)
        except (NonFiniteLossError, NetworkOverflowError) as exc:
            raise DivergenceError(f"non-finite loss at step {step}", params, history, step) from exc
        history.append(step, (total, *parts), time.perf_counter() - start)
        if adam is not None:
            theta = adam.step(theta, grad, config.learning_rate * decay ** (step - 1))
        else:
            theta = theta - config.learning_rate * grad
        if not np.all(np.isfinite(theta)):
            raise DivergenceError(f"non-finite parameters after step {step}", params, history, step)
        params = params.with_flat(theta)
        if callback is not None and log_every and step % log_every == 0:
            callback(step, history)
    return params, history


def predict_field(params: NetworkParams, x, t) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    pts = np.stack([x, np.full_like(x, float(t))], axis=1)
    return forward(params, pts)[:, 0]

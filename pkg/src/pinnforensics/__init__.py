"""Train a Burgers PINN and test whether its weights look like random matrices."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402
from .nnet import NetworkParams, derivatives, forward, loss_gradient, normalize_layer  # noqa: E402
from .oracle import FieldSnapshot, relative_l2_error, solve_burgers  # noqa: E402
from .trainer import PinnConfig, TrainingHistory, pinn_loss, predict_field, residual, sample_collocation, train  # noqa: E402

__all__ = [
    "BACKEND",
    "FieldSnapshot",
    "NetworkParams",
    "PinnConfig",
    "TrainingHistory",
    "derivatives",
    "forward",
    "loss_gradient",
    "normalize_layer",
    "pinn_loss",
    "predict_field",
    "relative_l2_error",
    "residual",
    "sample_collocation",
    "solve_burgers",
    "train",
]

import numpy as np
import pytest

from pinnforensics.nnet import NetworkParams, init_params


def random_net(sizes, seed, activation="tanh", scale=1.0, bias_scale=0.3):
    """Random net with non-zero biases so every code path is exercised."""
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = rng.standard_normal((fan_out, fan_in)) * scale / np.sqrt(fan_in)
        b = rng.standard_normal(fan_out) * bias_scale
        layers.append((w, b))
    return NetworkParams(tuple(layers), activation, "identity")


@pytest.fixture
def small_net():
    return random_net([2, 8, 8, 1], seed=3)


@pytest.fixture
def gaussian_params():
    return init_params([2, 100, 100, 100, 100, 1], seed=11)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

"""Independent reference computations used by the tests.

Nothing here imports the production numerics it checks.
"""

import itertools
import math

import numpy as np


def straight_line_forward(layers, activation, output_activation, x):
    """Scalar-loop evaluation of ``z' = f(W z - b)``, one entry at a time."""
    z = [float(v) for v in x]
    for i, (w, b) in enumerate(layers):
        act = output_activation if i == len(layers) - 1 else activation
        out = []
        for r in range(len(b)):
            a = -float(b[r])
            for c in range(len(z)):
                a += float(w[r][c]) * z[c]
            if act == "tanh":
                a = math.tanh(a)
            elif act == "relu":
                a = max(a, 0.0)
            out.append(a)
        z = out
    return np.array(z)


def d1(f, x, h=1e-3):
    """Fourth-order central first derivative."""
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def d2(f, x, h=1e-3):
    """Fourth-order central second derivative."""
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)


def fd_gradient(loss, theta, h=1e-4):
    """Per-coordinate fourth-order central differences of ``loss(theta)``."""
    g = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = 1.0
        g[i] = d1(lambda s: loss(theta + s * e), 0.0, h)
    return g


def heat_solution(x, t, nu):
    return np.exp(-nu * (2 * np.pi) ** 2 * t) * np.sin(2 * np.pi * x)


def enumerate_paths(actions, beta):
    """Transition probabilities by summing over every intermediate path.

    Each hop is normalized per source node, the action of a path is the sum
    of its hop actions, and the weight of a path is the product of its
    per-hop normalized factors.
    """
    n = actions[0].shape[0]
    z = [np.array([sum(math.exp(-beta * s[i, j]) for j in range(n)) for i in range(n)]) for s in actions]
    total = np.zeros((n, n))
    for start in range(n):
        for path in itertools.product(range(n), repeat=len(actions)):
            nodes = (start,) + path
            action = sum(actions[k][nodes[k], nodes[k + 1]] for k in range(len(actions)))
            norm = math.prod(z[k][nodes[k]] for k in range(len(actions)))
            total[start, path[-1]] += math.exp(-beta * action) / norm
    return total


def worst_relative_error(a, b, floor=1e-8):
    """Largest ``|a - b| / |b|``, with ``|a - b| <= floor`` counted as exact."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    diff = np.abs(a - b)
    rel = np.where(diff <= floor, 0.0, diff / np.maximum(np.abs(b), 1e-300))
    return float(np.max(rel))

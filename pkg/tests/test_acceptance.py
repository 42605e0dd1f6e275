"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
Criteria 3 to 7 read the three reference-run dumps kept under
``tests/fixtures``; criterion 3 also trains the desk config live.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE, random_net
from oracles import d1, d2, enumerate_paths, fd_gradient, heat_solution
from pinnforensics import cli
from pinnforensics import forensics as fx
from pinnforensics.analysis import analyze_params
from pinnforensics.dump import load_dump
from pinnforensics.forensics import band_energy
from pinnforensics.nnet import NetworkParams, derivatives, forward
from pinnforensics.oracle import FieldSnapshot, relative_l2_error, self_convergence_order, snapshot_at, solve_burgers
from pinnforensics.pdelab import (
    KernelSpec,
    RelaxationState,
    boltzmann_path_composition,
    burgers_kernel_matrix,
    kernel_matrices,
    relaxation_step,
    simulate_relaxation,
)
from pinnforensics.trainer import PinnConfig, pinn_loss, pinn_loss_and_gradient, predict_field, sample_collocation

NU = 0.01 / math.pi
ROOT = Path(__file__).resolve().parents[1]
FIXTURES = Path(__file__).resolve().parent / "fixtures"
SEEDS = (42, 43, 44)


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _rel(a, b):
    """Max-norm relative error of a whole vector, no per-entry floor."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def _fd_derivatives(p, x, t, h=1e-3):
    f = lambda a, b: forward(p, [a, b])[0]  # noqa: E731
    return np.array(
        [f(x, t), d1(lambda s: f(s, t), x, h), d1(lambda s: f(x, s), t, h), d2(lambda s: f(s, t), x, h)]
    )


@pytest.fixture(scope="module")
def reference_dumps():
    paths = [FIXTURES / f"ref_seed{s}.pfwd" for s in SEEDS]
    missing = [p.name for p in paths if not p.exists()]
    if missing:
        pytest.fail(f"reference dumps missing: {missing}")
    return {s: load_dump(p) for s, p in zip(SEEDS, paths)}


@pytest.fixture(scope="module")
def reference_analyses(reference_dumps):
    return {s: analyze_params(d.params, seed=0) for s, d in reference_dumps.items()}


@pytest.fixture(scope="module")
def oracle_t05():
    return snapshot_at(solve_burgers(NU, 1024, 0.4, 0.5, times=[0.5]), 0.5)


def _rel_l2(params, snap):
    return relative_l2_error(FieldSnapshot(snap.t, snap.grid, predict_field(params, snap.grid, snap.t)), snap)


# ------------------------------------------------------------------ 1


def test_criterion_01_gradient_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    cfg = PinnConfig(n_interior=6, n_initial=4, n_boundary=4, seed=3)
    sets = sample_collocation(cfg)
    worst_d = worst_g = 0.0
    for seed in range(50):
        width = int(rng.integers(2, 9))
        depth = int(rng.integers(1, 4))
        p = random_net([2] + [width] * depth + [1], seed=seed)
        x, t = rng.uniform(0, 1, 2)
        worst_d = max(worst_d, _rel(derivatives(p, x, t), _fd_derivatives(p, x, t)))
        _, _, grad = pinn_loss_and_gradient(p, cfg, sets)
        fd = fd_gradient(lambda th: pinn_loss(p.with_flat(th), cfg, sets)[0], p.flat())
        worst_g = max(worst_g, _rel(grad, fd))
    elapsed = time.perf_counter() - start
    ok = worst_d < 1e-5 and worst_g < 1e-5 and elapsed < 60
    record(1, ok, f"derivatives {worst_d:.1e}, loss gradient {worst_g:.1e} (< 1e-5), {elapsed:.1f} s")


# ------------------------------------------------------------------ 2


def test_criterion_02_oracle_validity():
    start = time.perf_counter()
    snap = snapshot_at(solve_burgers(NU, 512, 0.4, 0.5, advect=False, times=[0.5]), 0.5)
    heat = float(np.max(np.abs(snap.u - heat_solution(snap.grid, 0.5, NU))))
    orders = [self_convergence_order(NU, t) for t in (0.1, 0.2)]
    elapsed = time.perf_counter() - start
    ok = heat < 1e-4 and min(orders) >= 1.9 and elapsed < 120
    record(2, ok, f"heat max err {heat:.1e} (< 1e-4), orders {orders[0]:.2f}/{orders[1]:.2f} (>= 1.9), {elapsed:.0f} s")


# ------------------------------------------------------------------ 3


def test_criterion_03_pinn_accuracy(reference_dumps, oracle_t05, tmp_path):
    ref = {s: _rel_l2(d.params, oracle_t05) for s, d in reference_dumps.items()}
    wall = {}
    for s in SEEDS:
        hist = FIXTURES / f"ref_seed{s}_history.csv"
        if hist.exists():
            wall[s] = float(np.loadtxt(hist, delimiter=",", skiprows=1)[-1, 5])
    start = time.process_time()
    assert cli.main(["train", str(ROOT / "configs/desk.cfg"), "--out", str(tmp_path)]) == 0
    desk_cpu = time.process_time() - start
    desk = _rel_l2(load_dump(tmp_path / "weights.pfwd").params, oracle_t05)
    ok = ref[42] < 2e-2 and desk < 5e-2 and desk_cpu < 600 and all(w < 3600 for w in wall.values())
    seeds = ", ".join(f"{s}: {e:.2e}" for s, e in ref.items())
    record(
        3,
        ok,
        f"reference relL2 seed {seeds} (< 2e-2 for the reference seed 42; wall {max(wall.values(), default=float('nan')):.0f} s); "
        f"desk relL2 {desk:.2e} (< 5e-2) in {desk_cpu:.0f} s CPU",
    )


# ------------------------------------------------------------------ 4


def test_criterion_04_distribution_band(reference_analyses):
    kurt = [la.weights.kurtosis for rep in reference_analyses.values() for la in rep.layers]
    beta = [la.weights.beta for rep in reference_analyses.values() for la in rep.layers]
    ok = all(1.8 <= k <= 3.2 for k in kurt) and all(1.5 <= b <= 4.0 for b in beta)
    record(
        4,
        ok,
        f"weight kurtosis range [{min(kurt):.2f}, {max(kurt):.2f}] (band [1.8, 3.2]), "
        f"beta range [{min(beta):.2f}, {max(beta):.2f}] (band [1.5, 4.0]) over {len(kurt)} layers",
    )


# ------------------------------------------------------------------ 5


def test_criterion_05_circular_law(reference_analyses):
    spreads = {s: rep.circular.radius_rel_spread for s, rep in reference_analyses.items()}
    inside = min(min(rep.circular.inside_fraction) for rep in reference_analyses.values())
    ok = all(v < 0.05 for v in spreads.values()) and inside >= 0.95
    sp = ", ".join(f"{s}: {v:.3f}" for s, v in spreads.items())
    record(5, ok, f"radius spread seed {sp} (< 0.05); min fraction inside 1.1 r {inside:.3f} (>= 0.95)")


# ------------------------------------------------------------------ 6


def test_criterion_06_singular_values(reference_analyses):
    smax = [la.sigma_max for la in reference_analyses[42].layers]
    fired = {s: all(la.drop.fired for la in rep.layers) for s, rep in reference_analyses.items()}
    base_fired = {}
    for s, rep in reference_analyses.items():
        base_fired[s] = any(
            fx.singular_drop_detector(fx.matched_baseline(la_w, seed=900 + s), seed=s).fired
            for la_w in [w for w, _ in _square(s)]
        )
    seeds_ok = sum(fired[s] and not base_fired[s] for s in SEEDS)
    layers_fired = sum(la.drop.fired for rep in reference_analyses.values() for la in rep.layers)
    layers_total = sum(len(rep.layers) for rep in reference_analyses.values())
    ok = max(smax) < 1.0 and seeds_ok >= 2
    record(
        6,
        ok,
        f"reference sigma_max range [{min(smax):.2f}, {max(smax):.2f}] (< 1); drop detector fires on trained "
        f"and not on baseline in {seeds_ok}/3 seeds (>= 2; {layers_fired}/{layers_total} trained layers fire)",
    )


_SQUARES = {}


def _square(seed):
    if seed not in _SQUARES:
        params = load_dump(FIXTURES / f"ref_seed{seed}.pfwd").params
        _SQUARES[seed] = [(w, b) for w, b in params.layers if w.shape[0] == w.shape[1]]
    return _SQUARES[seed]


# ------------------------------------------------------------------ 7


def test_criterion_07_structure_contrast(reference_analyses):
    n = 100
    spec = KernelSpec(3 / n, n, NU, np.sin(2 * np.pi * np.arange(n) / n))
    kernel_band = band_energy(burgers_kernel_matrix(spec), 10)
    diffs = [abs(la.band_k - la.baseline_band_k) for rep in reference_analyses.values() for la in rep.layers]
    ok = kernel_band > 0.99 and max(diffs) < 0.1
    record(7, ok, f"W_Bur band energy {kernel_band:.4f} (> 0.99); max |trained - baseline| {max(diffs):.3f} (< 0.1)")


# ------------------------------------------------------------------ 8


def test_criterion_08_dynamical_equivalence():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(1, 40))
        w, b, z = rng.standard_normal((k, k)), rng.standard_normal(k), rng.standard_normal(k)
        net = NetworkParams(((w, b),), "tanh", "tanh")
        worst = max(worst, float(np.max(np.abs(relaxation_step(RelaxationState(z, 1.0, b, "tanh"), w) - forward(net, z)))))
    n = 256
    grid = np.arange(n) / n
    field = np.sin(2 * np.pi * grid)
    traj = simulate_relaxation(KernelSpec(3 / n, n, NU, field), np.cos(2 * np.pi * grid), 1e-4, 500)
    ref = snapshot_at(
        solve_burgers(NU, n, 0.4, 0.05, u0=lambda x: np.cos(2 * np.pi * x), frozen_field=field, times=[0.05]), 0.05
    )
    err = float(np.max(np.abs(traj[-1] - ref.u)))
    record(8, worst <= 1e-15 and err < 5e-3, f"omega=1 worst {worst:.1e} (<= 1e-15); relaxation vs oracle {err:.1e} (< 5e-3)")


# ------------------------------------------------------------------ 9


def test_criterion_09_kernel_convergence():
    n = 1000
    dx = 1.0 / n
    x = np.arange(n) * dx
    f = np.sin(2 * np.pi * x)
    e1, e2 = [], []
    for cells in (8, 4, 2):
        w1, w2 = kernel_matrices(KernelSpec(cells * dx, n, NU))
        e1.append(np.max(np.abs(w1 @ f - 2 * np.pi * np.cos(2 * np.pi * x))))
        e2.append(np.max(np.abs(w2 @ f + (2 * np.pi) ** 2 * f)))
    o1 = [math.log2(e1[i] / e1[i + 1]) for i in range(2)]
    o2 = [math.log2(e2[i] / e2[i + 1]) for i in range(2)]
    ok = min(o1 + o2) >= 1.9
    record(9, ok, f"W1 orders {o1[0]:.2f}/{o1[1]:.2f}, W2 orders {o2[0]:.2f}/{o2[1]:.2f} (>= 1.9)")


# ------------------------------------------------------------------ 10


def test_criterion_10_path_composition():
    rng = np.random.default_rng(10)
    actions = [rng.standard_normal((3, 3)) for _ in range(2)]
    _, total = boltzmann_path_composition(actions, 1.7)
    err = float(np.max(np.abs(total - enumerate_paths(actions, 1.7))))
    hops, total0 = boltzmann_path_composition(actions, 0.0)
    uniform = all(np.all(p == 1 / 3) for p in hops + [total0])
    record(10, err <= 1e-12 and uniform, f"enumeration vs product {err:.1e} (<= 1e-12); beta=0 exactly uniform: {uniform}")


# ------------------------------------------------------------------ 11


def test_criterion_11_estimator_round_trip():
    rng = np.random.default_rng(11)
    n = 100_000
    betas = {}
    for beta in (1.0, 2.0, 4.0):
        # inverse transform: |x|^beta ~ Gamma(1/beta)
        mag = rng.gamma(1.0 / beta, size=n) ** (1.0 / beta)
        betas[beta] = fx.gen_gaussian_fit(mag * rng.choice([-1.0, 1.0], size=n)).beta
    k_uni = fx.kurtosis(rng.uniform(-1, 1, n))
    k_lap = fx.kurtosis(rng.laplace(0, 1, n))
    ok = all(abs(b - t) <= 0.15 for t, b in betas.items()) and abs(k_uni - 1.8) <= 0.05 and abs(k_lap - 6.0) <= 0.3
    fits = ", ".join(f"{t:g}->{b:.3f}" for t, b in betas.items())
    record(11, ok, f"beta {fits} (+-0.15); kurtosis uniform {k_uni:.3f} (1.8+-0.05), Laplace {k_lap:.2f} (6+-0.3)")


# ------------------------------------------------------------------ 12


def test_criterion_12_reproducibility(tmp_path):
    args = ["train", str(ROOT / "configs/desk.cfg"), "--set", "steps = 100"]
    for name in ("a", "b"):
        assert cli.main(args + ["--out", str(tmp_path / name)]) == 0
    same_dump = (tmp_path / "a/weights.pfwd").read_bytes() == (tmp_path / "b/weights.pfwd").read_bytes()
    for name in ("a", "b"):
        assert cli.main(["analyze", str(tmp_path / name / "weights.pfwd"), str(tmp_path / f"an_{name}"), "--no-svg"]) == 0
    same_report = (tmp_path / "an_a/summary.json").read_bytes() == (tmp_path / "an_b/summary.json").read_bytes()
    record(12, same_dump and same_report, f"dumps byte-identical: {same_dump}; analysis summaries identical: {same_report}")

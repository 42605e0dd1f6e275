import json

import numpy as np
import pytest

from pinnforensics import cli
from pinnforensics.dump import WeightDump, load_dump, save_dump
from pinnforensics.errors import ConfigError
from pinnforensics.forensics import gaussian_baseline
from pinnforensics.nnet import NetworkParams, init_params
from pinnforensics.report import read_csv, snapshot_filename, write_csv
from pinnforensics.trainer import PinnConfig, initial_params, predict_field

TINY_CFG = """\
# tiny network
hidden_layers = 3
width = 10
steps = 12
n_interior = 200   # trailing comment
batch_interior = 50
nu = 0.01/pi
"""


@pytest.fixture
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY_CFG)
    return path


def test_parse_config_text():
    data = cli.parse_config_text(TINY_CFG)
    assert data["n_interior"] == "200" and data["nu"] == "0.01/pi"
    cfg = PinnConfig.from_dict(data)
    assert cfg.width == 10 and cfg.nu == 0.01 / np.pi
    with pytest.raises(ConfigError) as err:
        cli.parse_config_text("width 10")
    assert err.value.key == "width 10"


def test_train_writes_dump_history_manifest(tiny_cfg, tmp_path):
    out = tmp_path / "run"
    assert cli.main(["train", str(tiny_cfg), "--out", str(out)]) == 0
    dump = load_dump(out / "weights.pfwd")
    assert dump.config["width"] == 10
    assert dump.meta["kernel_backend"] in ("cython", "numpy")
    assert dump.meta["init_scheme"] == "normal"
    header, hist = read_csv(out / "history.csv")
    assert header == ["step", "total", "residual", "ic", "bc", "wall_time"]
    assert hist.shape == (12, 6) and np.all(np.diff(hist[:, 0]) > 0)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 42 and len(manifest["config_sha256"]) == 64
    assert manifest["outputs"] == ["history.csv", "weights.pfwd"]


def test_train_byte_identical_and_manifest_stable(tiny_cfg, tmp_path):
    for name in ("a", "b"):
        assert cli.main(["train", str(tiny_cfg), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a/weights.pfwd").read_bytes() == (tmp_path / "b/weights.pfwd").read_bytes()
    assert (tmp_path / "a/manifest.json").read_bytes() == (tmp_path / "b/manifest.json").read_bytes()


def test_train_zero_steps_is_initialization(tiny_cfg, tmp_path):
    assert cli.main(["train", str(tiny_cfg), "--set", "steps = 0", "--out", str(tmp_path)]) == 0
    cfg = PinnConfig.from_dict(dict(cli.parse_config_text(TINY_CFG), steps="0"))
    assert load_dump(tmp_path / "weights.pfwd").params.equals(initial_params(cfg))


def test_output_dir_from_environment(tiny_cfg, tmp_path, monkeypatch):
    monkeypatch.setenv("PINNFORENSICS_OUT", str(tmp_path / "env"))
    assert cli.main(["train", str(tiny_cfg), "--set", "steps = 1"]) == 0
    assert (tmp_path / "env/weights.pfwd").exists()


@pytest.mark.parametrize("line,key", [("width = -3", "width"), ("depth = 4", "depth"), ("nu = fast", "nu")])
def test_bad_config_exit_2_names_key(tmp_path, capsys, line, key):
    path = tmp_path / "bad.cfg"
    path.write_text(line + "\n")
    assert cli.main(["train", str(path), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert repr(key) in capsys.readouterr().err


def test_divergence_exit_3_with_checkpoint(tiny_cfg, tmp_path, capsys):
    args = ["train", str(tiny_cfg), "--set", "optimizer = sgd", "--set", "learning_rate = 1e6", "--set", "steps = 50"]
    args += ["--out", str(tmp_path)]
    assert cli.main(args) == cli.EXIT_DIVERGED
    err = capsys.readouterr().err
    assert "checkpoint.pfwd" in err
    ckpt = load_dump(tmp_path / "checkpoint.pfwd")
    assert np.all(np.isfinite(ckpt.params.flat()))
    assert ckpt.meta["diverged_at_step"] >= 1


# ---------------------------------------------------------------- analyze


def _dump_with_square_layers(tmp_path, squares, name="d.pfwd"):
    n = squares[0].shape[0]
    rng = np.random.default_rng(0)
    layers = [(rng.standard_normal((n, 2)), np.zeros(n))]
    layers += [(m, rng.standard_normal(n) * 0.1) for m in squares]
    layers.append((rng.standard_normal((1, n)), np.zeros(1)))
    path = tmp_path / name
    save_dump(WeightDump(NetworkParams(tuple(layers)), {"seed": 0}), path)
    return path


def test_analyze_gaussian_baseline_consistent(tmp_path):
    squares = [gaussian_baseline(100, 100, 0.0, 0.1, seed=s) for s in range(3)]
    path = _dump_with_square_layers(tmp_path, squares)
    assert cli.main(["analyze", str(path), str(tmp_path / "an"), "--no-svg"]) == 0
    summary = json.loads((tmp_path / "an/summary.json").read_text())
    assert summary["n_square_layers"] == 3
    assert summary["flags"]["all_consistent_with_random_baseline"]
    for layer in summary["layers"]:
        assert layer["weights"]["kurtosis"] == pytest.approx(3.0, abs=0.2)
        assert layer["weights"]["beta"] == pytest.approx(2.0, abs=0.2)
        assert layer["flags"]["low_confidence_bias_fit"]
        assert 0.4 <= layer["contrast"]["negative_fraction"] <= 0.6
    header, eig = read_csv(tmp_path / "an/layer1_eigenvalues.csv")
    assert header == ["re", "im"] and eig.shape == (100, 2)
    header, sv = read_csv(tmp_path / "an/layer2_singular_values.csv")
    assert np.all(np.diff(sv[:, 1]) <= 0)
    header, kde = read_csv(tmp_path / "an/layer3_weights_kde.csv")
    assert header[:2] == ["x", "kde_density"] and np.all(kde[:, 1] >= 0)


def test_analyze_flags_tridiagonal_layer(tmp_path):
    n = 50
    tri = np.diag(np.full(n, 2.0)) + np.diag(np.full(n - 1, -1.0), 1) + np.diag(np.full(n - 1, -1.0), -1)
    path = _dump_with_square_layers(tmp_path, [tri, gaussian_baseline(n, n, 0, 0.1, seed=1)])
    assert cli.main(["analyze", str(path), str(tmp_path / "an")]) == 0
    summary = json.loads((tmp_path / "an/summary.json").read_text())
    first = summary["layers"][0]
    assert first["spectral"]["band_energy_k1"] > 0.99
    assert first["flags"]["structured"]
    assert not summary["layers"][1]["flags"]["structured"]
    for svg in ("eigenvalues.svg", "singular_values.svg", "layer1_weights_density.svg"):
        assert (tmp_path / "an" / svg).read_text().startswith("<svg")


def test_analyze_summary_finite_or_explained(tmp_path):
    path = _dump_with_square_layers(tmp_path, [gaussian_baseline(30, 30, 0, 1, seed=s) for s in range(2)])
    assert cli.main(["analyze", str(path), str(tmp_path / "an"), "--no-svg"]) == 0
    text = (tmp_path / "an/summary.json").read_text()
    assert "NaN" not in text and "Infinity" not in text
    summary = json.loads(text)
    # 30 biases: too few for the generalized-Gaussian fit, reported as null with a reason
    assert summary["layers"][0]["biases"]["beta"] is None
    assert "layers[1].biases.beta" in summary["null_reasons"]


def test_analyze_reports_identical_scalars_twice(tmp_path):
    path = _dump_with_square_layers(tmp_path, [gaussian_baseline(40, 40, 0, 1, seed=s) for s in range(2)])
    for name in ("a", "b"):
        assert cli.main(["analyze", str(path), str(tmp_path / name), "--no-svg"]) == 0
    assert (tmp_path / "a/summary.json").read_bytes() == (tmp_path / "b/summary.json").read_bytes()


def test_analyze_corrupt_dump_exit_4(tmp_path, capsys):
    path = _dump_with_square_layers(tmp_path, [np.eye(5), np.eye(5)])
    data = bytearray(path.read_bytes())
    data[-1] ^= 0xFF
    path.write_bytes(bytes(data))
    assert cli.main(["analyze", str(path), str(tmp_path / "an")]) == cli.EXIT_CORRUPT
    assert "payload_sha256" in capsys.readouterr().err


# ---------------------------------------------------------------- kernel


def test_kernel_zero_field_symmetric(tmp_path):
    assert cli.main(["kernel", "--u-field", "zero", "--out", str(tmp_path)]) == 0
    header, m = read_csv(tmp_path / "kernel_matrix.csv")
    assert len(header) == 100 and m.shape == (100, 100)
    assert np.max(np.abs(m - m.T)) <= 1e-12
    assert json.loads((tmp_path / "kernel_report.json").read_text())["symmetric"]


def test_kernel_sin_field_banded(tmp_path):
    assert cli.main(["kernel", "--n", "100", "--h-cells", "3", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "kernel_report.json").read_text())
    assert report["n"] == 100 and report["band_energy_k10"] > 0.99
    header, curve = read_csv(tmp_path / "kernel_band_energy.csv")
    assert header == ["k", "plain", "periodic"] and curve[-1, 1] == 1.0


def test_kernel_under_resolved_exit_5(tmp_path):
    assert cli.main(["kernel", "--h-cells", "1.5", "--out", str(tmp_path)]) == cli.EXIT_UNDERRESOLVED


def test_kernel_field_from_file(tmp_path):
    x = np.arange(64) / 64
    write_csv(tmp_path / "u.csv", ["x", "u"], zip(x, 0.5 * np.ones(64)))
    args = ["kernel", "--n", "64", "--u-field", f"file:{tmp_path / 'u.csv'}", "--out", str(tmp_path / "k")]
    assert cli.main(args) == 0
    assert cli.main(["kernel", "--n", "32", "--u-field", f"file:{tmp_path / 'u.csv'}", "--out", str(tmp_path)]) == 1


# ---------------------------------------------------------------- oracle


def test_oracle_diffusion_only_matches_closed_form(tmp_path):
    args = ["oracle", "--nx", "512", "--t-end", "0.5", "--times", "0,0.5", "--diffusion-only", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    header, data = read_csv(tmp_path / snapshot_filename(0.5))
    assert header == ["x", "u"]
    nu = 0.01 / np.pi
    exact = np.exp(-nu * (2 * np.pi) ** 2 * 0.5) * np.sin(2 * np.pi * data[:, 0])
    assert np.max(np.abs(data[:, 1] - exact)) < 1e-4
    index = json.loads((tmp_path / "snapshots.json").read_text())
    assert abs(index[1]["mean"] - index[0]["mean"]) < 1e-12


def test_oracle_instability_exit_3(tmp_path, monkeypatch):
    import pinnforensics.oracle as oracle

    monkeypatch.setattr(oracle, "stable_dt", lambda u, dx, nu, cfl, advect=True: 2 * dx * dx / nu)
    assert cli.main(["oracle", "--nx", "128", "--out", str(tmp_path)]) == cli.EXIT_DIVERGED


# ---------------------------------------------------------------- compare


def _write_prediction(path, params, t, factor=1.0, n=128):
    x = np.arange(n) / n
    write_csv(path, ["x", "u"], zip(x, factor * predict_field(params, x, t)))


def test_compare_identical_and_halved(tmp_path):
    params = init_params([2, 8, 1], seed=3)
    save_dump(WeightDump(params, PinnConfig(hidden_layers=1, width=8).to_dict()), tmp_path / "d.pfwd")
    same = tmp_path / snapshot_filename(0.25)
    (tmp_path / "half").mkdir()
    double = tmp_path / "half" / snapshot_filename(0.5)
    _write_prediction(same, params, 0.25)
    _write_prediction(double, params, 0.5, factor=2.0)
    assert cli.main(["compare", str(tmp_path / "d.pfwd"), str(same), str(double), "--out", str(tmp_path / "c")]) == 0
    _, rows = read_csv(tmp_path / "c/compare.csv")
    assert rows[0, 1] == 0.0
    assert rows[1, 1] == pytest.approx(0.5, rel=1e-12)
    assert (tmp_path / "c/compare.md").read_text().startswith("| t |")


def test_compare_grid_mismatch_exit_6(tmp_path):
    params = init_params([2, 4, 1], seed=0)
    save_dump(WeightDump(params, PinnConfig().to_dict()), tmp_path / "d.pfwd")
    outside = tmp_path / snapshot_filename(0.5)
    write_csv(outside, ["x", "u"], zip(np.linspace(0, 2, 10), np.ones(10)))
    assert cli.main(["compare", str(tmp_path / "d.pfwd"), str(outside), "--out", str(tmp_path)]) == cli.EXIT_GRID
    ragged = tmp_path / "r"
    ragged.mkdir()
    bad = ragged / snapshot_filename(0.5)
    write_csv(bad, ["x", "u"], zip([0.0, 0.1, 0.5], [1.0, 1.0, 1.0]))
    assert cli.main(["compare", str(tmp_path / "d.pfwd"), str(bad), "--out", str(tmp_path)]) == cli.EXIT_GRID


def test_csv_locale_independent_round_trip(tmp_path):
    vals = [0.1, 1e-300, -2.5e17, 1 / 3]
    write_csv(tmp_path / "v.csv", ["v"], [[v] for v in vals])
    text = (tmp_path / "v.csv").read_text()
    assert "," not in text.splitlines()[1]
    assert read_csv(tmp_path / "v.csv")[1][:, 0].tolist() == vals


def test_analyze_untrained_dump_with_zero_biases(tiny_cfg, tmp_path):
    assert cli.main(["train", str(tiny_cfg), "--set", "steps = 0", "--out", str(tmp_path)]) == 0
    assert cli.main(["analyze", str(tmp_path / "weights.pfwd"), str(tmp_path / "an")]) == 0
    assert (tmp_path / "an/layer1_weights_kde.csv").exists()
    assert not (tmp_path / "an/layer1_biases_kde.csv").exists()

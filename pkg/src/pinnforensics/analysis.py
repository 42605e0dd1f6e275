"""The full forensic battery over the square hidden layers of a network."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import forensics as fx
from .nnet import NetworkParams
from .pdelab import transformer_vs_boltzmann_contrast

BAND_K = 10
STRUCTURED_K1 = 0.99
BAND_DIFF_TOL = 0.1


@dataclass
class LayerAnalysis:
    layer_index: int  # position in the network, 0-based
    hidden_index: int  # 1-based among square hidden matrices
    weights: fx.DistributionFit
    biases: fx.DistributionFit
    weight_kde: fx.KDEFit | None
    bias_kde: fx.KDEFit | None
    eigenvalues: np.ndarray  # of the entry-normalized matrix
    radius: float
    singular_values: np.ndarray  # raw weights, descending
    baseline_singular_values: np.ndarray
    band_plain: np.ndarray
    band_periodic: np.ndarray
    baseline_band_plain: np.ndarray
    drop: fx.DropReport
    contrast: dict

    @property
    def sigma_max(self):
        return float(self.singular_values[0])

    @property
    def band_k(self):
        return float(self.band_plain[min(BAND_K, self.band_plain.size - 1)])

    @property
    def baseline_band_k(self):
        return float(self.baseline_band_plain[min(BAND_K, self.baseline_band_plain.size - 1)])

    @property
    def structured(self):
        k1 = float(self.band_plain[min(1, self.band_plain.size - 1)])
        return k1 > STRUCTURED_K1 or abs(self.band_k - self.baseline_band_k) >= BAND_DIFF_TOL


@dataclass
class DumpAnalysis:
    layers: list
    circular: fx.CircularLawStats | None
    notes: list = field(default_factory=list)

    def summary(self) -> dict:
        """Scalar statistics; non-finite values become ``None`` with a reason."""
        nulls = {}

        def clean(value, path):
            if isinstance(value, (bool, np.bool_)):
                return bool(value)
            if isinstance(value, (int, np.integer)):
                return int(value)
            v = float(value)
            if math.isfinite(v):
                return v
            nulls[path] = "non-finite" if not math.isnan(v) else "not-computed (too few or constant samples)"
            return None

        layers = []
        for la in self.layers:
            p = f"layers[{la.hidden_index}]"
            entry = {
                "layer_index": la.layer_index,
                "hidden_index": la.hidden_index,
                "weights": {k: clean(v, f"{p}.weights.{k}") for k, v in la.weights.as_dict().items()},
                "biases": {k: clean(v, f"{p}.biases.{k}") for k, v in la.biases.as_dict().items()},
                "spectral": {
                    "radius_q99": clean(la.radius, f"{p}.radius"),
                    "sigma_max": clean(la.sigma_max, f"{p}.sigma_max"),
                    "sigma_max_below_1": bool(la.sigma_max < 1.0),
                    "top3_singular": [clean(v, f"{p}.top3") for v in la.drop.top],
                    "baseline_top3_mean": [clean(v, f"{p}.baseline_top3") for v in la.drop.baseline_mean],
                    "top3_excess": [clean(v, f"{p}.top3_excess") for v in la.drop.excess],
                    "top3_zscore": [clean(v, f"{p}.top3_z") for v in la.drop.zscore],
                    "drop_detected": la.drop.fired,
                    "band_energy_k1": clean(la.band_plain[min(1, la.band_plain.size - 1)], f"{p}.band1"),
                    f"band_energy_k{BAND_K}": clean(la.band_k, f"{p}.band"),
                    f"band_energy_k{BAND_K}_periodic": clean(
                        la.band_periodic[min(BAND_K, la.band_periodic.size - 1)], f"{p}.bandp"
                    ),
                    f"baseline_band_energy_k{BAND_K}": clean(la.baseline_band_k, f"{p}.baseband"),
                    "band_energy_diff": clean(abs(la.band_k - la.baseline_band_k), f"{p}.banddiff"),
                },
                "contrast": {k: clean(v, f"{p}.contrast.{k}") for k, v in la.contrast.items() if k != "layer"},
                "flags": {
                    "structured": bool(la.structured),
                    "consistent_with_random_baseline": not la.structured,
                    "low_confidence_bias_fit": bool(la.biases.low_confidence),
                },
            }
            layers.append(entry)
        out = {"layers": layers, "n_square_layers": len(self.layers)}
        if self.circular is not None:
            c = self.circular
            out["circular_law"] = {
                "normalization": "entry-std",
                "radii_q99": [clean(r, "circular.radii") for r in c.radii],
                "mean_radius": clean(c.mean_radius, "circular.mean_radius"),
                "radius_rel_spread": clean(c.radius_rel_spread, "circular.spread"),
                "outliers": [int(o) for o in c.outliers],
                "inside_1p1_fraction": [clean(f, "circular.inside") for f in c.inside_fraction],
            }
        else:
            out["circular_law"] = None
            nulls["circular_law"] = "fewer-than-two-square-layers"
        out["flags"] = {
            "all_sigma_max_below_1": all(la.sigma_max < 1.0 for la in self.layers),
            "all_consistent_with_random_baseline": all(not la.structured for la in self.layers),
            "any_structured": any(la.structured for la in self.layers),
        }
        out["null_reasons"] = nulls
        out["notes"] = list(self.notes)
        return out


def square_hidden_layers(params: NetworkParams):
    """``(position, W, b)`` for every layer whose weight matrix is square."""
    return [(i, w, b) for i, (w, b) in enumerate(params.layers) if w.shape[0] == w.shape[1] and w.shape[0] > 1]


def analyze_layer(layer_index, hidden_index, w, b, seed=0, n_baselines=20) -> LayerAnalysis:
    wfit, wkde = fx.fit_distribution(w.ravel(), seed=seed)
    bfit, bkde = fx.fit_distribution(b, seed=seed)
    eig = fx.eigenspectrum(fx.normalize_entries(w))
    sv = fx.singular_values(w)
    base = fx.matched_baseline(w, seed=seed + 1000 * hidden_index)
    plain, periodic = fx.band_energy_curve(w)
    base_plain, _ = fx.band_energy_curve(base)
    drop = fx.singular_drop_detector(w, n_baselines=n_baselines, seed=seed + 1000 * hidden_index + 1)
    contrast = transformer_vs_boltzmann_contrast([w])[0]
    return LayerAnalysis(
        layer_index=layer_index,
        hidden_index=hidden_index,
        weights=wfit,
        biases=bfit,
        weight_kde=wkde,
        bias_kde=bkde,
        eigenvalues=eig,
        radius=fx.radius_quantile(eig),
        singular_values=sv,
        baseline_singular_values=fx.singular_values(base),
        band_plain=plain,
        band_periodic=periodic,
        baseline_band_plain=base_plain,
        drop=drop,
        contrast=contrast,
    )


def analyze_params(params: NetworkParams, seed=0) -> DumpAnalysis:
    square = square_hidden_layers(params)
    if not square:
        raise ValueError("network has no square hidden layer to analyze")
    notes = []
    layers = []
    for h, (i, w, b) in enumerate(square, start=1):
        layers.append(analyze_layer(i, h, w, b, seed=seed))
    circular = None
    sizes = {w.shape for _, w, _ in square}
    if len(square) >= 2 and len(sizes) == 1:
        circular = fx.circular_law_stats([w for _, w, _ in square])
    elif len(square) >= 2:
        notes.append("square layers differ in size; circular-law spread skipped")
    if any(la.biases.low_confidence for la in layers):
        notes.append(f"bias fits use fewer than {fx.LOW_CONFIDENCE_N} samples and are low-confidence")
    return DumpAnalysis(layers, circular, notes)

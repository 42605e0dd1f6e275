"""CSV, JSON, manifest and quick-look SVG output.

CSV numbers are written with ``repr``-style shortest round-trip formatting,
never through the locale, so files read back bit-exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .dump import atomic_write


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    atomic_write(path, buf.getvalue().encode("utf-8"))


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    return header, np.array(rows, dtype=np.float64).reshape(len(rows), len(header))


def write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)
    atomic_write(path, (text + "\n").encode("utf-8"))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def write_manifest(out_dir, command, config: dict, seed=None, outputs=()):
    """Record what produced the files in ``out_dir``.

    Only deterministic facts go in, so identical runs write identical
    manifests.
    """
    manifest = {
        "command": command,
        "config": config,
        "config_sha256": config_hash(config),
        "seed": seed,
        "versions": {
            "pinnforensics": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
            "kernel_backend": kernels.BACKEND,
        },
        "outputs": sorted(outputs),
    }
    write_json(Path(out_dir) / "manifest.json", manifest)
    return manifest


def snapshot_filename(t) -> str:
    return f"snapshot_t{t:.6f}.csv"


def parse_snapshot_time(path) -> float:
    stem = Path(path).stem
    if not stem.startswith("snapshot_t"):
        raise ValueError(f"{path} is not a snapshot file")
    return float(stem[len("snapshot_t") :])


# --------------------------------------------------------------------------
# minimal SVG plotter


class SvgPlot:
    """Just enough plotting for quick looks: polylines, dots, circles, axes."""

    def __init__(self, xlim, ylim, width=480, height=360, title="", equal=False, margin=40):
        self.xlim, self.ylim = xlim, ylim
        self.w, self.h, self.m = width, height, margin
        self.title = title
        if equal:
            span = max(xlim[1] - xlim[0], ylim[1] - ylim[0])
            cx, cy = 0.5 * sum(xlim), 0.5 * sum(ylim)
            self.xlim = (cx - span / 2, cx + span / 2)
            self.ylim = (cy - span / 2, cy + span / 2)
            self.w = self.h = max(width, height)
        self.items = []

    def _px(self, x, y):
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        px = self.m + (x - x0) / (x1 - x0) * (self.w - 2 * self.m)
        py = self.h - self.m - (y - y0) / (y1 - y0) * (self.h - 2 * self.m)
        return px, py

    def line(self, x, y, color="#1f77b4", width=1.5):
        pts = " ".join("%.2f,%.2f" % self._px(a, b) for a, b in zip(x, y) if np.isfinite(a) and np.isfinite(b))
        self.items.append(f'<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{pts}"/>')

    def dots(self, x, y, color="#1f77b4", r=1.5):
        for a, b in zip(x, y):
            px, py = self._px(a, b)
            self.items.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{r}" fill="{color}"/>')

    def circle(self, cx, cy, radius, color="#d62728"):
        px, py = self._px(cx, cy)
        rx = radius / (self.xlim[1] - self.xlim[0]) * (self.w - 2 * self.m)
        self.items.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{rx:.2f}" fill="none" stroke="{color}"/>')

    def render(self) -> str:
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        ax = [
            f'<rect x="{self.m}" y="{self.m}" width="{self.w - 2 * self.m}" height="{self.h - 2 * self.m}" '
            'fill="none" stroke="#444"/>',
            f'<text x="{self.w / 2}" y="{self.m / 2}" text-anchor="middle" font-size="13">{self.title}</text>',
            f'<text x="{self.m}" y="{self.h - self.m / 3}" font-size="10">{x0:.3g}</text>',
            f'<text x="{self.w - self.m}" y="{self.h - self.m / 3}" font-size="10" text-anchor="end">{x1:.3g}</text>',
            f'<text x="2" y="{self.h - self.m}" font-size="10">{y0:.3g}</text>',
            f'<text x="2" y="{self.m + 10}" font-size="10">{y1:.3g}</text>',
        ]
        body = "\n".join(ax + self.items)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
            f'viewBox="0 0 {self.w} {self.h}">\n{body}\n</svg>\n'
        )

    def save(self, path):
        atomic_write(path, self.render().encode("utf-8"))


def _lim(values, pad=0.05):
    lo, hi = float(np.nanmin(values)), float(np.nanmax(values))
    if hi == lo:
        hi = lo + 1.0
    d = (hi - lo) * pad
    return lo - d, hi + d

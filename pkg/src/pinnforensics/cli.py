"""Command-line entry point: ``pinnforensics {train,analyze,kernel,oracle,compare}``.

Exit codes: 0 success, 1 other failure, 2 bad config, 3 divergence or
solver instability, 4 corrupt dump, 5 under-resolved kernel, 6 grid
mismatch. The output directory defaults to ``$PINNFORENSICS_OUT`` when set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .analysis import BAND_K, analyze_params
from .dump import WeightDump, load_dump, save_dump
from .errors import ConfigError, DivergenceError, DumpIntegrityError, GridMismatchError, InstabilityError, UnderResolvedError
from .forensics import band_energy_curve, gen_gaussian_pdf
from .oracle import FieldSnapshot, periodic_grid, relative_l2_error, solve_burgers
from .pdelab import KernelSpec, burgers_kernel_matrix
from .report import SvgPlot, _lim, parse_snapshot_time, read_csv, snapshot_filename, write_csv, write_json, write_manifest
from .trainer import PinnConfig, predict_field, train

EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_CORRUPT = 4
EXIT_UNDERRESOLVED = 5
EXIT_GRID = 6

LAYER_ACCOUNTING = "input(2) -> hidden_layers x width (tanh) -> output(1); square hidden-to-hidden matrices are analyzed"


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Keys mirror :class:`PinnConfig`."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value", key=line)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key", key="")
        out[key] = value.strip("\"'")
    return out


def load_config(path, overrides=()) -> PinnConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", key=str(path)) from None
    data = parse_config_text(text)
    data.update(parse_config_text("\n".join(overrides)))
    return PinnConfig.from_dict(data)


def _out_dir(arg):
    out = arg or os.environ.get("PINNFORENSICS_OUT") or "."
    Path(out).mkdir(parents=True, exist_ok=True)
    return Path(out)


def _dump_meta(config: PinnConfig):
    return {
        "kernel_backend": kernels.BACKEND,
        "init_scheme": config.init,
        "layer_accounting": LAYER_ACCOUNTING,
        "bias_convention": "z' = f(W z - b)",
    }


def _write_history(path, history):
    rows = zip(history.step, history.total, history.residual, history.ic, history.bc, history.wall_time)
    write_csv(path, ["step", "total", "residual", "ic", "bc", "wall_time"], rows)


def cmd_train(args):
    config = load_config(args.config, args.set or ())
    out = _out_dir(args.out)

    def progress(step, history):
        print(f"step {step:6d}  loss {history.total[-1]:.4e}  "
              f"(res {history.residual[-1]:.2e} ic {history.ic[-1]:.2e} bc {history.bc[-1]:.2e})", flush=True)

    try:
        params, history = train(config, progress if args.log_every else None, args.log_every)
    except DivergenceError as exc:
        ckpt = out / "checkpoint.pfwd"
        meta = dict(_dump_meta(config), diverged_at_step=exc.step)
        save_dump(WeightDump(exc.params, config.to_dict(), exc.history.summary(), meta), ckpt)
        print(f"error: training diverged at step {exc.step}; last finite checkpoint: {ckpt}", file=sys.stderr)
        return EXIT_DIVERGED
    dump_path = out / "weights.pfwd"
    save_dump(WeightDump(params, config.to_dict(), history.summary(), _dump_meta(config)), dump_path)
    _write_history(out / "history.csv", history)
    write_manifest(out, "train", config.to_dict(), config.seed, ["weights.pfwd", "history.csv"])
    print(f"wrote {dump_path}")
    return 0


def _write_layer_files(out, la, svg):
    h = la.hidden_index
    files = []
    name = f"layer{h}_eigenvalues.csv"
    write_csv(out / name, ["re", "im"], zip(la.eigenvalues.real, la.eigenvalues.imag))
    files.append(name)
    name = f"layer{h}_singular_values.csv"
    write_csv(out / name, ["index", "sigma", "baseline_sigma"],
              zip(range(1, la.singular_values.size + 1), la.singular_values, la.baseline_singular_values))
    files.append(name)
    name = f"layer{h}_band_energy.csv"
    write_csv(out / name, ["k", "plain", "periodic", "baseline_plain"],
              zip(range(la.band_plain.size), la.band_plain, la.band_periodic, la.baseline_band_plain))
    files.append(name)
    for kind, fit, kde in (("weights", la.weights, la.weight_kde), ("biases", la.biases, la.bias_kde)):
        if kde is None:  # constant sample, nothing to smooth
            continue
        pad = 3.0 * math.sqrt(kde.theta)
        lo, hi = fit.mu - 6 * fit.sigma - pad, fit.mu + 6 * fit.sigma + pad
        grid = np.linspace(lo, hi, 512)
        dens = kde.density(grid)
        gg = gen_gaussian_pdf(grid, fit.mu, fit.alpha, fit.beta) if np.isfinite(fit.beta) else np.full(grid.size, np.nan)
        name = f"layer{h}_{kind}_kde.csv"
        write_csv(out / name, ["x", "kde_density", "gen_gaussian_density"], zip(grid, dens, gg))
        files.append(name)
        if svg:
            plot = SvgPlot((lo, hi), _lim(np.concatenate([dens, gg[np.isfinite(gg)]])),
                           title=f"layer {h} {kind}: beta={fit.beta:.2f} kurt={fit.kurtosis:.2f}")
            plot.line(grid, dens)
            if np.all(np.isfinite(gg)):
                plot.line(grid, gg, color="#ff7f0e")
            name = f"layer{h}_{kind}_density.svg"
            plot.save(out / name)
            files.append(name)
    return files


def cmd_analyze(args):
    try:
        dump = load_dump(args.dump)
    except DumpIntegrityError as exc:
        print(f"error: corrupt dump ({exc.check}): {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except OSError as exc:
        print(f"error: cannot read dump: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    out = _out_dir(args.out)
    result = analyze_params(dump.params, seed=args.seed)
    summary = result.summary()
    summary["dump"] = {"config": dump.config, "history": dump.history, "meta": dump.meta}
    files = ["summary.json"]
    for la in result.layers:
        files += _write_layer_files(out, la, not args.no_svg)
    if not args.no_svg:
        eigs = np.concatenate([la.eigenvalues for la in result.layers])
        plot = SvgPlot((-1.5, 1.5), (-1.5, 1.5), equal=True, title="normalized eigenvalues, all square layers")
        plot.dots(eigs.real, eigs.imag, r=1.2)
        plot.circle(0.0, 0.0, 1.0)
        plot.save(out / "eigenvalues.svg")
        sv = [la.singular_values for la in result.layers]
        top = max(float(np.max(s)) for s in sv + [la.baseline_singular_values for la in result.layers])
        plot = SvgPlot((1, sv[0].size), (0, top * 1.05), title="singular values (descending); grey: matched Gaussian")
        for la in result.layers:
            idx = np.arange(1, la.singular_values.size + 1)
            plot.line(idx, la.baseline_singular_values, color="#bbbbbb", width=1)
            plot.line(idx, la.singular_values)
        plot.save(out / "singular_values.svg")
        files += ["eigenvalues.svg", "singular_values.svg"]
    write_json(out / "summary.json", summary)
    write_manifest(out, "analyze", {"dump_config": dump.config, "seed": args.seed}, args.seed, files)
    flags = summary["flags"]
    print(f"analyzed {len(result.layers)} square layers -> {out}")
    print(f"  all sigma_max < 1: {flags['all_sigma_max_below_1']}")
    print(f"  consistent with random baseline: {flags['all_consistent_with_random_baseline']}")
    return 0


def _u_field(source, grid):
    if source == "zero":
        return np.zeros_like(grid)
    if source == "sin":
        return np.sin(2.0 * np.pi * grid)
    if source.startswith("file:"):
        _, data = read_csv(source[5:])
        u = data[:, -1]
        if u.size != grid.size:
            raise ValueError(f"field file has {u.size} values, grid has {grid.size}")
        return u
    raise ValueError(f"unknown u-field source {source!r}")


def cmd_kernel(args):
    out = _out_dir(args.out)
    n = args.n
    dx = 1.0 / n
    h = args.h if args.h is not None else args.h_cells * dx
    nu = _parse_float(args.nu)
    grid = periodic_grid(n)
    spec = KernelSpec(h, n, nu, _u_field(args.u_field, grid))
    try:
        m = burgers_kernel_matrix(spec)
    except UnderResolvedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNDERRESOLVED
    write_csv(out / "kernel_matrix.csv", [f"j{j}" for j in range(n)], m)
    plain, periodic = band_energy_curve(m)
    write_csv(out / "kernel_band_energy.csv", ["k", "plain", "periodic"], zip(range(n), plain, periodic))
    report = {
        "n": n,
        "dx": dx,
        "h": h,
        "nu": nu,
        "u_field": args.u_field,
        "symmetric": bool(np.allclose(m, m.T, rtol=0, atol=1e-12)),
        f"band_energy_k{BAND_K}": float(plain[min(BAND_K, n - 1)]),
        "band_energy_k_5h": float(plain[min(int(math.ceil(5 * h / dx)), n - 1)]),
    }
    write_json(out / "kernel_report.json", report)
    write_manifest(out, "kernel", report, None, ["kernel_matrix.csv", "kernel_band_energy.csv", "kernel_report.json"])
    print(json.dumps(report, sort_keys=True))
    return 0


def _parse_float(text):
    text = str(text).strip().lower()
    if text.endswith("/pi"):
        return float(text[:-3]) / math.pi
    return float(text)


def cmd_oracle(args):
    out = _out_dir(args.out)
    nu = _parse_float(args.nu)
    times = [float(s) for s in args.times.split(",")] if args.times else [0.0, args.t_end]
    try:
        snaps = solve_burgers(nu, args.nx, args.cfl, args.t_end, times=times, advect=not args.diffusion_only)
    except InstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    files = []
    index = []
    for s in snaps:
        name = snapshot_filename(s.t)
        write_csv(out / name, ["x", "u"], zip(s.grid, s.u))
        files.append(name)
        index.append({"t": s.t, "file": name, "mean": float(s.u.mean()), "energy": float(np.mean(s.u**2))})
    write_json(out / "snapshots.json", index)
    cfg = {"nu": nu, "nx": args.nx, "cfl": args.cfl, "t_end": args.t_end, "times": times,
           "diffusion_only": bool(args.diffusion_only)}
    write_manifest(out, "oracle", cfg, None, files + ["snapshots.json"])
    for row in index:
        print(f"t={row['t']:.6f}  mean={row['mean']:+.3e}  energy={row['energy']:.6e}")
    return 0


def compare_rows(dump: WeightDump, snaps):
    x_min = float(dump.config.get("x_min", 0.0))
    x_max = float(dump.config.get("x_max", 1.0))
    t_min = float(dump.config.get("t_min", 0.0))
    t_max = float(dump.config.get("t_max", 1.0))
    rows = []
    for s in snaps:
        if s.grid[0] < x_min - 1e-12 or s.grid[-1] > x_max + 1e-12 or not t_min <= s.t <= t_max:
            raise GridMismatchError(f"snapshot t={s.t} lies outside the trained domain")
        pred = FieldSnapshot(s.t, s.grid, predict_field(dump.params, s.grid, s.t))
        rows.append((s.t, relative_l2_error(pred, s)))
    return rows


def cmd_compare(args):
    try:
        dump = load_dump(args.dump)
    except DumpIntegrityError as exc:
        print(f"error: corrupt dump ({exc.check}): {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    out = _out_dir(args.out)
    try:
        snaps = []
        for path in args.snapshots:
            _, data = read_csv(path)
            snaps.append(FieldSnapshot(parse_snapshot_time(path), data[:, 0], data[:, 1]))
        rows = compare_rows(dump, snaps)
    except GridMismatchError as exc:
        print(f"error: grid mismatch: {exc}", file=sys.stderr)
        return EXIT_GRID
    write_csv(out / "compare.csv", ["t", "relative_l2_error"], rows)
    lines = ["| t | relative L2 error |", "|---|---|"] + [f"| {t:.6f} | {e:.4e} |" for t, e in rows]
    (out / "compare.md").write_text("\n".join(lines) + "\n")
    write_manifest(out, "compare", {"dump": str(args.dump), "snapshots": [str(p) for p in args.snapshots]}, None,
                   ["compare.csv", "compare.md"])
    print("\n".join(lines))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="pinnforensics", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train the Burgers PINN and write a weight dump")
    t.add_argument("config", help="key = value config file")
    t.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    t.add_argument("--out", help="output directory")
    t.add_argument("--log-every", type=int, default=0)
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("analyze", help="run the forensic battery on a weight dump")
    a.add_argument("dump")
    a.add_argument("out", nargs="?")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--no-svg", action="store_true")
    a.set_defaults(func=cmd_analyze)

    k = sub.add_parser("kernel", help="write the Burgers weight-kernel matrix and its band profile")
    k.add_argument("--nu", default="0.01/pi")
    k.add_argument("--n", type=int, default=100)
    g = k.add_mutually_exclusive_group()
    g.add_argument("--h", type=float)
    g.add_argument("--h-cells", type=float, default=3.0)
    k.add_argument("--u-field", default="sin", help="zero | sin | file:PATH (CSV, last column)")
    k.add_argument("--out")
    k.set_defaults(func=cmd_kernel)

    o = sub.add_parser("oracle", help="finite-difference reference solution snapshots")
    o.add_argument("--nu", default="0.01/pi")
    o.add_argument("--nx", type=int, default=1024)
    o.add_argument("--cfl", type=float, default=0.4)
    o.add_argument("--t-end", type=float, default=0.5)
    o.add_argument("--times", help="comma-separated snapshot times")
    o.add_argument("--diffusion-only", action="store_true")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("compare", help="relative L2 error of a dump against oracle snapshots")
    c.add_argument("dump")
    c.add_argument("snapshots", nargs="+")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: bad config key {exc.key!r}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Exit codes: 0 ok, 2 configuration or input-format error, 3 numerical
failure, 4 analysis failure (no fringes to fit).
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import _backend
from . import materials as mat
from .collection import (
    EnhancementMap,
    collected_power,
    enhancement,
    enhancement_map,
    normalized_model_enhancement,
)
from .config import ConfigError, grid, load_config
from .dipole import GEOMETRIC_WEIGHTS, NV_AXES_100, REPORTED_WEIGHTS, angular_pattern, orientation_weights, total_decay
from .exceptions import (
    ColumnTooShort,
    CoverageError,
    DegenerateInterface,
    DivisionDegenerate,
    GridMismatch,
    NoFringes,
    OutOfRange,
    ParseError,
    QuadratureFailure,
    ValidationError,
    ZeroReference,
    ZeroSpectrum,
)
from .pipeline import (
    ColumnModel,
    enhancement_from_scan,
    estimate_d0,
    load_reference,
    load_scan,
    synthetic_reference,
)

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_ANALYSIS = 4


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("-c", "--config", type=Path, help="YAML run configuration (defaults if omitted)")
    p.add_argument("-o", "--output-dir", type=Path, help="override output.directory")
    p.add_argument("-j", "--workers", type=int, help="override worker count")
    img = p.add_mutually_exclusive_group()
    img.add_argument("--image", dest="image", action="store_true", default=None, help="render plots")
    img.add_argument("--no-image", dest="image", action="store_false", help="CSV output only")
    return p


def _setup(args):
    cfg = load_config(args.config)
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    elif args.config is not None and not cfg.output_dir.is_absolute():
        cfg.output_dir = cfg.base_dir / cfg.output_dir
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers", "must be >= 1")
        cfg.workers = args.workers
    if args.image is not None:
        cfg.image = args.image
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg


def _header(cfg, **extra):
    w = cfg.env.weights
    head = {
        "config_sha256": cfg.fingerprint,
        "numerical_aperture": cfg.geometry.numerical_aperture,
        "bottom_transmission": cfg.geometry.include_bottom_transmission,
        "depth_nm": cfg.env.depth,
        "a_parallel": w.a_parallel,
        "a_perpendicular": w.a_perpendicular,
    }
    head.update(extra)
    return head


def _reference_spectrum(cfg, lambda_grid):
    if cfg.reference in (None, "synthetic"):
        return synthetic_reference(lambda_grid)
    path = Path(cfg.reference)
    if not path.is_absolute():
        path = cfg.base_dir / path
    if not path.exists():
        raise ConfigError("collection.reference", f"file not found: {path}")
    return load_reference(path)


def cmd_map(args):
    cfg = _setup(args)
    emap = enhancement_map(cfg.d_grid, cfg.lambda_grid, cfg.geometry, cfg.env, workers=cfg.workers)
    if cfg.normalization == "unit_counts":
        emap = normalized_model_enhancement(emap, _reference_spectrum(cfg, cfg.lambda_grid))
        emap.meta["reference"] = cfg.reference
    meta = {"config_sha256": cfg.fingerprint}
    meta.update(emap.meta)
    emap.meta = meta
    out = emap.to_csv(cfg.output_dir / "enhancement_map.csv")
    print(f"wrote {out} ({len(emap.d_grid)} distances x {len(emap.lambda_grid)} wavelengths)")
    if cfg.image:
        png = emap.to_png(cfg.output_dir / "enhancement_map.png", title=f"model E ({emap.meta['normalization']})")
        print(f"wrote {png}")
    return 0


def cmd_pattern(args):
    cfg = _setup(args)
    env = cfg.environment(args.d)
    lam = args.wavelength
    theta = np.linspace(0.0, math.pi / 2, args.samples, endpoint=False)
    pat = angular_pattern(env, lam, theta)
    sin_max = cfg.geometry.sin_max(env.n_host)
    frac = pat.cone_fraction(env.weights, sin_max)
    head = _header(cfg, d_nm=args.d, wavelength_nm=lam, theta_max_rad=math.asin(sin_max),
                   cone_fraction=frac, collected_power=collected_power(env, lam, cfg.geometry),
                   enhancement=enhancement(env, lam, cfg.geometry))
    stem = f"pattern_d{args.d:g}nm_l{lam:g}nm"
    out = pat.to_csv(cfg.output_dir / f"{stem}.csv", header=head)
    print(f"wrote {out} (NA-cone fraction {frac:.4f})")
    if cfg.image:
        _polar_plot(pat, env.weights, math.asin(sin_max), cfg.output_dir / f"{stem}.png",
                    f"d = {args.d:g} nm, lambda = {lam:g} nm")
    return 0


def _polar_plot(pat, weights, theta_max, path, title):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig = plt.figure(figsize=(4.5, 4.5))
    ax = fig.add_subplot(projection="polar")
    w = pat.weighted(weights)
    # downward emission drawn in the lower half-plane
    for sign in (1, -1):
        ax.plot(-math.pi / 2 + sign * pat.theta, w, color="C0")
    for sign in (1, -1):
        ax.plot([-math.pi / 2 + sign * theta_max] * 2, [0, w.max()], color="C3", lw=1)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    print(f"wrote {path}")


def _purcell_point(task):
    env, lam = task
    r = total_decay(env, lam)
    return r.total, r.radiative_down, r.radiative_up, r.nonradiative


def cmd_purcell(args):
    cfg = _setup(args)
    pc = cfg.raw.get("purcell") or {}
    sweep = args.sweep or pc.get("sweep", "distance")
    if sweep == "distance":
        lam = args.wavelength if args.wavelength is not None else float(pc.get("wavelength_nm", 700.0))
        xs = grid(pc.get("distance_grid_nm"), "purcell.distance_grid_nm")
        tasks = [(cfg.environment(d), lam) for d in xs]
        col, extra = "d_nm", {"wavelength_nm": lam}
    elif sweep == "wavelength":
        d = args.d if args.d is not None else float(pc.get("d_nm", 1000.0))
        xs = grid(pc.get("wavelength_grid_nm"), "purcell.wavelength_grid_nm")
        env = cfg.environment(d)
        tasks = [(env, lam) for lam in xs]
        col, extra = "lambda_nm", {"d_nm": d}
    else:
        raise ConfigError("purcell.sweep", "must be 'distance' or 'wavelength'")
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(_purcell_point, tasks))
    else:
        rows = [_purcell_point(t) for t in tasks]
    lines = [f"# {k}: {v}" for k, v in _header(cfg, sweep=sweep, **extra).items()]
    lines.append(f"{col},total,radiative_down,radiative_up,nonradiative")
    for x, row in zip(xs, rows):
        lines.append(",".join(repr(float(v)) for v in (x, *row)))
    out = cfg.output_dir / f"purcell_{sweep}.csv"
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    totals = [r[0] for r in rows]
    print(f"wrote {out} (Gamma/Gamma0 from {min(totals):.4f} to {max(totals):.4f})")
    return 0


def cmd_enhance(args):
    cfg = _setup(args)
    scan = load_scan(args.scan)
    reference = load_reference(args.reference)
    emap = enhancement_from_scan(scan, reference)
    emap.meta = {"config_sha256": cfg.fingerprint, "scan": str(args.scan),
                 "reference": str(args.reference), **emap.meta}
    out = emap.to_csv(cfg.output_dir / "measured_enhancement.csv")
    print(f"wrote {out}")
    if cfg.image:
        print(f"wrote {emap.to_png(cfg.output_dir / 'measured_enhancement.png', title='measured E')}")
    return 0


def cmd_fit_d0(args):
    cfg = _setup(args)
    fit = cfg.raw.get("fit_d0") or {}
    measured = EnhancementMap.from_csv(args.map)
    lam = args.wavelength
    measured.column(lam)
    search = tuple(float(x) for x in fit.get("search_nm", (0.0, 2000.0)))
    resolution = float(fit.get("resolution_nm", 5.0))
    window = int(fit.get("smoothing_window", 5))
    prominence = float(fit.get("prominence", 0.05))
    stem = cfg.output_dir / f"fit_d0_l{lam:g}nm"
    try:
        model = ColumnModel(cfg.env, cfg.geometry, lam, measured.d_grid, search, resolution,
                            workers=cfg.workers)
    except ValueError as exc:
        raise ConfigError("fit_d0.resolution_nm", str(exc)) from None
    try:
        est = estimate_d0(measured, model, lam, search, resolution, window, prominence)
    except NoFringes:
        diag = Path(f"{stem}_diagnostic.csv")
        col = measured.column(lam)
        lines = [f"# no fringe maxima found at {lam} nm; column data for inspection",
                 f"# config_sha256: {cfg.fingerprint}", "d_nm,E"]
        lines += [f"{d!r},{e!r}" for d, e in zip(measured.d_grid.tolist(), col.tolist())]
        diag.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {diag}", file=sys.stderr)
        raise
    report = [
        f"minimum mirror distance d0 = {est.d0:g} nm",
        f"rms fringe mismatch = {est.residual:.2f} nm",
        f"fringe maxima: {est.n_measured} measured, {est.n_model} model",
        f"wavelength = {lam:g} nm, search = [{search[0]:g}, {search[1]:g}] nm step {resolution:g} nm",
        f"config_sha256 = {cfg.fingerprint}",
    ]
    Path(f"{stem}.txt").write_text("\n".join(report) + "\n", encoding="utf-8")
    Path(f"{stem}.csv").write_text(
        f"# config_sha256: {cfg.fingerprint}\n"
        "wavelength_nm,d0_nm,rms_residual_nm,n_measured,n_model,poor_fit\n"
        f"{lam!r},{est.d0!r},{est.residual!r},{est.n_measured},{est.n_model},{int(est.poor_fit)}\n",
        encoding="utf-8",
    )
    print("\n".join(report))
    return 0


def cmd_materials(args):
    cfg = _setup(args)
    lams = args.wavelength or [700.0]
    print("material        lambda_nm        n          k            eps")
    for name, m in cfg.materials.items():
        if m is mat.IDEAL_MIRROR:
            continue
        for lam in lams:
            try:
                nk = mat.complex_index(m, lam)
            except OutOfRange:
                print(f"{name:<15} {lam:>9g}   (outside table span {m.span()})")
                continue
            eps = nk ** 2
            print(f"{name:<15} {lam:>9g}   {nk.real:8.4f}   {nk.imag:8.4f}   {eps.real:+.4f}{eps.imag:+.4f}j")
    geo = orientation_weights(NV_AXES_100)
    w = cfg.env.weights
    print(f"orientation weights in use: a_par = {w.a_parallel:.4f}, a_perp = {w.a_perpendicular:.4f}")
    print(f"geometric <111> under (100): a_par = {geo.a_parallel:.6f}, a_perp = {geo.a_perpendicular:.6f} "
          f"(reported values differ by {abs(REPORTED_WEIGHTS.a_parallel - GEOMETRIC_WEIGHTS.a_parallel):.4f})")
    print(f"kernel backend: {_backend.BACKEND}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nvmirror",
        description="Dipole emission and collected-power enhancement near a diamond surface facing a planar mirror.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    p = sub.add_parser("map", parents=[common], help="enhancement map E(d, lambda)")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("pattern", parents=[common], help="angular power density at one (d, lambda)")
    p.add_argument("--d", type=float, required=True, help="mirror distance (nm)")
    p.add_argument("--lambda", dest="wavelength", type=float, required=True, help="wavelength (nm)")
    p.add_argument("--samples", type=int, default=901, help="polar angle samples on [0, pi/2)")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("purcell", parents=[common], help="decay-rate sweep")
    p.add_argument("--sweep", choices=("distance", "wavelength"))
    p.add_argument("--lambda", dest="wavelength", type=float, help="fixed wavelength for distance sweeps")
    p.add_argument("--d", type=float, help="fixed distance for wavelength sweeps")
    p.set_defaults(func=cmd_purcell)

    p = sub.add_parser("enhance", parents=[common], help="measured enhancement from a distance scan")
    p.add_argument("scan", type=Path)
    p.add_argument("reference", type=Path)
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("fit-d0", parents=[common], help="fit the minimum mirror distance")
    p.add_argument("map", type=Path, help="measured enhancement map CSV")
    p.add_argument("--lambda", dest="wavelength", type=float, default=700.0)
    p.set_defaults(func=cmd_fit_d0)

    p = sub.add_parser("materials", parents=[common], help="print resolved refractive indices")
    p.add_argument("--lambda", dest="wavelength", type=float, action="append")
    p.set_defaults(func=cmd_materials)
    return parser


_CONFIG_ERRORS = (ConfigError, ParseError, ValidationError, OutOfRange, GridMismatch, CoverageError,
                  ZeroSpectrum, ZeroReference, FileNotFoundError)
_NUMERIC_ERRORS = (QuadratureFailure, DivisionDegenerate, DegenerateInterface)
_ANALYSIS_ERRORS = (NoFringes, ColumnTooShort)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"nvmirror: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"nvmirror: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _ANALYSIS_ERRORS as exc:
        print(f"nvmirror: analysis failure: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())

"""Collected power into an objective cone and the resulting enhancement maps.

The emitter's downward far field is integrated over host angles with
``sin(theta) <= NA / n_host``.  Enhancement is that power divided by the same
quantity with the mirror removed (host facing a semi-infinite gap medium).
The per-cell integration runs in :mod:`nvmirror._backend`.
"""
from __future__ import annotations

import hashlib
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from . import _backend
from .dipole import EmitterEnvironment
from .exceptions import DivisionDegenerate, GridMismatch, ParseError, QuadratureFailure, ValidationError
from .spectra import SpectrumRecord, normalize_spectrum, resample
from .stratified import StackOptics

__all__ = [
    "CollectionGeometry",
    "EnhancementMap",
    "collected_power",
    "enhancement",
    "enhancement_map",
    "normalized_model_enhancement",
    "pump_modulation",
    "reference_environment",
    "DEFAULT_LAMBDA_GRID",
    "DEFAULT_D_GRID",
]

THETA_RTOL = 1e-8
THETA_ATOL = 1e-15

DEFAULT_LAMBDA_GRID = np.arange(540.0, 901.0, 1.0)
DEFAULT_D_GRID = 500.0 + 10.0 * np.arange(2001)


@dataclass(frozen=True)
class CollectionGeometry:
    """Objective acceptance.

    ``numerical_aperture`` is in air; inside the host the half-angle is
    ``asin(NA / n_host)``.  With ``include_bottom_transmission`` each
    polarization is weighted by the host-to-air Fresnel power transmittance.
    """

    numerical_aperture: float = 0.35
    include_bottom_transmission: bool = False
    outside_index: float = 1.0

    def __post_init__(self):
        if not 0 < self.numerical_aperture <= self.outside_index:
            raise ValidationError(
                f"numerical aperture must lie in (0, {self.outside_index}], got {self.numerical_aperture}"
            )

    def sin_max(self, host_index):
        s = self.numerical_aperture / host_index
        if not s < 1:
            raise ValidationError("NA / n_host must be < 1")
        return s


def reference_environment(env: EmitterEnvironment) -> EmitterEnvironment:
    """The emitter with the mirror removed: host facing the semi-infinite gap medium."""
    return env.without_mirror()


def _kernel_args(env, wavelength, geom):
    eps, thick, ideal = env.upward_stack.resolve(wavelength)
    w = env.weights
    return (eps, thick, ideal), (float(wavelength), float(env.depth), w.a_parallel,
                                 w.a_perpendicular, geom.sin_max(env.n_host),
                                 geom.include_bottom_transmission, geom.outside_index,
                                 THETA_RTOL, THETA_ATOL)


def collected_power(env: EmitterEnvironment, wavelength, geom: CollectionGeometry = CollectionGeometry()):
    """Power inside the objective cone, in units of the bulk-host total power."""
    (eps, thick, ideal), rest = _kernel_args(env, wavelength, geom)
    value, err, ok = _backend.collected_power(eps, thick, ideal, *rest)
    if not ok:
        raise QuadratureFailure(f"theta integration did not converge at lambda = {wavelength} nm "
                                f"(error estimate {err:.3g})")
    return value


def _reference_power(env, wavelength, geom):
    p0 = collected_power(reference_environment(env), wavelength, geom)
    if not (np.isfinite(p0) and p0 > 1e-300):
        raise DivisionDegenerate(f"reference collected power {p0!r} at lambda = {wavelength} nm")
    return p0


def enhancement(env: EmitterEnvironment, wavelength, geom: CollectionGeometry = CollectionGeometry()):
    """Collected power with the mirror over collected power without it."""
    return collected_power(env, wavelength, geom) / _reference_power(env, wavelength, geom)


@dataclass
class EnhancementMap:
    """``values[i, j]`` is E at ``d_grid[i]`` and ``lambda_grid[j]``."""

    d_grid: np.ndarray
    lambda_grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.d_grid = np.asarray(self.d_grid, dtype=float)
        self.lambda_grid = np.asarray(self.lambda_grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.d_grid), len(self.lambda_grid)):
            raise ValidationError(
                f"values shape {self.values.shape} does not match grids "
                f"({len(self.d_grid)}, {len(self.lambda_grid)})"
            )

    def column(self, wavelength):
        """E(d) at one grid wavelength."""
        j = np.flatnonzero(np.isclose(self.lambda_grid, wavelength, rtol=0, atol=1e-9))
        if len(j) == 0:
            raise GridMismatch(f"wavelength {wavelength} nm is not on the map grid")
        return self.values[:, j[0]]

    def to_csv_text(self):
        buf = io.StringIO()
        for k, v in self.meta.items():
            buf.write(f"# {k}: {v}\n")
        buf.write("d_nm/lambda_nm," + ",".join(repr(float(x)) for x in self.lambda_grid) + "\n")
        for d, row in zip(self.d_grid, self.values):
            buf.write(repr(float(d)) + "," + ",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()

    def to_csv(self, path):
        path = Path(path)
        path.write_text(self.to_csv_text(), encoding="utf-8")
        return path

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        meta, rows, lam = {}, [], None
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, val = line.lstrip("#").partition(":")
                    meta[key.strip()] = val.strip()
                    continue
                fields = line.split(",")
                try:
                    if lam is None:
                        lam = [float(x) for x in fields[1:]]
                        continue
                    if len(fields) != len(lam) + 1:
                        raise ParseError(f"{path}:{lineno}: expected {len(lam) + 1} fields, got {len(fields)}")
                    rows.append([float(x) for x in fields])
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}") from None
        if lam is None or not rows:
            raise ParseError(f"{path}: no map data")
        arr = np.array(rows)
        return cls(arr[:, 0], np.array(lam), arr[:, 1:], meta)

    def to_png(self, path, title=None):
        """Heatmap with wavelength horizontal and mirror distance vertical."""
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 4))
        extent = [self.lambda_grid[0], self.lambda_grid[-1], self.d_grid[0] / 1000, self.d_grid[-1] / 1000]
        im = ax.imshow(self.values, origin="lower", aspect="auto", extent=extent, cmap="viridis")
        ax.set_xlabel("wavelength (nm)")
        ax.set_ylabel("mirror distance d (um)")
        if title:
            ax.set_title(title)
        fig.colorbar(im, ax=ax, label="E")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        return Path(path)


def _column_task(args):
    env, geom, gap_index, d_grid, wavelength = args
    (eps, thick, ideal), rest = _kernel_args(env, wavelength, geom)
    p, ok = _backend.collected_power_scan(eps, thick, ideal, gap_index, d_grid, *rest)
    if not np.all(ok):
        i = int(np.flatnonzero(~ok)[0])
        raise QuadratureFailure(f"theta integration failed at d = {d_grid[i]} nm, lambda = {wavelength} nm")
    return p / _reference_power(env, wavelength, geom)


def enhancement_map(d_grid, lambda_grid, geom: CollectionGeometry, env_template: EmitterEnvironment,
                    gap_index=0, workers=1, chunksize=4) -> EnhancementMap:
    """E on the ``d_grid x lambda_grid`` product, varying layer ``gap_index``.

    Each wavelength column is an independent task written into its own slot,
    so the result does not depend on ``workers``.
    """
    d_grid = np.asarray(d_grid, dtype=float)
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    for name, g in (("d_grid", d_grid), ("lambda_grid", lambda_grid)):
        if g.ndim != 1 or len(g) == 0 or np.any(np.diff(g) <= 0):
            raise ValidationError(f"{name} must be non-empty and strictly ascending")
    if not 0 <= gap_index < len(env_template.upward_stack.layers):
        raise ValidationError("gap_index does not name a layer of the upward stack")
    tasks = [(env_template, geom, gap_index, d_grid, lam) for lam in lambda_grid]
    values = np.empty((len(d_grid), len(lambda_grid)))
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for j, col in enumerate(pool.map(_column_task, tasks, chunksize=chunksize)):
                values[:, j] = col
    else:
        for j, task in enumerate(tasks):
            values[:, j] = _column_task(task)
    w = env_template.weights
    meta = {
        "quantity": "enhancement E = P(d, lambda) / P_no_mirror(lambda)",
        "normalization": "raw",
        "numerical_aperture": geom.numerical_aperture,
        "bottom_transmission": geom.include_bottom_transmission,
        "a_parallel": w.a_parallel,
        "a_perpendicular": w.a_perpendicular,
        "depth_nm": env_template.depth,
        "stack": describe_stack(env_template.upward_stack, gap_index),
        "backend": _backend.BACKEND,
    }
    return EnhancementMap(d_grid, lambda_grid, values, meta)


def describe_stack(stack, gap_index=None):
    parts = [stack.incidence.name]
    for i, layer in enumerate(stack.layers):
        parts.append(f"{layer.material.name}(d)" if i == gap_index else f"{layer.material.name}({layer.thickness:g} nm)")
    parts.append(getattr(stack.exit, "name", str(stack.exit)))
    return " | ".join(parts)


def normalized_model_enhancement(emap: EnhancementMap, reference_spectrum: SpectrumRecord) -> EnhancementMap:
    """Apply the per-distance unit-counts normalization to a model map.

    ``E~(d, l) = E(d, l) / int S_ref0(l') E(d, l') dl'`` with ``S_ref0`` the
    reference spectrum resampled onto the map grid and normalized there.
    """
    lam = emap.lambda_grid
    if len(lam) < 2:
        raise ValidationError("normalization needs at least two wavelengths")
    s0 = normalize_spectrum(resample(reference_spectrum, lam)).counts
    weights = trapezoid(s0[None, :] * emap.values, lam, axis=1)
    if np.any(weights <= 0):
        raise DivisionDegenerate("reference-weighted enhancement vanished for some distance")
    meta = dict(emap.meta, normalization="per-distance unit counts (reference weighted)")
    return EnhancementMap(emap.d_grid, lam, emap.values / weights[:, None], meta)


def pump_modulation(env: EmitterEnvironment, pump_wavelength=532.0):
    """Normal-incidence standing-wave intensity at the emitter (diagnostic only).

    Uses the electric-field coefficient ``r_s`` at ``u = 0``.
    """
    r = StackOptics(env.upward_stack, pump_wavelength).reflection("s", 0.0)
    phase = np.exp(2j * env.k1(pump_wavelength) * env.depth)
    return float(abs(1 + r * phase) ** 2)


def config_fingerprint(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

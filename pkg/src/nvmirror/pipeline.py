"""Measured distance-scan spectra: normalization, enhancement and gap fitting.

The measured enhancement is ``S0(d, l) / S_ref0(l)`` where both spectra are
normalized to unit trapezoidal integral.  Because every distance is
normalized on its own, any per-distance gain (pump standing waves, drifting
excitation) cancels.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks, savgol_filter

from .collection import CollectionGeometry, EnhancementMap, enhancement_map
from .dipole import EmitterEnvironment
from .exceptions import (
    ColumnTooShort,
    CoverageError,
    GridMismatch,
    NoFringes,
    ParseError,
    PoorFitWarning,
    ValidationError,
    ZeroReference,
)
from .spectra import SpectrumRecord, normalize_spectrum, resample

__all__ = [
    "SpectrumRecord",
    "ScanDataset",
    "normalize_spectrum",
    "enhancement_from_scan",
    "fringe_maxima",
    "beat_nodes",
    "estimate_d0",
    "D0Estimate",
    "ColumnModel",
    "load_scan",
    "load_reference",
    "save_scan",
    "save_reference",
    "synthetic_reference",
    "synthetic_scan",
]

log = logging.getLogger(__name__)

SMOOTH_WINDOW = 5
PROMINENCE = 0.05
MIN_COLUMN = 7


@dataclass(frozen=True)
class ScanDataset:
    """Spectra ``counts[i, :]`` recorded at mirror positions ``d_positions[i]``."""

    d_positions: np.ndarray
    lambda_grid: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d_positions, dtype=float)
        lam = np.asarray(self.lambda_grid, dtype=float)
        c = np.asarray(self.counts, dtype=float)
        if c.shape != (len(d), len(lam)):
            raise ValidationError(f"counts shape {c.shape} does not match ({len(d)}, {len(lam)})")
        if len(d) > 1 and not np.all(np.diff(d) > 0):
            raise ValidationError("d positions must be strictly increasing")
        if len(lam) < 2 or not np.all(np.diff(lam) > 0):
            raise ValidationError("wavelength grid must be strictly ascending")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValidationError("counts must be finite and >= 0")
        object.__setattr__(self, "d_positions", d)
        object.__setattr__(self, "lambda_grid", lam)
        object.__setattr__(self, "counts", c)

    def spectrum(self, i) -> SpectrumRecord:
        return SpectrumRecord(self.lambda_grid, self.counts[i])


def enhancement_from_scan(scan: ScanDataset, reference: SpectrumRecord) -> EnhancementMap:
    lam = scan.lambda_grid
    meta = {"quantity": "measured enhancement S0(d, lambda) / S_ref0(lambda)",
            "normalization": "per-distance unit counts"}
    if not np.array_equal(reference.lambda_samples, lam):
        try:
            reference = resample(reference, lam)
        except CoverageError as exc:
            raise GridMismatch(str(exc)) from None
        meta["reference_resampled"] = "linear"
        log.info("reference spectrum resampled linearly onto the scan grid")
    ref0 = normalize_spectrum(reference).counts
    zero = np.flatnonzero(ref0 <= 0)
    if len(zero):
        raise ZeroReference(f"reference spectrum is zero at lambda = {lam[zero[0]]} nm")
    values = np.empty_like(scan.counts)
    for i, d in enumerate(scan.d_positions):
        values[i] = normalize_spectrum(scan.spectrum(i), label=float(d)).counts / ref0
    return EnhancementMap(scan.d_positions, lam, values, meta)


def _smooth(column, window):
    if window is None or window < 3:
        return np.asarray(column, dtype=float)
    return savgol_filter(column, window, polyorder=2, mode="interp")


def fringe_maxima(emap: EnhancementMap, wavelength, window=SMOOTH_WINDOW, prominence=PROMINENCE,
                  min_separation=None):
    """Distances of local maxima of E(d) at one wavelength.

    The column is Savitzky-Golay smoothed (quadratic, ``window`` samples) and
    maxima with prominence below ``prominence`` are dropped.  Maxima closer
    than ``min_separation`` nm (default: a quarter wavelength, half a fringe
    period) are thinned to the highest one.
    """
    column = emap.column(wavelength)
    if len(column) < MIN_COLUMN:
        raise ColumnTooShort(f"need at least {MIN_COLUMN} distances, got {len(column)}")
    if min_separation is None:
        min_separation = wavelength / 4
    step = float(np.min(np.diff(emap.d_grid)))
    distance = max(1, int(min_separation / step))
    peaks, _ = find_peaks(_smooth(column, window), prominence=prominence, distance=distance)
    return emap.d_grid[peaks]


def beat_nodes(d_grid, column, wavelength, min_separation=2000.0):
    """Distances where the fringe envelope of E(d) collapses.

    The envelope is the max-min spread over a sliding window of one fringe
    period (half a wavelength in the gap); nodes are its local minima at
    least ``min_separation`` apart.
    """
    d_grid = np.asarray(d_grid, dtype=float)
    column = np.asarray(column, dtype=float)
    step = float(np.median(np.diff(d_grid)))
    half = max(1, int(round(wavelength / 2 / step / 2)))
    n = len(column)
    spread = np.empty(n)
    for i in range(n):
        seg = column[max(0, i - half): i + half + 1]
        spread[i] = seg.max() - seg.min()
    distance = max(1, int(min_separation / step))
    idx, _ = find_peaks(-spread, distance=distance)
    # ignore edge effects of the truncated window
    idx = idx[(idx >= half) & (idx < n - half)]
    return d_grid[idx], spread


@dataclass(frozen=True)
class D0Estimate:
    d0: float
    residual: float
    n_measured: int
    n_model: int
    poor_fit: bool = False


def _match_residual(measured, model, lo, hi, cap):
    """Symmetric mean squared nearest-maximum distance, each term capped at ``cap**2``."""
    model = model[(model >= lo) & (model <= hi)]
    if len(model) == 0:
        return np.inf
    a = np.abs(measured[:, None] - model[None, :])
    c = cap * cap
    return float(np.mean(np.minimum(a.min(axis=1) ** 2, c)) + np.mean(np.minimum(a.min(axis=0) ** 2, c)))


def _standardize(x):
    x = np.asarray(x, dtype=float)
    sd = x.std()
    return (x - x.mean()) / sd if sd > 0 else np.zeros_like(x)


def estimate_d0(measured: EnhancementMap, model_generator, wavelength, search=(0.0, 2000.0), step=5.0,
                window=SMOOTH_WINDOW, prominence=PROMINENCE, poor_fit_threshold=None):
    """Rigid distance offset aligning measured fringe maxima with the model's.

    ``model_generator(offset)`` must return a map on the measured nominal
    distances whose true gap is ``nominal + offset``.  For every offset on
    ``arange(search[0], search[1] + step, step)`` the residual is the
    symmetric mean squared distance between nearest maxima, each term capped
    at a quarter fringe period so stray or missing maxima cannot dominate.

    Offsets one fringe period apart give almost the same maxima comb; they
    differ only near the beat nodes.  Every local residual minimum within
    ``2 * best + step**2`` is therefore kept as a candidate, and the
    candidate whose neighborhood (a quarter period either side) reaches the
    highest correlation between the standardized measured and model columns
    wins.  Inside that neighborhood the least-squares offset is returned.
    Correlation ignores overall fringe contrast, which the model need not
    reproduce.
    """
    meas = fringe_maxima(measured, wavelength, window, prominence)
    if len(meas) == 0:
        raise NoFringes(f"no fringe maxima in the measured column at {wavelength} nm")
    lo, hi = measured.d_grid[0], measured.d_grid[-1]
    period = wavelength / 2
    cap = period / 4
    z_meas = _standardize(_smooth(measured.column(wavelength), window))

    offsets, resid, corr, counts = [], [], [], []
    for off in np.arange(search[0], search[1] + step / 2, step):
        if lo + off <= 0:
            continue
        model_map = model_generator(float(off))
        model = fringe_maxima(model_map, wavelength, window, prominence)
        offsets.append(float(off))
        counts.append(len(model))
        resid.append(_match_residual(meas, model, lo, hi, cap) if len(model) else np.inf)
        corr.append(float(np.mean(z_meas * _standardize(model_map.column(wavelength)))))
    resid = np.array(resid)
    if len(resid) == 0 or not np.isfinite(resid).any():
        raise NoFringes(f"model produced no fringe maxima at {wavelength} nm for any offset")
    offsets = np.array(offsets)
    corr = np.array(corr)

    best = resid.min()
    n = len(resid)
    local = [i for i in range(n)
             if (i == 0 or resid[i] <= resid[i - 1]) and (i == n - 1 or resid[i] <= resid[i + 1])]
    candidates = [i for i in local if resid[i] <= 2 * best + step * step]

    def neighborhood(i):
        return np.flatnonzero(np.abs(offsets - offsets[i]) <= cap)

    # first maximum wins ties, keeping the choice deterministic
    chosen = max(candidates, key=lambda i: (corr[neighborhood(i)].max(), -i))
    idx = neighborhood(chosen)
    k = idx[np.argmin(resid[idx])]
    rms = float(np.sqrt(resid[k] / 2))
    poor = poor_fit_threshold is not None and rms > poor_fit_threshold
    if poor:
        warnings.warn(f"d0 fit rms mismatch {rms:.1f} nm exceeds {poor_fit_threshold} nm", PoorFitWarning)
    return D0Estimate(float(offsets[k]), rms, len(meas), counts[k], poor)


class ColumnModel:
    """Model E(d) at one wavelength, precomputed once for all rigid offsets.

    Calling ``model(offset)`` returns an :class:`EnhancementMap` on
    ``d_nominal`` with the true gap ``d_nominal + offset``.  Offsets must be
    multiples of ``resolution`` and ``d_nominal`` must lie on that lattice.
    """

    def __init__(self, env: EmitterEnvironment, geom: CollectionGeometry, wavelength, d_nominal,
                 search=(0.0, 2000.0), resolution=5.0, gap_index=0, workers=1):
        self.d_nominal = np.asarray(d_nominal, dtype=float)
        self.wavelength = float(wavelength)
        self.resolution = float(resolution)
        lo = self.d_nominal[0] + search[0]
        start = max(lo, self.resolution)
        stop = self.d_nominal[-1] + search[1]
        self._grid = np.arange(start, stop + resolution / 2, resolution)
        col = enhancement_map(self._grid, [self.wavelength], geom, env, gap_index=gap_index,
                              workers=workers)
        self._values = col.values[:, 0]
        self.meta = col.meta

    def __call__(self, offset):
        true_d = self.d_nominal + offset
        idx = np.rint((true_d - self._grid[0]) / self.resolution).astype(int)
        if idx.min() < 0 or idx.max() >= len(self._grid) or not np.allclose(self._grid[idx], true_d, atol=1e-6):
            raise ValueError(f"offset {offset} nm is outside the precomputed model lattice")
        return EnhancementMap(self.d_nominal, [self.wavelength], self._values[idx, None],
                              dict(self.meta, d_offset_nm=offset))


# file formats -----------------------------------------------------------------

def _read_grid_file(path):
    path = Path(path)
    grid = None
    rows = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if grid is None and body.startswith("lambda_nm:"):
                    try:
                        grid = np.array([float(x) for x in body[len("lambda_nm:"):].split(",")])
                    except ValueError as exc:
                        raise ParseError(f"{path}:{lineno}: bad wavelength grid ({exc})") from None
                continue
            if grid is None:
                raise ParseError(f"{path}:{lineno}: data before the '# lambda_nm:' grid line")
            fields = line.split(",")
            try:
                rows.append((lineno, [float(x) for x in fields]))
            except ValueError as exc:
                col = next(i for i, f in enumerate(fields, 1) if not _is_float(f))
                raise ParseError(f"{path}:{lineno}: column {col}: {exc}") from None
    if grid is None:
        raise ParseError(f"{path}: missing '# lambda_nm:' grid line")
    return path, grid, rows


def _is_float(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_scan(path) -> ScanDataset:
    """Read ``# lambda_nm: l1,l2,...`` then rows ``d_nm,c1,c2,...``."""
    path, grid, rows = _read_grid_file(path)
    if not rows:
        raise ParseError(f"{path}: no spectra")
    for lineno, vals in rows:
        if len(vals) != len(grid) + 1:
            raise ParseError(f"{path}:{lineno}: expected {len(grid) + 1} fields, got {len(vals)}")
    arr = np.array([v for _, v in rows])
    try:
        return ScanDataset(arr[:, 0], grid, arr[:, 1:])
    except ValidationError as exc:
        raise ParseError(f"{path}: {exc}") from None


def load_reference(path) -> SpectrumRecord:
    """Single-spectrum variant: the grid line followed by one row of counts."""
    path, grid, rows = _read_grid_file(path)
    if len(rows) != 1:
        raise ParseError(f"{path}: expected exactly one spectrum row, got {len(rows)}")
    lineno, vals = rows[0]
    if len(vals) != len(grid):
        raise ParseError(f"{path}:{lineno}: expected {len(grid)} fields, got {len(vals)}")
    try:
        return SpectrumRecord(grid, np.array(vals))
    except ValidationError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _grid_line(grid):
    return "# lambda_nm: " + ",".join(repr(float(x)) for x in grid) + "\n"


def save_scan(scan: ScanDataset, path, comments=()):
    lines = [_grid_line(scan.lambda_grid)]
    lines += [f"# {c}\n" for c in comments]
    for d, row in zip(scan.d_positions, scan.counts):
        lines.append(repr(float(d)) + "," + ",".join(repr(float(x)) for x in row) + "\n")
    Path(path).write_text("".join(lines), encoding="utf-8")
    return Path(path)


def save_reference(spec: SpectrumRecord, path, comments=()):
    lines = [_grid_line(spec.lambda_samples)]
    lines += [f"# {c}\n" for c in comments]
    lines.append(",".join(repr(float(x)) for x in spec.counts) + "\n")
    Path(path).write_text("".join(lines), encoding="utf-8")
    return Path(path)


# synthetic data -----------------------------------------------------------------

def synthetic_reference(lambda_grid) -> SpectrumRecord:
    """A smooth NV-like emission spectrum (test surrogate, not measured data).

    Narrow lines at 575 nm and 637 nm on a broad phonon sideband peaking
    near 680-700 nm.
    """
    lam = np.asarray(lambda_grid, dtype=float)

    def g(center, width, amp):
        return amp * np.exp(-0.5 * ((lam - center) / width) ** 2)

    counts = (g(575, 3, 0.05) + g(637, 2, 0.25) + g(660, 15, 0.5) + g(690, 30, 1.0)
              + g(740, 40, 0.6) + g(800, 50, 0.15))
    return SpectrumRecord(lam, counts)


def synthetic_scan(emap: EnhancementMap, reference: SpectrumRecord, pump_scales=None) -> ScanDataset:
    """``S(d, l) = S_ref(l) E(d, l) g(d)`` with per-distance gains ``g``."""
    ref = resample(reference, emap.lambda_grid).counts
    g = np.ones(len(emap.d_grid)) if pump_scales is None else np.asarray(pump_scales, dtype=float)
    return ScanDataset(emap.d_grid, emap.lambda_grid, emap.values * ref[None, :] * g[:, None])

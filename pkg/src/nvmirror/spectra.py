"""Spectrum records and unit-counts normalization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .exceptions import CoverageError, ValidationError, ZeroSpectrum

__all__ = ["SpectrumRecord", "normalize_spectrum", "resample", "spectral_integral"]


@dataclass(frozen=True)
class SpectrumRecord:
    lambda_samples: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lambda_samples, dtype=float)
        c = np.asarray(self.counts, dtype=float)
        if lam.ndim != 1 or lam.shape != c.shape:
            raise ValidationError("lambda_samples and counts must be 1-D and equally long")
        if len(lam) < 2 or not np.all(np.diff(lam) > 0):
            raise ValidationError("lambda_samples must be strictly ascending with >= 2 samples")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValidationError("counts must be finite and >= 0")
        object.__setattr__(self, "lambda_samples", lam)
        object.__setattr__(self, "counts", c)


def spectral_integral(s: SpectrumRecord) -> float:
    return float(trapezoid(s.counts, s.lambda_samples))


def normalize_spectrum(s: SpectrumRecord, label=None) -> SpectrumRecord:
    """Scale counts so the trapezoidal integral over wavelength is 1."""
    total = spectral_integral(s)
    if not total > 0:
        where = f" at d = {label} nm" if label is not None else ""
        raise ZeroSpectrum(f"spectrum{where} has zero integral", d=label)
    return SpectrumRecord(s.lambda_samples, s.counts / total)


def resample(s: SpectrumRecord, lambda_grid) -> SpectrumRecord:
    """Linear resampling onto ``lambda_grid``; the grid must lie inside the record."""
    grid = np.asarray(lambda_grid, dtype=float)
    lo, hi = s.lambda_samples[0], s.lambda_samples[-1]
    if grid[0] < lo or grid[-1] > hi:
        raise CoverageError(
            f"spectrum spans [{lo}, {hi}] nm but grid needs [{grid[0]}, {grid[-1]}] nm"
        )
    if np.array_equal(grid, s.lambda_samples):
        return s
    return SpectrumRecord(grid, np.interp(grid, s.lambda_samples, s.counts))

"""Optical materials: constant and tabulated complex refractive indices.

Tabulated materials interpolate ``n`` and ``k`` separately and linearly in
wavelength.  The permittivity used by the optics code is ``(n + ik)**2``
evaluated *after* interpolation.  Queries outside the table span raise
:class:`~nvmirror.exceptions.OutOfRange`; nothing is extrapolated.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Union

import numpy as np

from .exceptions import OutOfRange, ParseError, ValidationError

__all__ = [
    "ConstantIndex",
    "DispersionTable",
    "Tabulated",
    "OpticalMaterial",
    "IDEAL_MIRROR",
    "load_dispersion_table",
    "complex_index",
    "permittivity",
    "constant",
    "diamond",
    "air",
    "silver",
    "SILVER_TABLE",
]

SILVER_TABLE = "silver_johnson_christy.csv"
HEADER = ("wavelength_nm", "n", "k")


@dataclass(frozen=True)
class ConstantIndex:
    n: float
    k: float = 0.0

    def __post_init__(self):
        if not self.n > 0:
            raise ValidationError(f"constant index needs n > 0, got {self.n}")
        if self.k < 0:
            raise ValidationError(f"k must be >= 0 for a passive medium, got {self.k}")


@dataclass(frozen=True)
class DispersionTable:
    """Rows of ``(wavelength_nm, n, k)`` with strictly increasing wavelength."""

    wavelength: np.ndarray
    n: np.ndarray
    k: np.ndarray
    source: str = ""

    def __post_init__(self):
        wl = np.asarray(self.wavelength, dtype=float)
        n = np.asarray(self.n, dtype=float)
        k = np.asarray(self.k, dtype=float)
        if not (wl.ndim == n.ndim == k.ndim == 1 and len(wl) == len(n) == len(k)):
            raise ValidationError("wavelength, n and k must be 1-D and equally long")
        if len(wl) < 2:
            raise ValidationError("a dispersion table needs at least 2 rows")
        if not np.all(np.isfinite(wl)) or not np.all(np.diff(wl) > 0):
            raise ValidationError("table wavelengths must be strictly increasing")
        if np.any(n <= 0):
            raise ValidationError("table n must be > 0")
        if np.any(k < 0):
            raise ValidationError("table k must be >= 0")
        for name, arr in (("wavelength", wl), ("n", n), ("k", k)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def rows(self):
        return list(zip(self.wavelength.tolist(), self.n.tolist(), self.k.tolist()))

    @property
    def span(self):
        return float(self.wavelength[0]), float(self.wavelength[-1])


@dataclass(frozen=True)
class Tabulated:
    table: DispersionTable


class _IdealMirror:
    """Perfect reflector sentinel (r_s = -1, r_p = +1 for all u)."""

    name = "ideal_mirror"

    def __repr__(self):
        return "IDEAL_MIRROR"

    def __reduce__(self):
        return "IDEAL_MIRROR"


IDEAL_MIRROR = _IdealMirror()


@dataclass(frozen=True)
class OpticalMaterial:
    name: str
    model: Union[ConstantIndex, Tabulated] = field(repr=False)

    @property
    def is_lossless(self):
        return isinstance(self.model, ConstantIndex) and self.model.k == 0.0

    def span(self):
        """Valid wavelength interval; ``(0, inf)`` for constant materials."""
        if isinstance(self.model, Tabulated):
            return self.model.table.span
        return 0.0, float("inf")


def load_dispersion_table(path) -> DispersionTable:
    """Read a ``wavelength_nm,n,k`` CSV file.

    Lines starting with ``#`` are provenance comments and are collected into
    :attr:`DispersionTable.source`.  The header line is required.
    """
    path = Path(path)
    comments = []
    rows = []
    header_seen = False
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                comments.append(stripped.lstrip("#").strip())
                continue
            fields = next(csv.reader([stripped]))
            if not header_seen:
                if tuple(f.strip() for f in fields) != HEADER:
                    raise ParseError(
                        f"{path}:{lineno}: expected header 'wavelength_nm,n,k', got {stripped!r}"
                    )
                header_seen = True
                continue
            if len(fields) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 fields, got {len(fields)}")
            try:
                rows.append(tuple(float(f) for f in fields))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not header_seen:
        raise ParseError(f"{path}: missing header line")
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    arr = np.array(rows)
    source = "\n".join(comments) or str(path)
    try:
        return DispersionTable(arr[:, 0], arr[:, 1], arr[:, 2], source=source)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def _interp_table(table: DispersionTable, wavelength):
    wl = np.asarray(wavelength, dtype=float)
    lo, hi = table.span
    if np.any(wl < lo) or np.any(wl > hi) or np.any(np.isnan(wl)):
        raise OutOfRange(f"wavelength {wavelength} nm outside table span [{lo}, {hi}] nm")
    if wl.ndim == 0:
        # scalar path: exact at nodes, simple two-point lerp elsewhere
        x = float(wl)
        i = int(np.searchsorted(table.wavelength, x))
        if table.wavelength[i] == x:
            return complex(table.n[i], table.k[i])
        x0, x1 = table.wavelength[i - 1], table.wavelength[i]
        t = (x - x0) / (x1 - x0)
        n = table.n[i - 1] + t * (table.n[i] - table.n[i - 1])
        k = table.k[i - 1] + t * (table.k[i] - table.k[i - 1])
        return complex(n, k)
    return np.interp(wl, table.wavelength, table.n) + 1j * np.interp(wl, table.wavelength, table.k)


def complex_index(material, wavelength):
    """Complex refractive index ``n + ik`` at ``wavelength`` (nm).

    Accepts a scalar or an array of wavelengths.
    """
    if material is IDEAL_MIRROR:
        raise ValueError("the ideal mirror has no refractive index")
    model = material.model
    if isinstance(model, ConstantIndex):
        value = complex(model.n, model.k)
        if np.ndim(wavelength) == 0:
            return value
        return np.full(np.shape(wavelength), value)
    return _interp_table(model.table, wavelength)


def permittivity(material, wavelength):
    return complex_index(material, wavelength) ** 2


def constant(name, n, k=0.0):
    return OpticalMaterial(name, ConstantIndex(float(n), float(k)))


def diamond(n=2.41):
    return constant("diamond", n)


def air():
    return constant("air", 1.0)


def silver(path=None):
    """Silver from the bundled Johnson & Christy table, or from ``path``."""
    if path is None:
        with resources.as_file(resources.files("nvmirror.data") / SILVER_TABLE) as p:
            table = load_dispersion_table(p)
    else:
        table = load_dispersion_table(path)
    return OpticalMaterial("silver", Tabulated(table))

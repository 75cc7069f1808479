"""Reflection and transmission of planar layer stacks.

Wavevectors are expressed through the normalized in-plane component ``u``
(transverse wavevector over the incidence-medium wavenumber), so ``u < 1`` is
propagating in the incidence medium and ``u > 1`` evanescent.

Sign convention: ``r_s`` is the ratio of tangential electric fields, ``r_p``
the ratio of tangential magnetic fields.  A perfect reflector therefore gives
``r_s = -1`` and ``r_p = +1`` at normal incidence, and the interference
factors in :mod:`nvmirror.dipole` are written against exactly this choice.
"""
from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DegenerateInterface, ValidationError
from .materials import IDEAL_MIRROR, OpticalMaterial, complex_index

__all__ = [
    "Polarization",
    "Layer",
    "LayerStack",
    "longitudinal_wavenumber",
    "interface_reflection",
    "interface_transmission",
    "stack_reflection",
    "stack_transmission",
    "StackOptics",
]


class Polarization(enum.Enum):
    S = "s"
    P = "p"


@dataclass(frozen=True)
class Layer:
    material: OpticalMaterial
    thickness: float

    def __post_init__(self):
        if not (np.isfinite(self.thickness) and self.thickness > 0):
            raise ValidationError(f"layer thickness must be finite and > 0, got {self.thickness}")


@dataclass(frozen=True)
class LayerStack:
    """``incidence | layers[0] | ... | layers[-1] | exit``.

    The incidence half-space must be lossless; the exit half-space may be
    :data:`~nvmirror.materials.IDEAL_MIRROR`.
    """

    incidence: OpticalMaterial
    layers: tuple = ()
    exit: object = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.exit is None:
            object.__setattr__(self, "exit", self.incidence)
        if self.incidence is IDEAL_MIRROR or not self.incidence.is_lossless:
            raise ValidationError("incidence half-space must be a lossless constant-index medium")
        for layer in self.layers:
            if not isinstance(layer, Layer):
                raise ValidationError(f"expected Layer, got {type(layer).__name__}")
            if layer.material is IDEAL_MIRROR:
                raise ValidationError("the ideal mirror may only be used as exit half-space")

    @classmethod
    def build(cls, incidence, layers: Sequence = (), exit=None):
        """Convenience constructor accepting ``(material, thickness)`` pairs."""
        built = [l if isinstance(l, Layer) else Layer(*l) for l in layers]
        return cls(incidence, tuple(built), exit)

    @property
    def n_incidence(self):
        return self.incidence.model.n

    @property
    def ideal_exit(self):
        return self.exit is IDEAL_MIRROR

    def with_thickness(self, index, thickness):
        layers = list(self.layers)
        layers[index] = Layer(layers[index].material, thickness)
        return LayerStack(self.incidence, tuple(layers), self.exit)

    def resolve(self, wavelength):
        """Permittivities of all media and layer thicknesses at one wavelength.

        Returns ``(eps, thickness, ideal_exit)`` where ``eps`` has
        ``len(layers) + 2`` entries (the exit entry is ``nan`` for the ideal
        mirror).
        """
        media = [self.incidence, *(l.material for l in self.layers)]
        eps = [complex(complex_index(m, wavelength)) ** 2 for m in media]
        if self.ideal_exit:
            eps.append(complex("nan"))
        else:
            eps.append(complex(complex_index(self.exit, wavelength)) ** 2)
        thickness = np.array([l.thickness for l in self.layers], dtype=float)
        return np.array(eps, dtype=complex), thickness, self.ideal_exit


def longitudinal_wavenumber(permittivity, k0, u, n1):
    """``k0 * sqrt(eps - n1**2 u**2)`` on the branch ``Im >= 0`` (``Re >= 0`` if real)."""
    arg = np.asarray(permittivity - (n1 * np.asarray(u)) ** 2, dtype=complex)
    w = np.sqrt(arg)
    w = np.where(w.imag < 0, -w, w)
    out = k0 * w
    return complex(out) if out.ndim == 0 else out


def _check(den):
    if np.any(den == 0):
        raise DegenerateInterface("Fresnel denominator vanished")


def interface_reflection(pol, kz1, kz2, eps1, eps2):
    if Polarization(pol) is Polarization.S:
        num, den = kz1 - kz2, kz1 + kz2
    else:
        num, den = eps2 * kz1 - eps1 * kz2, eps2 * kz1 + eps1 * kz2
    _check(den)
    return num / den


def interface_transmission(pol, kz1, kz2, eps1, eps2):
    """Electric-field (s) or magnetic-field (p) transmission, equal to ``1 + r``."""
    if Polarization(pol) is Polarization.S:
        num, den = 2 * kz1, kz1 + kz2
    else:
        num, den = 2 * eps2 * kz1, eps2 * kz1 + eps1 * kz2
    _check(den)
    return num / den


def _ratio(num, den):
    if den == 0:
        raise DegenerateInterface("Fresnel denominator vanished")
    return num / den


class StackOptics:
    """A :class:`LayerStack` resolved at one wavelength, for repeated queries in ``u``."""

    def __init__(self, stack: LayerStack, wavelength):
        self.stack = stack
        self.wavelength = float(wavelength)
        self.eps, self.thickness, self.ideal = stack.resolve(wavelength)
        self.k0 = 2 * np.pi / self.wavelength
        self.n1 = stack.n_incidence
        self._eps_list = [complex(e) for e in self.eps]
        self._thick_list = [float(t) for t in self.thickness]

    def kz(self, index, u):
        return longitudinal_wavenumber(self.eps[index], self.k0, u, self.n1)

    def reflection(self, pol, u):
        return self._recurse(pol, u, False)[0]

    def pair(self, u):
        """``(r_s, r_p)`` at one scalar ``u``; same recursion, without array overhead."""
        if u < 0:
            raise ValueError("u must be >= 0")
        eps = self._eps_list
        k0, n1u2 = self.k0, (self.n1 * u) ** 2

        def kz(e):
            w = cmath.sqrt(e - n1u2)
            return k0 * (-w if w.imag < 0 else w)

        last = len(eps) - 2
        kz_hi = kz(eps[last])
        if self.ideal:
            rs, rp = -1.0 + 0j, 1.0 + 0j
        else:
            kz_x = kz(eps[last + 1])
            rs = _ratio(kz_hi - kz_x, kz_hi + kz_x)
            rp = _ratio(eps[last + 1] * kz_hi - eps[last] * kz_x, eps[last + 1] * kz_hi + eps[last] * kz_x)
        for i in range(last - 1, -1, -1):
            kz_lo = kz(eps[i])
            phi = cmath.exp(2j * kz_hi * self._thick_list[i])
            rho_s = _ratio(kz_lo - kz_hi, kz_lo + kz_hi)
            rho_p = _ratio(eps[i + 1] * kz_lo - eps[i] * kz_hi, eps[i + 1] * kz_lo + eps[i] * kz_hi)
            rs = _ratio(rho_s + rs * phi, 1 + rho_s * rs * phi)
            rp = _ratio(rho_p + rp * phi, 1 + rho_p * rp * phi)
            kz_hi = kz_lo
        return rs, rp

    def transmission(self, pol, u):
        return self._recurse(pol, u, True)[1]

    def _recurse(self, pol, u, want_t):
        pol = Polarization(pol)
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("u must be >= 0")
        eps, thick = self.eps, self.thickness
        n_media = len(eps)
        kz = [self.kz(i, u) for i in range(n_media - 1 if self.ideal else n_media)]

        last = n_media - 2
        if self.ideal:
            r = np.full(u.shape, -1.0 if pol is Polarization.S else 1.0, dtype=complex)
            t = np.zeros(u.shape, dtype=complex)
        else:
            r = interface_reflection(pol, kz[last], kz[last + 1], eps[last], eps[last + 1])
            r = np.asarray(r, dtype=complex) * np.ones(u.shape)
            t = None
            if want_t:
                t = interface_transmission(pol, kz[last], kz[last + 1], eps[last], eps[last + 1])
        for i in range(last - 1, -1, -1):
            rho = interface_reflection(pol, kz[i], kz[i + 1], eps[i], eps[i + 1])
            half = np.exp(1j * kz[i + 1] * thick[i])
            phi = half * half
            den = 1 + rho * r * phi
            _check(den)
            if want_t:
                tau = interface_transmission(pol, kz[i], kz[i + 1], eps[i], eps[i + 1])
                t = tau * half * t / den
            r = (rho + r * phi) / den
        if r.ndim == 0:
            return complex(r), (complex(t) if want_t else None)
        return r, t


def stack_reflection(stack: LayerStack, pol, u, wavelength):
    """Reflection coefficient seen from the incidence half-space."""
    return StackOptics(stack, wavelength).reflection(pol, u)


def stack_transmission(stack: LayerStack, pol, u, wavelength):
    """Field transmission from the top of the incidence medium into the exit medium.

    Electric field for s, magnetic field for p, referenced to the first and
    last interfaces.  Zero for an ideal-mirror exit.
    """
    return StackOptics(stack, wavelength).transmission(pol, u)

"""Decay rates and far-field patterns of dipoles below a planar stack.

The emitter sits in a lossless host at depth ``depth`` below the host
surface; everything above the surface is described by an upward
:class:`~nvmirror.stratified.LayerStack` whose incidence medium is the host.
Downward the host is treated as semi-infinite.

All rates are normalized to the same dipole in the bulk host.  The total rate
comes from the wavevector integral over ``Re[r e^{2i k1 z0 l}]``, while the
radiated parts come from far-field flux integrals (``|1 + r e^{2i beta}|^2``
downward, ``|t|^2`` into the exit medium).  The two routes are independent,
which is what the energy-balance checks rely on.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import integrate

from .exceptions import EmptyAxisList, QuadratureFailure, ValidationError
from .materials import OpticalMaterial, air, diamond, silver
from .stratified import Layer, LayerStack, StackOptics

__all__ = [
    "OrientationWeights",
    "REPORTED_WEIGHTS",
    "GEOMETRIC_WEIGHTS",
    "EmitterEnvironment",
    "DecayRates",
    "AngularPattern",
    "orientation_weights",
    "decay_rate_perpendicular",
    "decay_rate_parallel",
    "total_decay",
    "angular_pattern",
    "mirror_environment",
    "QUAD_RTOL",
]

QUAD_RTOL = 1e-8
QUAD_ATOL = 1e-13
QUAD_LIMIT = 4000
# exp(-2 k1 z0 v_max) below this value truncates the evanescent tail
EVANESCENT_CUTOFF = 1e-12


@dataclass(frozen=True)
class OrientationWeights:
    a_parallel: float
    a_perpendicular: float

    def __post_init__(self):
        for v in (self.a_parallel, self.a_perpendicular):
            if not -1e-12 <= v <= 1 + 1e-12:
                raise ValidationError(f"orientation weight {v} outside [0, 1]")
        if abs(self.a_parallel + self.a_perpendicular - 1) > 1e-12:
            raise ValidationError("orientation weights must sum to 1")


REPORTED_WEIGHTS = OrientationWeights(0.659, 0.341)
GEOMETRIC_WEIGHTS = OrientationWeights(2 / 3, 1 / 3)

NV_AXES_100 = tuple(
    np.array(v, dtype=float) / math.sqrt(3)
    for v in ((1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1))
)


def orientation_weights(nv_axes, surface_normal=(0.0, 0.0, 1.0)) -> OrientationWeights:
    """Average the in-plane dipole tensor ``(I - a a^T)/2`` over symmetry axes.

    Each axis carries two incoherent dipoles spanning the plane normal to it.
    The perpendicular weight is the tensor component along ``surface_normal``.
    """
    axes = [np.asarray(a, dtype=float) for a in nv_axes]
    if not axes:
        raise EmptyAxisList("need at least one NV axis")
    normal = np.asarray(surface_normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    tensor = np.zeros((3, 3))
    for a in axes:
        a = a / np.linalg.norm(a)
        tensor += (np.eye(3) - np.outer(a, a)) / 2
    tensor /= len(axes)
    a_perp = float(normal @ tensor @ normal)
    a_perp = min(max(a_perp, 0.0), 1.0)
    return OrientationWeights(1.0 - a_perp, a_perp)


@dataclass(frozen=True)
class EmitterEnvironment:
    """Emitter at ``depth`` nm below the host surface, facing ``upward_stack``."""

    upward_stack: LayerStack
    depth: float = 8.0
    weights: OrientationWeights = REPORTED_WEIGHTS

    def __post_init__(self):
        if not self.depth > 0:
            raise ValidationError(f"emitter depth must be > 0, got {self.depth}")
        if not self.upward_stack.incidence.is_lossless:
            raise ValidationError("host medium must be lossless")

    @property
    def host(self) -> OpticalMaterial:
        return self.upward_stack.incidence

    @property
    def n_host(self) -> float:
        return self.upward_stack.n_incidence

    def k1(self, wavelength):
        return 2 * math.pi * self.n_host / wavelength

    def with_stack(self, stack):
        return replace(self, upward_stack=stack)

    def without_mirror(self, gap_material=None):
        """Same emitter with the host facing a semi-infinite gap medium."""
        if gap_material is None:
            gap_material = self.upward_stack.layers[0].material if self.upward_stack.layers else air()
        return self.with_stack(LayerStack(self.host, (), gap_material))

    def homogeneous(self):
        return self.with_stack(LayerStack(self.host, (), self.host))


def mirror_environment(gap, mirror=None, host=None, depth=8.0, weights=REPORTED_WEIGHTS,
                       gap_material=None):
    """``host | gap | mirror`` with an emitter ``depth`` nm below the host surface."""
    host = diamond() if host is None else host
    mirror = silver() if mirror is None else mirror
    gap_material = air() if gap_material is None else gap_material
    stack = LayerStack(host, (Layer(gap_material, float(gap)),), mirror)
    return EmitterEnvironment(stack, depth, weights)


@dataclass(frozen=True)
class DecayRates:
    total: float
    radiative_down: float
    radiative_up: float
    nonradiative: float

    @property
    def radiative(self):
        return self.radiative_down + self.radiative_up


def _quad(f, a, b, points=(), rtol=QUAD_RTOL, atol=QUAD_ATOL):
    pts = sorted(p for p in set(points) if a < p < b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        res = integrate.quad(f, a, b, epsrel=rtol, epsabs=atol, limit=QUAD_LIMIT,
                             points=pts or None, full_output=1)
    value, err = res[0], res[1]
    if not np.isfinite(value) or err > max(100 * atol, 10 * rtol * abs(value), 1e-10):
        raise QuadratureFailure(f"integral over [{a}, {b}] reached error {err:.3g} (value {value:.6g})")
    return value


def _light_line_angles(optics):
    """Polar angles in the host at which some medium's light line or a plasmon sits."""
    n1 = optics.n1
    marks = []
    eps = optics.eps
    for e in eps[1:]:
        if np.isnan(e):
            continue
        n = np.sqrt(complex(e)).real
        if 0 < n < n1:
            marks.append(n / n1)
    # surface plasmon of each metal/dielectric neighbor pair
    for e_a, e_b in zip(eps[:-1], eps[1:]):
        if np.isnan(e_a) or np.isnan(e_b):
            continue
        for metal, diel in ((e_a, e_b), (e_b, e_a)):
            if metal.real < 0 and diel.real > 0:
                n_spp = np.sqrt(metal * diel / (metal + diel)).real
                if 0 < n_spp < n1:
                    marks.append(n_spp / n1)
    return [math.asin(m) for m in marks]


def _evanescent_limit(k1, z0):
    return -math.log(EVANESCENT_CUTOFF) / (2 * k1 * z0)


class _Integrands:
    """Reflection-weighted integrands for one environment and wavelength."""

    def __init__(self, env: EmitterEnvironment, wavelength):
        self.env = env
        self.optics = StackOptics(env.upward_stack, wavelength)
        self.k1 = env.k1(wavelength)
        self.z0 = env.depth
        self.s_marks = _light_line_angles(self.optics)
        self.v_max = _evanescent_limit(self.k1, self.z0)
        scale = 1 / (2 * self.k1 * self.z0)
        self.v_marks = [scale * f for f in (0.5, 1, 3, 10) if scale * f < self.v_max]

    def r(self, u):
        return self.optics.pair(u)

    # wavevector integrands (reflected part only; direct part is exactly 1)
    def perp_radiative(self, s):
        u, l = math.sin(s), math.cos(s)
        rp = self.optics.pair(u)[1]
        return (u ** 3 * rp * np.exp(2j * self.k1 * self.z0 * l)).real

    def perp_evanescent(self, v):
        u = math.sqrt(1 + v * v)
        rp = self.optics.pair(u)[1]
        return u * u * rp.imag * math.exp(-2 * self.k1 * self.z0 * v)

    def par_radiative(self, s):
        u, l = math.sin(s), math.cos(s)
        rs, rp = self.r(u)
        return (u * (rs - l * l * rp) * np.exp(2j * self.k1 * self.z0 * l)).real

    def par_evanescent(self, v):
        u = math.sqrt(1 + v * v)
        rs, rp = self.r(u)
        return (rs + v * v * rp).imag * math.exp(-2 * self.k1 * self.z0 * v)

    def wavevector_integral(self, radiative, evanescent, rtol):
        a = _quad(radiative, 0.0, math.pi / 2, self.s_marks, rtol=rtol)
        b = _quad(evanescent, 0.0, self.v_max, self.v_marks, rtol=rtol)
        return a + b


def decay_rate_perpendicular(env: EmitterEnvironment, wavelength, rtol=QUAD_RTOL):
    """Gamma_perp / Gamma_0 for a dipole normal to the host surface."""
    it = _Integrands(env, wavelength)
    return 1.0 + 1.5 * it.wavevector_integral(it.perp_radiative, it.perp_evanescent, rtol)


def decay_rate_parallel(env: EmitterEnvironment, wavelength, rtol=QUAD_RTOL):
    """Gamma_par / Gamma_0, averaged over in-plane orientations."""
    it = _Integrands(env, wavelength)
    return 1.0 + 0.75 * it.wavevector_integral(it.par_radiative, it.par_evanescent, rtol)


def _pattern_terms(optics, k1, z0, theta):
    theta = np.asarray(theta, dtype=float)
    u, l = np.sin(theta), np.cos(theta)
    rs = optics.reflection("s", u)
    rp = optics.reflection("p", u)
    ph = np.exp(2j * k1 * z0 * l)
    perp_p = 3 / (8 * np.pi) * u ** 2 * np.abs(1 + rp * ph) ** 2
    par_p = 3 / (16 * np.pi) * l ** 2 * np.abs(1 - rp * ph) ** 2
    par_s = 3 / (16 * np.pi) * np.abs(1 + rs * ph) ** 2
    return perp_p, par_p, par_s


def _radiated_down(it: _Integrands, rtol):
    """Downward far-field power per dipole class, 2 pi int pattern sin(theta) dtheta."""

    def terms(th):
        u, l = math.sin(th), math.cos(th)
        rs, rp = it.optics.pair(u)
        ph = cmath.exp(2j * it.k1 * it.z0 * l)
        return u, l, rs * ph, rp * ph

    def perp(th):
        u, _, _, rp = terms(th)
        return 0.75 * u ** 3 * abs(1 + rp) ** 2

    def par(th):
        u, l, rs, rp = terms(th)
        return 0.375 * u * (l * l * abs(1 - rp) ** 2 + abs(1 + rs) ** 2)

    hi = math.pi / 2
    return (_quad(par, 0.0, hi, it.s_marks, rtol=rtol),
            _quad(perp, 0.0, hi, it.s_marks, rtol=rtol))


def _radiated_up(it: _Integrands, rtol):
    """Power carried into a lossless exit half-space, per dipole class.

    Flux densities per unit ``u`` (E-field amplitude for s, H-field for p):
    ``s_par = 3/8 u Re(l_N)/|l|^2 |t_s|^2``,
    ``p_par = 3/8 u eps1 Re(l_N/eps_N) |t_p|^2``,
    ``perp = 3/4 u^3 eps1 Re(l_N/eps_N)/|l|^2 |t_p|^2``,
    where ``t`` includes the emitter-to-surface propagation.
    """
    optics = it.optics
    if optics.ideal:
        return 0.0, 0.0
    eps_n = optics.eps[-1]
    if eps_n.imag != 0 or eps_n.real <= 0:
        # absorbing exit: nothing reaches the far field
        return 0.0, 0.0
    eps1 = optics.eps[0].real
    n1 = optics.n1
    u_max = math.sqrt(eps_n.real) / n1
    k1, z0 = it.k1, it.z0
    last = len(optics.eps) - 1

    def parts(u):
        l = complex(optics.kz(0, u)) / optics.k0 / n1
        ln = complex(optics.kz(last, u)) / optics.k0 / n1
        prop = np.exp(1j * k1 * l * z0)
        ts = optics.transmission("s", u) * prop
        tp = optics.transmission("p", u) * prop
        l2 = abs(l) ** 2
        fs = 0.375 * u * ln.real / l2 * abs(ts) ** 2
        fp = 0.375 * u * eps1 * (ln / eps_n).real * abs(tp) ** 2
        fz = 0.75 * u ** 3 * eps1 * (ln / eps_n).real / l2 * abs(tp) ** 2
        return fs + fp, fz

    marks = [math.sin(s) for s in it.s_marks]
    if u_max > 1:
        marks.append(1.0)
    par = _quad(lambda u: parts(u)[0], 0.0, u_max, marks, rtol=rtol)
    perp = _quad(lambda u: parts(u)[1], 0.0, u_max, marks, rtol=rtol)
    return par, perp


@dataclass(frozen=True)
class ClassRates:
    """Per-dipole-class rates before orientation weighting."""

    parallel: DecayRates
    perpendicular: DecayRates


def class_rates(env: EmitterEnvironment, wavelength, rtol=QUAD_RTOL) -> ClassRates:
    it = _Integrands(env, wavelength)
    g_par = 1.0 + 0.75 * it.wavevector_integral(it.par_radiative, it.par_evanescent, rtol)
    g_perp = 1.0 + 1.5 * it.wavevector_integral(it.perp_radiative, it.perp_evanescent, rtol)
    down_par, down_perp = _radiated_down(it, rtol)
    up_par, up_perp = _radiated_up(it, rtol)
    return ClassRates(
        DecayRates(g_par, down_par, up_par, g_par - down_par - up_par),
        DecayRates(g_perp, down_perp, up_perp, g_perp - down_perp - up_perp),
    )


def total_decay(env: EmitterEnvironment, wavelength, rtol=QUAD_RTOL) -> DecayRates:
    """Orientation-weighted decay rates, split into radiated and lost power.

    ``nonradiative`` is what the wavevector integral sees but no far-field
    flux accounts for: absorption and quenching in the stack.
    """
    cr = class_rates(env, wavelength, rtol)
    a_par, a_perp = env.weights.a_parallel, env.weights.a_perpendicular

    def mix(name):
        return a_par * getattr(cr.parallel, name) + a_perp * getattr(cr.perpendicular, name)

    total = mix("total")
    down = mix("radiative_down")
    up = mix("radiative_up")
    return DecayRates(total, down, up, total - down - up)


@dataclass(frozen=True)
class AngularPattern:
    """Downward power per unit solid angle in the host.

    ``theta`` is measured from the downward surface normal.  Columns are
    ``perp_p``, ``par_p`` and ``par_s``; a bare dipole class integrates to 1
    over the full sphere.
    """

    theta: np.ndarray
    perp_p: np.ndarray
    par_p: np.ndarray
    par_s: np.ndarray
    meta: dict = field(default_factory=dict)

    def weighted(self, weights: OrientationWeights):
        return weights.a_perpendicular * self.perp_p + weights.a_parallel * (self.par_p + self.par_s)

    def cone_fraction(self, weights, sin_max):
        """Share of the downward hemisphere power inside ``sin(theta) <= sin_max``."""
        w = self.weighted(weights) * np.sin(self.theta)
        inside = self.theta <= math.asin(sin_max)
        return integrate.trapezoid(w[inside], self.theta[inside]) / integrate.trapezoid(w, self.theta)

    def to_csv(self, path, header=None):
        path = Path(path)
        lines = [f"# {k}: {v}" for k, v in (header or self.meta).items()]
        lines.append("theta_rad,perp_p,par_p,par_s")
        for row in zip(self.theta, self.perp_p, self.par_p, self.par_s):
            lines.append(",".join(repr(float(x)) for x in row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path


def angular_pattern(env: EmitterEnvironment, wavelength, theta_grid) -> AngularPattern:
    theta = np.asarray(theta_grid, dtype=float)
    if np.any(theta < 0) or np.any(theta >= math.pi / 2):
        raise ValueError("theta samples must lie in [0, pi/2)")
    optics = StackOptics(env.upward_stack, wavelength)
    perp_p, par_p, par_s = _pattern_terms(optics, env.k1(wavelength), env.depth, theta)
    return AngularPattern(theta, perp_p, par_p, par_s,
                          meta={"wavelength_nm": wavelength, "depth_nm": env.depth})

"""Independent reference calculations used as test oracles.

Nothing here imports the package's optics: reflection coefficients come from
the closed-form three-media (Airy) expression and integrals from dense
trapezoid sums on fixed grids.
"""
import numpy as np


def kz(eps, k0, u, n1):
    w = np.sqrt(np.asarray(eps - (n1 * u) ** 2, dtype=complex))
    return k0 * np.where(w.imag < 0, -w, w)


def airy_reflection(n1, eps_gap, eps_exit, gap, k0, u):
    """(r_s, r_p) of host | gap | exit, written out directly."""
    e1 = n1 * n1
    k1z, k2z, k3z = kz(e1, k0, u, n1), kz(eps_gap, k0, u, n1), kz(eps_exit, k0, u, n1)
    r12s = (k1z - k2z) / (k1z + k2z)
    r23s = (k2z - k3z) / (k2z + k3z)
    r12p = (eps_gap * k1z - e1 * k2z) / (eps_gap * k1z + e1 * k2z)
    r23p = (eps_exit * k2z - eps_gap * k3z) / (eps_exit * k2z + eps_gap * k3z)
    ph = np.exp(2j * k2z * gap)
    with np.errstate(invalid="ignore"):
        rs = (r12s + r23s * ph) / (1 + r12s * r23s * ph)
        rp = (r12p + r23p * ph) / (1 + r12p * r23p * ph)
    return _fill(rs), _fill(rp)


def _fill(r):
    """Patch removable 0/0 points (k_z = 0 in the gap) by continuity."""
    r = np.atleast_1d(r)
    bad = np.flatnonzero(~np.isfinite(r))
    for i in bad:
        nb = [r[j] for j in (i - 1, i + 1) if 0 <= j < len(r) and np.isfinite(r[j])]
        r[i] = np.mean(nb)
    return r


def _trap(f, x):
    return float(np.sum((f[1:] + f[:-1]) * np.diff(x)) / 2)


def _pieces(edges, n_per):
    return np.unique(np.concatenate([np.linspace(a, b, n_per) for a, b in zip(edges[:-1], edges[1:])]))


def dense_decay_rates(n1, eps_gap, eps_exit, gap, wavelength, z0, n_per=200_001, v_cut=1e-12):
    """(Gamma_par, Gamma_perp) by trapezoid sums on dense fixed grids.

    The radiative range uses u = sin(s) and is split at the light lines of the
    gap and exit media; the evanescent range uses v = sqrt(u^2 - 1).
    """
    k0 = 2 * np.pi / wavelength
    k1 = k0 * n1
    a = 2 * k1 * z0
    marks = [0.0, np.pi / 2]
    for e in (eps_gap, eps_exit):
        n = np.sqrt(complex(e)).real
        if 0 < n < n1:
            marks.append(np.arcsin(n / n1))
    s = _pieces(sorted(marks), n_per)
    u, l = np.sin(s), np.cos(s)
    rs, rp = airy_reflection(n1, eps_gap, eps_exit, gap, k0, u)
    ph = np.exp(1j * a * l)
    perp = _trap((u ** 3 * rp * ph).real, s)
    par = _trap((u * (rs - l * l * rp) * ph).real, s)
    v_max = -np.log(v_cut) / a
    v = _pieces([0.0, 0.1 / a, 1 / a, 5 / a, v_max], n_per)
    u = np.sqrt(1 + v * v)
    rs, rp = airy_reflection(n1, eps_gap, eps_exit, gap, k0, u)
    damp = np.exp(-a * v)
    perp += _trap(u * u * rp.imag * damp, v)
    par += _trap((rs + v * v * rp).imag * damp, v)
    return 1 + 0.75 * par, 1 + 1.5 * perp


def dense_collected_power(n1, eps_gap, eps_exit, gap, wavelength, z0, a_par, a_perp, sin_max, n=400_001):
    k0 = 2 * np.pi / wavelength
    th = np.linspace(0.0, np.arcsin(sin_max), n)
    u, l = np.sin(th), np.cos(th)
    if eps_exit is None:
        rs, rp = np.zeros_like(u, dtype=complex), np.zeros_like(u, dtype=complex)
    else:
        rs, rp = airy_reflection(n1, eps_gap, eps_exit, gap, k0, u)
    ph = np.exp(2j * k0 * n1 * z0 * l)
    perp = 3 / (8 * np.pi) * u ** 2 * np.abs(1 + rp * ph) ** 2
    par = 3 / (16 * np.pi) * (l ** 2 * np.abs(1 - rp * ph) ** 2 + np.abs(1 + rs * ph) ** 2)
    return 2 * np.pi * _trap((a_perp * perp + a_par * par) * u, th)


def reference_power(n1, eps_gap, wavelength, z0, a_par, a_perp, sin_max, n=400_001):
    """Host facing a semi-infinite gap medium."""
    k0 = 2 * np.pi / wavelength
    th = np.linspace(0.0, np.arcsin(sin_max), n)
    u, l = np.sin(th), np.cos(th)
    k1z, k2z = kz(n1 * n1, k0, u, n1), kz(eps_gap, k0, u, n1)
    rs = (k1z - k2z) / (k1z + k2z)
    rp = (eps_gap * k1z - n1 * n1 * k2z) / (eps_gap * k1z + n1 * n1 * k2z)
    ph = np.exp(2j * k0 * n1 * z0 * l)
    perp = 3 / (8 * np.pi) * u ** 2 * np.abs(1 + rp * ph) ** 2
    par = 3 / (16 * np.pi) * (l ** 2 * np.abs(1 - rp * ph) ** 2 + np.abs(1 + rs * ph) ** 2)
    return 2 * np.pi * _trap((a_perp * perp + a_par * par) * u, th)

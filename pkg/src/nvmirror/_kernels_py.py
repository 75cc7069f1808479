"""Pure-Python collected-power kernel.

Mirrors ``_kernels.pyx`` operation for operation; used when the compiled
extension is unavailable or ``NVMIRROR_PURE=1`` is set.
"""
import cmath
import math

import numpy as np

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
XGK = (
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
)
WGK = (
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
)
WG = (
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
)
MAX_SEGMENTS = 2000


def _kz(eps, k0, n1u2):
    w = cmath.sqrt(eps - n1u2)
    if w.imag < 0:
        w = -w
    return k0 * w


def _stack_r(eps, thick, ideal, k0, n1, u):
    n_media = len(eps)
    last = n_media - 2
    n1u2 = (n1 * u) * (n1 * u)
    kz_lo = _kz(eps[last], k0, n1u2)
    if ideal:
        rs, rp = -1.0 + 0j, 1.0 + 0j
    else:
        kz_hi = _kz(eps[last + 1], k0, n1u2)
        e_lo, e_hi = eps[last], eps[last + 1]
        rs = (kz_lo - kz_hi) / (kz_lo + kz_hi)
        rp = (e_hi * kz_lo - e_lo * kz_hi) / (e_hi * kz_lo + e_lo * kz_hi)
    kz_hi = kz_lo
    for i in range(last - 1, -1, -1):
        kz_lo = _kz(eps[i], k0, n1u2)
        e_lo, e_hi = eps[i], eps[i + 1]
        phi = cmath.exp(2j * kz_hi * thick[i])
        rho_s = (kz_lo - kz_hi) / (kz_lo + kz_hi)
        rho_p = (e_hi * kz_lo - e_lo * kz_hi) / (e_hi * kz_lo + e_lo * kz_hi)
        rs = (rho_s + rs * phi) / (1 + rho_s * rs * phi)
        rp = (rho_p + rp * phi) / (1 + rho_p * rp * phi)
        kz_hi = kz_lo
    return rs, rp


def _integrand(p, theta):
    eps, thick, ideal, k0, n1, z0, a_par, a_perp, transmission, n_out = p
    st = math.sin(theta)
    ct = math.cos(theta)
    rs, rp = _stack_r(eps, thick, ideal, k0, n1, st)
    ph = cmath.exp(2j * (k0 * n1 * z0 * ct))
    perp = abs(1 + rp * ph) ** 2 * st * st * (3.0 / (8.0 * math.pi))
    par_p = abs(1 - rp * ph) ** 2 * ct * ct * (3.0 / (16.0 * math.pi))
    par_s = abs(1 + rs * ph) ** 2 * (3.0 / (16.0 * math.pi))
    if transmission:
        # bottom facet, host -> outside medium, power transmittance
        sa = n1 * st / n_out
        ca = math.sqrt(1.0 - sa * sa)
        fs = (n1 * ct - n_out * ca) / (n1 * ct + n_out * ca)
        fp = (n_out * ct - n1 * ca) / (n_out * ct + n1 * ca)
        ts = 1.0 - fs * fs
        tp = 1.0 - fp * fp
        perp *= tp
        par_p *= tp
        par_s *= ts
    return 2.0 * math.pi * (a_perp * perp + a_par * (par_p + par_s)) * st


def _gk15(p, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fc = _integrand(p, c)
    resk = fc * WGK[7]
    resg = fc * WG[3]
    for j in range(7):
        dx = h * XGK[j]
        f1 = _integrand(p, c - dx)
        f2 = _integrand(p, c + dx)
        resk += WGK[j] * (f1 + f2)
        if j % 2 == 1:
            resg += WG[j // 2] * (f1 + f2)
    return resk * h, abs((resk - resg) * h)


def adaptive_integral(p, a, b, rtol, atol):
    """Globally adaptive GK15: bisect the worst segment until converged.

    Returns ``(value, error, ok)``.
    """
    lo = [a]
    hi = [b]
    val, err = _gk15(p, a, b)
    vals = [val]
    errs = [err]
    total, total_err = val, err
    while total_err > max(atol, rtol * abs(total)):
        if len(vals) >= MAX_SEGMENTS:
            return total, total_err, False
        j = max(range(len(errs)), key=errs.__getitem__)
        m = 0.5 * (lo[j] + hi[j])
        v1, e1 = _gk15(p, lo[j], m)
        v2, e2 = _gk15(p, m, hi[j])
        lo.append(m)
        hi.append(hi[j])
        vals.append(v2)
        errs.append(e2)
        hi[j] = m
        vals[j] = v1
        errs[j] = e1
        total = math.fsum(vals)
        total_err = math.fsum(errs)
    return total, total_err, True


def collected_power(eps, thick, ideal, wavelength, z0, a_par, a_perp, sin_max,
                    transmission, n_out, rtol, atol):
    """Power radiated into the cone ``sin(theta) <= sin_max`` below the emitter.

    Returns ``(value, error, ok)``.
    """
    eps = [complex(e) for e in eps]
    thick = [float(t) for t in thick]
    n1 = math.sqrt(eps[0].real)
    k0 = 2.0 * math.pi / wavelength
    p = (eps, thick, bool(ideal), k0, n1, z0, a_par, a_perp, bool(transmission), n_out)
    return adaptive_integral(p, 0.0, math.asin(sin_max), rtol, atol)


def collected_power_scan(eps, thick, ideal, gap_index, gaps, wavelength, z0, a_par, a_perp,
                         sin_max, transmission, n_out, rtol, atol):
    """:func:`collected_power` for each thickness in ``gaps`` applied to one layer.

    Returns ``(values, ok_mask)`` arrays.
    """
    gaps = np.asarray(gaps, dtype=float)
    thick = np.array(thick, dtype=float)
    out = np.empty(len(gaps))
    ok = np.empty(len(gaps), dtype=bool)
    for i, g in enumerate(gaps):
        thick[gap_index] = g
        out[i], _, ok[i] = collected_power(eps, thick, ideal, wavelength, z0, a_par, a_perp,
                                           sin_max, transmission, n_out, rtol, atol)
    return out, ok

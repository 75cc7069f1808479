# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled collected-power kernel; same algorithm as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, asin, sqrt, fabs, M_PI

cnp.import_array()

cdef extern from "<complex.h>" nogil:
    double complex csqrt(double complex)
    double complex cexp(double complex)
    double creal(double complex)
    double cimag(double complex)

cdef enum:
    MAX_SEGMENTS = 2000
    MAX_MEDIA = 64

cdef double XGK[8]
cdef double WGK[8]
cdef double WG[4]
XGK[:] = [0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
          0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
          0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
          0.207784955007898467600689403773245, 0.0]
WGK[:] = [0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
          0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
          0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
          0.204432940075298892414161999234649, 0.209482141084727828012999174891714]
WG[:] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
         0.381830050505118944950369775488975, 0.417959183673469387755102040816327]


cdef struct Params:
    int n_media
    double complex eps[MAX_MEDIA]
    double thick[MAX_MEDIA]
    int ideal
    double k0
    double n1
    double z0
    double a_par
    double a_perp
    int transmission
    double n_out


cdef inline double complex _kz(double complex eps, double k0, double n1u2) nogil:
    cdef double complex w = csqrt(eps - n1u2)
    if cimag(w) < 0:
        w = -w
    return k0 * w


cdef void _stack_r(Params* p, double u, double complex* rs_out, double complex* rp_out) nogil:
    cdef int last = p.n_media - 2
    cdef double n1u2 = (p.n1 * u) * (p.n1 * u)
    cdef double complex kz_lo = _kz(p.eps[last], p.k0, n1u2)
    cdef double complex kz_hi, e_lo, e_hi, rs, rp, phi, rho_s, rho_p
    cdef int i
    if p.ideal:
        rs = -1.0
        rp = 1.0
    else:
        kz_hi = _kz(p.eps[last + 1], p.k0, n1u2)
        e_lo = p.eps[last]
        e_hi = p.eps[last + 1]
        rs = (kz_lo - kz_hi) / (kz_lo + kz_hi)
        rp = (e_hi * kz_lo - e_lo * kz_hi) / (e_hi * kz_lo + e_lo * kz_hi)
    kz_hi = kz_lo
    for i in range(last - 1, -1, -1):
        kz_lo = _kz(p.eps[i], p.k0, n1u2)
        e_lo = p.eps[i]
        e_hi = p.eps[i + 1]
        phi = cexp(2j * kz_hi * p.thick[i])
        rho_s = (kz_lo - kz_hi) / (kz_lo + kz_hi)
        rho_p = (e_hi * kz_lo - e_lo * kz_hi) / (e_hi * kz_lo + e_lo * kz_hi)
        rs = (rho_s + rs * phi) / (1 + rho_s * rs * phi)
        rp = (rho_p + rp * phi) / (1 + rho_p * rp * phi)
        kz_hi = kz_lo
    rs_out[0] = rs
    rp_out[0] = rp


cdef inline double _abs2(double complex z) nogil:
    return creal(z) * creal(z) + cimag(z) * cimag(z)


cdef double _integrand(Params* p, double theta) nogil:
    cdef double st = sin(theta)
    cdef double ct = cos(theta)
    cdef double complex rs, rp, ph
    cdef double perp, par_p, par_s, sa, ca, fs, fp
    _stack_r(p, st, &rs, &rp)
    ph = cexp(2j * (p.k0 * p.n1 * p.z0 * ct))
    perp = _abs2(1 + rp * ph) * st * st * (3.0 / (8.0 * M_PI))
    par_p = _abs2(1 - rp * ph) * ct * ct * (3.0 / (16.0 * M_PI))
    par_s = _abs2(1 + rs * ph) * (3.0 / (16.0 * M_PI))
    if p.transmission:
        sa = p.n1 * st / p.n_out
        ca = sqrt(1.0 - sa * sa)
        fs = (p.n1 * ct - p.n_out * ca) / (p.n1 * ct + p.n_out * ca)
        fp = (p.n_out * ct - p.n1 * ca) / (p.n_out * ct + p.n1 * ca)
        perp *= 1.0 - fp * fp
        par_p *= 1.0 - fp * fp
        par_s *= 1.0 - fs * fs
    return 2.0 * M_PI * (p.a_perp * perp + p.a_par * (par_p + par_s)) * st


cdef void _gk15(Params* p, double a, double b, double* val, double* err) nogil:
    cdef double c = 0.5 * (a + b)
    cdef double h = 0.5 * (b - a)
    cdef double fc = _integrand(p, c)
    cdef double resk = fc * WGK[7]
    cdef double resg = fc * WG[3]
    cdef double dx, f1, f2
    cdef int j
    for j in range(7):
        dx = h * XGK[j]
        f1 = _integrand(p, c - dx)
        f2 = _integrand(p, c + dx)
        resk += WGK[j] * (f1 + f2)
        if j % 2 == 1:
            resg += WG[j // 2] * (f1 + f2)
    val[0] = resk * h
    err[0] = fabs((resk - resg) * h)


cdef int _adaptive(Params* p, double a, double b, double rtol, double atol,
                   double* value, double* error) nogil:
    cdef double lo[MAX_SEGMENTS]
    cdef double hi[MAX_SEGMENTS]
    cdef double vals[MAX_SEGMENTS]
    cdef double errs[MAX_SEGMENTS]
    cdef int n = 1, j, k
    cdef double total, total_err, m, v1, e1, v2, e2, tol
    lo[0] = a
    hi[0] = b
    _gk15(p, a, b, &vals[0], &errs[0])
    total = vals[0]
    total_err = errs[0]
    while True:
        tol = rtol * fabs(total)
        if tol < atol:
            tol = atol
        if total_err <= tol:
            break
        if n >= MAX_SEGMENTS:
            value[0] = total
            error[0] = total_err
            return 0
        j = 0
        for k in range(1, n):
            if errs[k] > errs[j]:
                j = k
        m = 0.5 * (lo[j] + hi[j])
        _gk15(p, lo[j], m, &v1, &e1)
        _gk15(p, m, hi[j], &v2, &e2)
        lo[n] = m
        hi[n] = hi[j]
        vals[n] = v2
        errs[n] = e2
        hi[j] = m
        vals[j] = v1
        errs[j] = e1
        n += 1
        total = 0.0
        total_err = 0.0
        for k in range(n):
            total += vals[k]
            total_err += errs[k]
    value[0] = total
    error[0] = total_err
    return 1


cdef void _fill(Params* p, eps, thick, ideal, double wavelength, double z0, double a_par,
                double a_perp, transmission, double n_out) except *:
    cdef int i
    n = len(eps)
    if n > MAX_MEDIA or n < 2:
        raise ValueError(f"stack must have between 2 and {MAX_MEDIA} media")
    p.n_media = n
    for i in range(n):
        p.eps[i] = complex(eps[i])
    for i in range(n - 2):
        p.thick[i] = float(thick[i])
    p.ideal = 1 if ideal else 0
    p.k0 = 2.0 * M_PI / wavelength
    p.n1 = sqrt(creal(p.eps[0]))
    p.z0 = z0
    p.a_par = a_par
    p.a_perp = a_perp
    p.transmission = 1 if transmission else 0
    p.n_out = n_out


def collected_power(eps, thick, ideal, double wavelength, double z0, double a_par,
                    double a_perp, double sin_max, transmission, double n_out,
                    double rtol, double atol):
    """Power radiated into the cone ``sin(theta) <= sin_max``; ``(value, error, ok)``."""
    cdef Params p
    cdef double value, error
    cdef int ok
    _fill(&p, eps, thick, ideal, wavelength, z0, a_par, a_perp, transmission, n_out)
    with nogil:
        ok = _adaptive(&p, 0.0, asin(sin_max), rtol, atol, &value, &error)
    return value, error, bool(ok)


def collected_power_scan(eps, thick, ideal, int gap_index, gaps, double wavelength,
                         double z0, double a_par, double a_perp, double sin_max,
                         transmission, double n_out, double rtol, double atol):
    """Loop :func:`collected_power` over thicknesses of layer ``gap_index``."""
    cdef Params p
    cdef double[::1] g = np.ascontiguousarray(gaps, dtype=np.float64)
    cdef Py_ssize_t n = g.shape[0], i
    out_arr = np.empty(n, dtype=np.float64)
    ok_arr = np.empty(n, dtype=np.uint8)
    cdef double[::1] out = out_arr
    cdef unsigned char[::1] ok = ok_arr
    cdef double value, error, theta_max
    _fill(&p, eps, thick, ideal, wavelength, z0, a_par, a_perp, transmission, n_out)
    if gap_index < 0 or gap_index >= p.n_media - 2:
        raise IndexError("gap_index does not name a layer")
    theta_max = asin(sin_max)
    with nogil:
        for i in range(n):
            p.thick[gap_index] = g[i]
            ok[i] = _adaptive(&p, 0.0, theta_max, rtol, atol, &value, &error)
            out[i] = value
    return out_arr, ok_arr.astype(bool)

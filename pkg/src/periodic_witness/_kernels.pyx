# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled slit-pair integration kernel (Gaussian profiles only).

Same algorithm and signatures as ``_kernels_py``; see that module for the
coordinate conventions.  ``wide_cdf`` must be None here.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport erfc, exp, sqrt, floor, ceil, fabs, fmin, fmax

cnp.import_array()

cdef double[15] NODES
cdef double[15] KW
cdef double[15] GW

cdef double[8] _XGK = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0]
cdef double[8] _WGK = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714]
cdef double[4] _WG = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327]

cdef int _i
for _i in range(7):
    NODES[_i] = -_XGK[_i]
    NODES[14 - _i] = _XGK[_i]
    KW[_i] = _WGK[_i]
    KW[14 - _i] = _WGK[_i]
    GW[_i] = 0.0
    GW[14 - _i] = 0.0
NODES[7] = 0.0
KW[7] = _WGK[7]
GW[7] = _WG[3]
GW[1] = _WG[0]; GW[13] = _WG[0]
GW[3] = _WG[1]; GW[11] = _WG[1]
GW[5] = _WG[2]; GW[9] = _WG[2]

cdef double INV_SQRT2 = 0.70710678118654752440
cdef double INV_SQRT2PI = 0.39894228040143267794

cdef enum:
    STACK = 128


cdef inline double _ndtr_upper(double x) nogil:
    # P(Z > x)
    return 0.5 * erfc(x * INV_SQRT2)


cdef inline double _interval_mass(double lo, double hi, double sig_v) nogil:
    cdef double a = lo / sig_v
    cdef double b = hi / sig_v
    cdef double r
    if a > 0:
        r = _ndtr_upper(a) - _ndtr_upper(b)
    else:
        r = _ndtr_upper(-b) - _ndtr_upper(-a)
    return r if r > 0 else 0.0


cdef inline double _integrand(double u, double xa0, double xa1, double xb0, double xb1,
                              double sig_u, double sig_v) nogil:
    cdef double lo = fmax(2.0 * xa0 - u, 2.0 * xb0 + u)
    cdef double hi = fmin(2.0 * xa1 - u, 2.0 * xb1 + u)
    cdef double z
    if hi <= lo:
        return 0.0
    z = u / sig_u
    return exp(-0.5 * z * z) * INV_SQRT2PI / sig_u * _interval_mass(lo, hi, sig_v)


cdef inline void _gk15(double a, double b, double xa0, double xa1, double xb0, double xb1,
                       double sig_u, double sig_v, double* val, double* err) nogil:
    cdef double half = 0.5 * (b - a)
    cdef double mid = 0.5 * (a + b)
    cdef double k = 0.0
    cdef double g = 0.0
    cdef double f
    cdef int i
    for i in range(15):
        f = _integrand(mid + half * NODES[i], xa0, xa1, xb0, xb1, sig_u, sig_v)
        k += KW[i] * f
        g += GW[i] * f
    val[0] = half * k
    err[0] = fabs(half * (k - g))


cdef double _adaptive(double a, double b, double xa0, double xa1, double xb0, double xb1,
                      double sig_u, double sig_v, double tol, int max_depth,
                      double* err_out, int* failed) nogil:
    cdef double sa[STACK]
    cdef double sb[STACK]
    cdef double st[STACK]
    cdef int sd[STACK]
    cdef int top = 0
    cdef double total = 0.0
    cdef double etot = 0.0
    cdef double lo, hi, t, m, v, e
    cdef int depth
    sa[0] = a; sb[0] = b; st[0] = tol; sd[0] = 0
    top = 1
    while top > 0:
        top -= 1
        lo = sa[top]; hi = sb[top]; t = st[top]; depth = sd[top]
        _gk15(lo, hi, xa0, xa1, xb0, xb1, sig_u, sig_v, &v, &e)
        if e <= t or depth >= max_depth or top + 2 > STACK:
            if e > t:
                failed[0] += 1
            total += v
            etot += e
        else:
            m = 0.5 * (lo + hi)
            sa[top] = lo; sb[top] = m; st[top] = 0.5 * t; sd[top] = depth + 1
            sa[top + 1] = m; sb[top + 1] = hi; st[top + 1] = 0.5 * t; sd[top + 1] = depth + 1
            top += 2
    err_out[0] += etot
    return total


cdef double _rect(double xa0, double xa1, double xb0, double xb1, double sig_u, double sig_v,
                  double cut, double tol, int max_depth, double* err, int* failed) nogil:
    cdef double umin = fmax(xa0 - xb1, -cut * sig_u)
    cdef double umax = fmin(xa1 - xb0, cut * sig_u)
    cdef double k1 = xa0 - xb0
    cdef double k2 = xa1 - xb1
    cdef double e[4]
    cdef double total = 0.0
    cdef int i
    if umax <= umin:
        return 0.0
    e[0] = umin
    e[1] = fmin(fmax(fmin(k1, k2), umin), umax)
    e[2] = fmin(fmax(fmax(k1, k2), umin), umax)
    e[3] = umax
    for i in range(3):
        if e[i + 1] > e[i]:
            total += _adaptive(e[i], e[i + 1], xa0, xa1, xb0, xb1, sig_u, sig_v,
                               tol / 3.0, max_depth, err, failed)
    return total


def rect_prob(double xa0, double xa1, double xb0, double xb1, double sig_u, double sig_v,
              double cut, double tol, int max_depth=50, wide_cdf=None):
    """Probability of one rectangle. Returns ``(value, error_estimate, n_failed)``."""
    if wide_cdf is not None:
        raise NotImplementedError("compiled kernel supports Gaussian profiles only")
    cdef double err = 0.0
    cdef int failed = 0
    cdef double v = _rect(xa0, xa1, xb0, xb1, sig_u, sig_v, cut, tol, max_depth, &err, &failed)
    return v, err, failed


def pair_sum(double oa, double sa, double ob, double sb, int d, double lo, double hi,
             bint reflect_b, double sig_u, double sig_v, double cut, double tol,
             int max_depth=50, wide_cdf=None):
    """Sum rectangle probabilities of all slit pairs into a d x d matrix.

    Returns ``(matrix, max_entry_error_estimate, n_failed_pieces, n_rectangles)``.
    """
    if wide_cdf is not None:
        raise NotImplementedError("compiled kernel supports Gaussian profiles only")
    cdef long i0 = <long>floor((lo - oa) / sa)
    cdef long i1 = <long>ceil((hi - oa) / sa)
    cdef double reach = cut * sig_u
    cdef long i, j, jlo, jhi, n_rect = 0
    cdef int k, l
    cdef double xa0, xa1, xb0, xb1
    cdef int failed = 0
    cdef double rect_tol

    # First pass counts rectangles so the per-rectangle budget is known.
    for i in range(i0, i1):
        xa0 = fmax(lo, oa + i * sa)
        xa1 = fmin(hi, oa + (i + 1) * sa)
        if xa1 <= xa0:
            continue
        jlo = <long>floor((fmax(lo, xa0 - reach) - ob) / sb)
        jhi = <long>ceil((fmin(hi, xa1 + reach) - ob) / sb)
        if jhi > jlo:
            n_rect += jhi - jlo

    out_arr = np.zeros((d, d), dtype=np.float64)
    err_arr = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] errs = err_arr
    if n_rect == 0:
        return out_arr, 0.0, 0, 0
    rect_tol = tol * d * d / n_rect
    if rect_tol < 1e-15:
        rect_tol = 1e-15

    n_rect = 0
    with nogil:
        for i in range(i0, i1):
            xa0 = fmax(lo, oa + i * sa)
            xa1 = fmin(hi, oa + (i + 1) * sa)
            if xa1 <= xa0:
                continue
            k = <int>(((i % d) + d) % d)
            jlo = <long>floor((fmax(lo, xa0 - reach) - ob) / sb)
            jhi = <long>ceil((fmin(hi, xa1 + reach) - ob) / sb)
            for j in range(jlo, jhi):
                xb0 = fmax(lo, ob + j * sb)
                xb1 = fmin(hi, ob + (j + 1) * sb)
                if xb1 <= xb0:
                    continue
                if reflect_b:
                    l = <int>((((-j - 1) % d) + d) % d)
                else:
                    l = <int>(((j % d) + d) % d)
                out[k, l] += _rect(xa0, xa1, xb0, xb1, sig_u, sig_v, cut, rect_tol,
                                   max_depth, &errs[k, l], &failed)
                n_rect += 1
    return out_arr, float(err_arr.max()), failed, n_rect

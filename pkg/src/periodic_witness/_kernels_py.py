"""Pure NumPy implementation of the slit-pair integration kernel.

Every rectangle ``[xa0, xa1) x [xb0, xb1)`` is integrated in rotated
coordinates: an outer integral over ``u = xA - xB`` with a Gaussian weight of
width ``sig_u`` and, inside, the probability that ``v = xA + xB`` falls in the
interval allowed by the rectangle at that ``u``.  The inner probability is a
difference of cumulative distribution values, so the outer integrand is smooth
apart from two kinks which are used as breakpoints.

Callers that need the outer integral over ``v`` instead mirror arm B
(``reflect_b=True``), which swaps the roles of ``u`` and ``v``.

The compiled module ``_kernels`` exposes the same two functions.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

# Gauss-Kronrod 15-point nodes on [-1, 1] and the embedded 7-point Gauss rule.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_W = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes counted from the ends.
GAUSS_W[[1, 3, 5]] = _WG[:3]
GAUSS_W[7] = _WG[3]
GAUSS_W[[13, 11, 9]] = _WG[:3]

_SQRT2PI = math.sqrt(2.0 * math.pi)
CHUNK = 1 << 16


def _interval_mass(lo, hi, sig_v, wide_cdf):
    """P(lo < v < hi), evaluated on the side of the distribution with less cancellation."""
    if wide_cdf is None:
        a = lo / sig_v
        b = hi / sig_v
        upper_tail = a > 0
        out = np.where(upper_tail, ndtr(-a) - ndtr(-b), ndtr(b) - ndtr(a))
    else:
        upper_tail = lo > 0
        out = np.where(upper_tail, wide_cdf(-lo) - wide_cdf(-hi), wide_cdf(hi) - wide_cdf(lo))
    return np.maximum(out, 0.0)


def _integrand(u, xa0, xa1, xb0, xb1, sig_u, sig_v, wide_cdf):
    lo = np.maximum(2.0 * xa0 - u, 2.0 * xb0 + u)
    hi = np.minimum(2.0 * xa1 - u, 2.0 * xb1 + u)
    inner = np.where(hi > lo, _interval_mass(lo, np.maximum(hi, lo), sig_v, wide_cdf), 0.0)
    weight = np.exp(-0.5 * (u / sig_u) ** 2) / (_SQRT2PI * sig_u)
    return weight * inner


def _gk15(a, b, params, sig_u, sig_v, wide_cdf):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    u = mid[:, None] + half[:, None] * NODES[None, :]
    xa0, xa1, xb0, xb1 = (p[:, None] for p in params)
    f = _integrand(u, xa0, xa1, xb0, xb1, sig_u, sig_v, wide_cdf)
    k = half * (f @ KRONROD_W)
    g = half * (f @ GAUSS_W)
    return k, np.abs(k - g)


def _pieces(xa0, xa1, xb0, xb1, sig_u, cut):
    """Split each rectangle's u-range at its kinks and clip to +-cut*sig_u.

    Returns (a, b, rect_index) arrays of non-empty pieces.
    """
    umin = np.maximum(xa0 - xb1, -cut * sig_u)
    umax = np.minimum(xa1 - xb0, cut * sig_u)
    k1 = xa0 - xb0
    k2 = xa1 - xb1
    kmin = np.minimum(k1, k2)
    kmax = np.maximum(k1, k2)
    edges = np.stack([
        umin,
        np.clip(kmin, umin, umax),
        np.clip(kmax, umin, umax),
        umax,
    ], axis=1)
    a = edges[:, :-1].ravel()
    b = edges[:, 1:].ravel()
    idx = np.repeat(np.arange(xa0.size), 3)
    keep = b > a
    return a[keep], b[keep], idx[keep]


def _integrate_rects(xa0, xa1, xb0, xb1, sig_u, sig_v, cut, tol, max_depth, wide_cdf):
    """Adaptive GK15 over many rectangles. Returns (values, errors, n_failed)."""
    n = xa0.size
    values = np.zeros(n)
    errors = np.zeros(n)
    if n == 0:
        return values, errors, 0
    a, b, idx = _pieces(xa0, xa1, xb0, xb1, sig_u, cut)
    piece_tol = np.full(a.size, tol / 3.0)
    failed = 0
    depth = 0
    while a.size:
        params = (xa0[idx], xa1[idx], xb0[idx], xb1[idx])
        val = np.empty(a.size)
        err = np.empty(a.size)
        for start in range(0, a.size, CHUNK):
            sl = slice(start, start + CHUNK)
            val[sl], err[sl] = _gk15(a[sl], b[sl], tuple(p[sl] for p in params), sig_u, sig_v, wide_cdf)
        ok = err <= piece_tol
        if depth >= max_depth:
            ok[:] = True
            failed += int(np.count_nonzero(err > piece_tol))
        np.add.at(values, idx[ok], val[ok])
        np.add.at(errors, idx[ok], err[ok])
        bad = ~ok
        if not bad.any():
            break
        a_bad, b_bad, idx_bad, tol_bad = a[bad], b[bad], idx[bad], piece_tol[bad]
        m = 0.5 * (a_bad + b_bad)
        a = np.concatenate([a_bad, m])
        b = np.concatenate([m, b_bad])
        idx = np.concatenate([idx_bad, idx_bad])
        piece_tol = np.concatenate([tol_bad, tol_bad]) * 0.5
        depth += 1
    return values, errors, failed


def rect_prob(xa0, xa1, xb0, xb1, sig_u, sig_v, cut, tol, max_depth=50, wide_cdf=None):
    """Probability of one rectangle. Returns ``(value, error_estimate, n_failed)``."""
    arr = [np.array([float(x)]) for x in (xa0, xa1, xb0, xb1)]
    v, e, failed = _integrate_rects(*arr, sig_u, sig_v, cut, tol, max_depth, wide_cdf)
    return float(v[0]), float(e[0]), failed


def _slit_bounds(offset, s, lo, hi):
    i0 = math.floor((lo - offset) / s)
    i1 = math.ceil((hi - offset) / s)
    return i0, max(i0, i1)


def enumerate_pairs(oa, sa, ob, sb, d, lo, hi, reflect_b, sig_u, cut):
    """All slit pairs within the support whose u-range reaches +-cut*sig_u.

    Arm B's slit grid is given in the (possibly mirrored) coordinate used for
    integration; ``reflect_b`` only affects the mask index assigned to it.
    """
    i0, i1 = _slit_bounds(oa, sa, lo, hi)
    ia = np.arange(i0, i1, dtype=np.int64)
    xa0 = np.maximum(lo, oa + ia * sa)
    xa1 = np.minimum(hi, oa + (ia + 1) * sa)
    keep = xa1 > xa0
    ia, xa0, xa1 = ia[keep], xa0[keep], xa1[keep]
    reach = cut * sig_u
    jlo = np.floor((np.maximum(lo, xa0 - reach) - ob) / sb).astype(np.int64)
    jhi = np.ceil((np.minimum(hi, xa1 + reach) - ob) / sb).astype(np.int64)
    counts = np.maximum(jhi - jlo, 0)
    rep = np.repeat(np.arange(ia.size), counts)
    starts = np.repeat(jlo, counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    jb = starts + offsets
    xb0 = np.maximum(lo, ob + jb * sb)
    xb1 = np.minimum(hi, ob + (jb + 1) * sb)
    ok = xb1 > xb0
    rep, jb, xb0, xb1 = rep[ok], jb[ok], xb0[ok], xb1[ok]
    k = np.mod(ia[rep], d)
    if reflect_b:
        l = np.mod(-jb - 1, d)
    else:
        l = np.mod(jb, d)
    return xa0[rep], xa1[rep], xb0, xb1, k, l


def pair_sum(oa, sa, ob, sb, d, lo, hi, reflect_b, sig_u, sig_v, cut, tol, max_depth=50,
             wide_cdf=None):
    """Sum rectangle probabilities of all slit pairs into a d x d matrix.

    ``tol`` is the absolute error budget for each matrix entry.  Returns
    ``(matrix, max_entry_error_estimate, n_failed_pieces, n_rectangles)``.
    """
    xa0, xa1, xb0, xb1, k, l = enumerate_pairs(oa, sa, ob, sb, d, lo, hi, reflect_b, sig_u, cut)
    n = xa0.size
    out = np.zeros((d, d))
    if n == 0:
        return out, 0.0, 0, 0
    rect_tol = max(tol * d * d / n, 1e-15)
    vals, errs, failed = _integrate_rects(xa0, xa1, xb0, xb1, sig_u, sig_v, cut, rect_tol,
                                          max_depth, wide_cdf)
    flat = k * d + l
    out = np.bincount(flat, weights=vals, minlength=d * d).reshape(d, d)
    err = np.bincount(flat, weights=errs, minlength=d * d)
    return out, float(err.max()), failed, n

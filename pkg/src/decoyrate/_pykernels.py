"""Pure-Python grid kernels; the reference twin of ``_kernels.pyx``."""
import math

import numpy as np

from . import _layout as L

LN2 = math.log(2.0)


def _delta(x, ln_half_eps):
    return (-ln_half_eps + math.sqrt(ln_half_eps * ln_half_eps - 8.0 * ln_half_eps * x)) / (2.0 * x)


def _shrink(x, ln_half_eps):
    if x <= 0.0:
        return 0.0
    v = 1.0 - _delta(x, ln_half_eps)
    return v if v > 0.0 else 0.0


def _h(x):
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def _theta(nt, nk, e, eps, log_scale):
    n = nt + nk
    g = nt / n
    d = (1.0 - g) * g * LN2 / (2.0 * (1.0 - e) * e)
    num = -math.log(eps * math.sqrt(e * (1.0 - e) * nt * nk / n)) * log_scale / n
    if num <= 0.0:
        return 0.0
    return math.sqrt(num / d)


def _point(p, s):
    """Return (K, P, clamps) at vacuum yield ``s`` on one axis."""
    clamps = 0
    m = p[L.C0] - p[L.SL0] * s
    if p[L.N_LINES] > 1:
        m2 = p[L.C1] - p[L.SL1] * s
        if m2 > m:
            m = m2
    if m < 0.0:
        m = 0.0
        clamps += 1
    lh = p[L.LN_HALF_EPS]
    s1key = m * _shrink(p[L.N1_KEY] * m, lh)
    s1test = m * _shrink(p[L.N1_TEST] * m, lh)
    if s1test <= 0.0:
        e = L.E_CAP
        clamps += 1
    else:
        x0 = p[L.N0_TEST] * s
        vac = p[L.A0_TEST] * s * _shrink(x0, lh) / 2.0
        e = (p[L.TBAR] - vac) / (p[L.A1_TEST] * s1test)
        if e < 0.0:
            e = 0.0
            clamps += 1
        elif e > L.E_CAP:
            e = L.E_CAP
            clamps += 1
    nt, nk = p[L.N_THETA_TEST], p[L.N_THETA_KEY]
    if nt <= 0.0 or nk <= 0.0:
        eph = L.E_CAP
    else:
        ec = min(max(e, L.E_FLOOR), L.E_CAP)
        eph = e + _theta(nt, nk, ec, p[L.EPS], p[L.LOG_SCALE])
        if eph > L.E_CAP:
            eph = L.E_CAP
            clamps += 1
    return p[L.PREF_KEY] * s1key, 1.0 - _h(eph), clamps


def axis_terms(params, s):
    """Key-gain factor K and privacy factor P along one axis of vacuum yields."""
    p = [float(v) for v in params]
    s = np.asarray(s, dtype=np.float64)
    k_out = np.empty(s.shape[0])
    p_out = np.empty(s.shape[0])
    c_out = np.empty(s.shape[0], dtype=np.int64)
    for i, si in enumerate(s.tolist()):
        k_out[i], p_out[i], c_out[i] = _point(p, si)
    return k_out, p_out, c_out


def grid_min(kz, pz, kx, px, cost):
    """Row-major minimum of kz[i]*px[j] + kx[j]*pz[i] - cost; first index wins ties."""
    kz, pz, kx, px = (np.asarray(a, dtype=np.float64).tolist() for a in (kz, pz, kx, px))
    best, bi, bj = math.inf, -1, -1
    for i in range(len(kz)):
        kzi, pzi = kz[i], pz[i]
        for j in range(len(kx)):
            r = kzi * px[j] + kx[j] * pzi - cost
            if r < best:
                best, bi, bj = r, i, j
    return best, bi, bj


def grid_fill(kz, pz, kx, px, cost):
    kz, pz, kx, px = (np.asarray(a, dtype=np.float64).tolist() for a in (kz, pz, kx, px))
    out = np.empty((len(kz), len(kx)))
    for i in range(len(kz)):
        for j in range(len(kx)):
            out[i, j] = kz[i] * px[j] + kx[j] * pz[i] - cost
    return out


def _line(p, t, k_other, p_other, cost):
    k, q, _ = _point(p, t)
    return k * p_other + k_other * q - cost


def golden_axis(params, a, b, k_other, p_other, cost, iters, tol):
    """Golden-section minimum of ``K(t)*p_other + k_other*P(t) - cost`` on [a, b].

    Returns the best ``(t, value)`` seen, endpoints included.
    """
    p = [float(v) for v in params]
    invphi = 0.6180339887498949
    a, b = float(a), float(b)
    best_x, best_f = a, _line(p, a, k_other, p_other, cost)
    fb = _line(p, b, k_other, p_other, cost)
    if fb < best_f:
        best_x, best_f = b, fb
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = _line(p, c, k_other, p_other, cost), _line(p, d, k_other, p_other, cost)
    for _ in range(iters):
        if fc < best_f:
            best_x, best_f = c, fc
        if fd < best_f:
            best_x, best_f = d, fd
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = _line(p, c, k_other, p_other, cost)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = _line(p, d, k_other, p_other, cost)
    if fc < best_f:
        best_x, best_f = c, fc
    if fd < best_f:
        best_x, best_f = d, fd
    return best_x, best_f

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled grid kernels; must agree with ``_pykernels`` to rounding."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, log2, sqrt, INFINITY

cnp.import_array()

cdef enum:
    N_LINES = 0
    C0 = 1
    SL0 = 2
    C1 = 3
    SL1 = 4
    N1_KEY = 5
    N1_TEST = 6
    N0_TEST = 7
    TBAR = 8
    A0_TEST = 9
    A1_TEST = 10
    PREF_KEY = 11
    N_THETA_TEST = 12
    N_THETA_KEY = 13
    LN_HALF_EPS = 14
    EPS = 15
    LOG_SCALE = 16

cdef double E_FLOOR = 1e-12
cdef double E_CAP = 0.5

cdef double LN2 = log(2.0)


cdef inline double _delta(double x, double lh) nogil:
    return (-lh + sqrt(lh * lh - 8.0 * lh * x)) / (2.0 * x)


cdef inline double _shrink(double x, double lh) nogil:
    cdef double v
    if x <= 0.0:
        return 0.0
    v = 1.0 - _delta(x, lh)
    return v if v > 0.0 else 0.0


cdef inline double _h(double x) nogil:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * log2(x) - (1.0 - x) * log2(1.0 - x)


cdef inline double _theta(double nt, double nk, double e, double eps, double log_scale) nogil:
    cdef double n = nt + nk
    cdef double g = nt / n
    cdef double d = (1.0 - g) * g * LN2 / (2.0 * (1.0 - e) * e)
    cdef double num = -log(eps * sqrt(e * (1.0 - e) * nt * nk / n)) * log_scale / n
    if num <= 0.0:
        return 0.0
    return sqrt(num / d)


cdef inline int _point(const double[::1] p, double s, double* k_out, double* p_out) nogil:
    cdef int clamps = 0
    cdef double m, m2, lh, s1key, s1test, x0, vac, e, ec, eph, nt, nk
    m = p[C0] - p[SL0] * s
    if p[N_LINES] > 1:
        m2 = p[C1] - p[SL1] * s
        if m2 > m:
            m = m2
    if m < 0.0:
        m = 0.0
        clamps += 1
    lh = p[LN_HALF_EPS]
    s1key = m * _shrink(p[N1_KEY] * m, lh)
    s1test = m * _shrink(p[N1_TEST] * m, lh)
    if s1test <= 0.0:
        e = E_CAP
        clamps += 1
    else:
        x0 = p[N0_TEST] * s
        vac = p[A0_TEST] * s * _shrink(x0, lh) / 2.0
        e = (p[TBAR] - vac) / (p[A1_TEST] * s1test)
        if e < 0.0:
            e = 0.0
            clamps += 1
        elif e > E_CAP:
            e = E_CAP
            clamps += 1
    nt = p[N_THETA_TEST]
    nk = p[N_THETA_KEY]
    if nt <= 0.0 or nk <= 0.0:
        eph = E_CAP
    else:
        ec = e
        if ec < E_FLOOR:
            ec = E_FLOOR
        elif ec > E_CAP:
            ec = E_CAP
        eph = e + _theta(nt, nk, ec, p[EPS], p[LOG_SCALE])
        if eph > E_CAP:
            eph = E_CAP
            clamps += 1
    k_out[0] = p[PREF_KEY] * s1key
    p_out[0] = 1.0 - _h(eph)
    return clamps


def axis_terms(params, s):
    cdef const double[::1] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef const double[::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef Py_ssize_t n = sv.shape[0], i
    k_arr = np.empty(n)
    p_arr = np.empty(n)
    c_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] ko = k_arr
    cdef double[::1] po = p_arr
    cdef cnp.int64_t[::1] co = c_arr
    with nogil:
        for i in range(n):
            co[i] = _point(p, sv[i], &ko[i], &po[i])
    return k_arr, p_arr, c_arr


def grid_min(kz, pz, kx, px, double cost):
    cdef const double[::1] a = np.ascontiguousarray(kz, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(pz, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(kx, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(px, dtype=np.float64)
    cdef Py_ssize_t i, j, bi = -1, bj = -1
    cdef double best = INFINITY, r, ai, bb
    with nogil:
        for i in range(a.shape[0]):
            ai = a[i]
            bb = b[i]
            for j in range(c.shape[0]):
                r = ai * d[j] + c[j] * bb - cost
                if r < best:
                    best = r
                    bi = i
                    bj = j
    return best, bi, bj


def grid_fill(kz, pz, kx, px, double cost):
    cdef const double[::1] a = np.ascontiguousarray(kz, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(pz, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(kx, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(px, dtype=np.float64)
    out = np.empty((a.shape[0], c.shape[0]))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(a.shape[0]):
            for j in range(c.shape[0]):
                o[i, j] = a[i] * d[j] + c[j] * b[i] - cost
    return out


cdef inline double _line(const double[::1] p, double t, double k_other, double p_other, double cost) nogil:
    cdef double k, q
    _point(p, t, &k, &q)
    return k * p_other + k_other * q - cost


def golden_axis(params, double a, double b, double k_other, double p_other, double cost,
                int iters, double tol):
    cdef const double[::1] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef double invphi = 0.6180339887498949
    cdef double best_x, best_f, fb, c, d, fc, fd
    cdef int it
    with nogil:
        best_x = a
        best_f = _line(p, a, k_other, p_other, cost)
        fb = _line(p, b, k_other, p_other, cost)
        if fb < best_f:
            best_x = b
            best_f = fb
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc = _line(p, c, k_other, p_other, cost)
        fd = _line(p, d, k_other, p_other, cost)
        for it in range(iters):
            if fc < best_f:
                best_x = c
                best_f = fc
            if fd < best_f:
                best_x = d
                best_f = fd
            if b - a <= tol:
                break
            if fc <= fd:
                b = d
                d = c
                fd = fc
                c = b - invphi * (b - a)
                fc = _line(p, c, k_other, p_other, cost)
            else:
                a = c
                c = d
                fc = fd
                d = a + invphi * (b - a)
                fd = _line(p, d, k_other, p_other, cost)
        if fc < best_f:
            best_x = c
            best_f = fc
        if fd < best_f:
            best_x = d
            best_f = fd
    return best_x, best_f

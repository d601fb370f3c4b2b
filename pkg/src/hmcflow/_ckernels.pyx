# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels.py``.

Same signatures, same floating-point operation order, so both backends
agree to the last bit on IEEE hardware (built with -ffp-contract=off).
"""
import numpy as np
from libc.math cimport sqrt, fabs, isfinite, pow

FLOW = 0
STRING = 1

cdef double _A21 = 1.0 / 5.0
cdef double _A31 = 3.0 / 40.0, _A32 = 9.0 / 40.0
cdef double _A41 = 44.0 / 45.0, _A42 = -56.0 / 15.0, _A43 = 32.0 / 9.0
cdef double _A51 = 19372.0 / 6561.0, _A52 = -25360.0 / 2187.0
cdef double _A53 = 64448.0 / 6561.0, _A54 = -212.0 / 729.0
cdef double _A61 = 9017.0 / 3168.0, _A62 = -355.0 / 33.0
cdef double _A63 = 46732.0 / 5247.0, _A64 = 49.0 / 176.0
cdef double _A65 = -5103.0 / 18656.0
cdef double _A71 = 35.0 / 384.0, _A73 = 500.0 / 1113.0, _A74 = 125.0 / 192.0
cdef double _A75 = -2187.0 / 6784.0, _A76 = 11.0 / 84.0
cdef double _E1 = 71.0 / 57600.0, _E3 = -71.0 / 16695.0, _E4 = 71.0 / 1920.0
cdef double _E5 = -17253.0 / 339200.0, _E6 = 22.0 / 525.0, _E7 = -1.0 / 40.0
cdef double _D1 = -12715105075.0 / 11282082432.0
cdef double _D3 = 87487479700.0 / 32700410799.0
cdef double _D4 = -10690763975.0 / 1880347072.0
cdef double _D5 = 701980252875.0 / 199316789632.0
cdef double _D6 = -1453857185.0 / 822651844.0
cdef double _D7 = 69997945.0 / 29380423.0


def support_accel(const double[::1] s, const double[::1] s_thth,
                  const double[::1] p, const double[::1] p_th, double d,
                  double[::1] out):
    cdef Py_ssize_t j, n = s.shape[0]
    cdef double v
    for j in range(n):
        v = s_thth[j] + s[j]
        if not (v > 0.0) or not isfinite(v):
            return j
        out[j] = (p_th[j] * p_th[j] - 1.0) / v
    for j in range(n):
        out[j] = out[j] + d * p[j]
    return -1


def max_char_speed(const double[::1] s, const double[::1] s_thth,
                   const double[::1] p_th):
    cdef Py_ssize_t j, n = s.shape[0]
    cdef double c, best = -1.0
    for j in range(n):
        c = (fabs(p_th[j]) + 1.0) / (s_thth[j] + s[j])
        if c > best or c != c:
            best = c
            if c != c:
                break
    return best


def string_accel(const double[::1] vx, const double[::1] vy,
                 const double[::1] xux, const double[::1] xuy,
                 const double[::1] vux, const double[::1] vuy,
                 const double[::1] xuux, const double[::1] xuuy,
                 double[::1] outx, double[::1] outy):
    cdef Py_ssize_t j, n = vx.shape[0]
    cdef double a, b2, c
    for j in range(n):
        a = xux[j] * xux[j] + xuy[j] * xuy[j]
        if not (a > 0.0) or not isfinite(a):
            return j
    for j in range(n):
        a = xux[j] * xux[j] + xuy[j] * xuy[j]
        b2 = 2.0 * (vx[j] * xux[j] + vy[j] * xuy[j])
        c = vx[j] * vx[j] + vy[j] * vy[j] - 1.0
        outx[j] = (b2 * vux[j] - c * xuux[j]) / a
        outy[j] = (b2 * vuy[j] - c * xuuy[j]) / a
    return -1


cdef inline double _radial_f(int kind, double d, double r, double rd):
    if kind == 0:
        return -1.0 / r + d * rd
    return (rd * rd - 1.0) / r


def radial_dp54(int kind, double d, double r0, double r1, double t_end,
                double rtol, double atol, double r_stop, double h0,
                long max_steps):
    cdef double t = 0.0, y0 = r0, y1 = r1, h
    cdef double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b, k5a, k5b
    cdef double k6a, k6b, k7a, k7b
    cdef double a2, b2, a3, b3, a4, b4, a5, b5, a6, b6, n0, n1, e0, e1
    cdef double sc0, sc1, err, lo, hi, mid, m1, rm
    cdef double ra2, rb2, ra3, rb3, ra4, rb4, ra5, rb5
    cdef long steps = 0
    cdef int it
    cdef bint event = False
    ts, rs, rds = [t], [y0], [y1]
    h = min(h0, t_end) if t_end > 0.0 else 0.0
    k1a = y1
    k1b = _radial_f(kind, d, y0, y1)
    while t < t_end and steps < max_steps:
        if t + h > t_end:
            h = t_end - t
        a2 = y0 + h * _A21 * k1a
        b2 = y1 + h * _A21 * k1b
        k2a = b2
        k2b = _radial_f(kind, d, a2, b2)
        a3 = y0 + h * (_A31 * k1a + _A32 * k2a)
        b3 = y1 + h * (_A31 * k1b + _A32 * k2b)
        k3a = b3
        k3b = _radial_f(kind, d, a3, b3)
        a4 = y0 + h * (_A41 * k1a + _A42 * k2a + _A43 * k3a)
        b4 = y1 + h * (_A41 * k1b + _A42 * k2b + _A43 * k3b)
        k4a = b4
        k4b = _radial_f(kind, d, a4, b4)
        a5 = y0 + h * (_A51 * k1a + _A52 * k2a + _A53 * k3a + _A54 * k4a)
        b5 = y1 + h * (_A51 * k1b + _A52 * k2b + _A53 * k3b + _A54 * k4b)
        k5a = b5
        k5b = _radial_f(kind, d, a5, b5)
        a6 = y0 + h * (_A61 * k1a + _A62 * k2a + _A63 * k3a + _A64 * k4a
                       + _A65 * k5a)
        b6 = y1 + h * (_A61 * k1b + _A62 * k2b + _A63 * k3b + _A64 * k4b
                       + _A65 * k5b)
        if a2 <= 0.0 or a3 <= 0.0 or a4 <= 0.0 or a5 <= 0.0 or a6 <= 0.0:
            h *= 0.25
            continue
        k6a = b6
        k6b = _radial_f(kind, d, a6, b6)
        n0 = y0 + h * (_A71 * k1a + _A73 * k3a + _A74 * k4a + _A75 * k5a
                       + _A76 * k6a)
        n1 = y1 + h * (_A71 * k1b + _A73 * k3b + _A74 * k4b + _A75 * k5b
                       + _A76 * k6b)
        if not n0 > 0.0:
            h *= 0.25
            continue
        k7a = n1
        k7b = _radial_f(kind, d, n0, n1)
        e0 = h * (_E1 * k1a + _E3 * k3a + _E4 * k4a + _E5 * k5a + _E6 * k6a
                  + _E7 * k7a)
        e1 = h * (_E1 * k1b + _E3 * k3b + _E4 * k4b + _E5 * k5b + _E6 * k6b
                  + _E7 * k7b)
        sc0 = atol + rtol * max(fabs(y0), fabs(n0))
        sc1 = atol + rtol * max(fabs(y1), fabs(n1))
        err = sqrt(0.5 * ((e0 / sc0) ** 2 + (e1 / sc1) ** 2))
        if not isfinite(err):
            h *= 0.25
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * pow(err, -0.2))
            continue
        steps += 1
        if n0 <= r_stop:
            ra2 = n0 - y0
            rb2 = n1 - y1
            ra3 = h * k1a - ra2
            rb3 = h * k1b - rb2
            ra4 = ra2 - h * k7a - ra3
            rb4 = rb2 - h * k7b - rb3
            ra5 = h * (_D1 * k1a + _D3 * k3a + _D4 * k4a + _D5 * k5a
                       + _D6 * k6a + _D7 * k7a)
            rb5 = h * (_D1 * k1b + _D3 * k3b + _D4 * k4b + _D5 * k5b
                       + _D6 * k6b + _D7 * k7b)
            lo = 0.0
            hi = 1.0
            for it in range(200):
                mid = 0.5 * (lo + hi)
                if mid == lo or mid == hi:
                    break
                m1 = 1.0 - mid
                rm = y0 + mid * (ra2 + m1 * (ra3 + mid * (ra4 + m1 * ra5)))
                if rm > r_stop:
                    lo = mid
                else:
                    hi = mid
            m1 = 1.0 - hi
            t = t + hi * h
            y0 = y0 + hi * (ra2 + m1 * (ra3 + hi * (ra4 + m1 * ra5)))
            y1 = y1 + hi * (rb2 + m1 * (rb3 + hi * (rb4 + m1 * rb5)))
            ts.append(t)
            rs.append(y0)
            rds.append(y1)
            event = True
            break
        t = t + h if t + h < t_end else t_end
        y0 = n0
        y1 = n1
        k1a = k7a
        k1b = k7b
        ts.append(t)
        rs.append(y0)
        rds.append(y1)
        h *= min(5.0, max(0.2, 0.9 * pow(max(err, 1e-30), -0.2)))
    return (np.array(ts), np.array(rs), np.array(rds), event, steps)

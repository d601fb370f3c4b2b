"""Pure-Python/numpy versions of the hot kernels.

Signatures mirror ``_ckernels.pyx`` exactly; ``hmcflow.kernels`` picks one
at import time.
"""
import math

import numpy as np

FLOW = 0
STRING = 1

# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_A71, _A73, _A74, _A75, _A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                                -2187.0 / 6784.0, 11.0 / 84.0)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)
# Hairer's continuous extension (DOPRI5 contd5)
_D1, _D3, _D4, _D5, _D6, _D7 = (-12715105075.0 / 11282082432.0,
                                87487479700.0 / 32700410799.0,
                                -10690763975.0 / 1880347072.0,
                                701980252875.0 / 199316789632.0,
                                -1453857185.0 / 822651844.0,
                                69997945.0 / 29380423.0)


def support_accel(s, s_thth, p, p_th, d, out):
    """Fill ``out`` with (p_th**2 - 1)/(s_thth + s) + d*p.

    Returns -1 on success, otherwise the first node whose radius of
    curvature is non-positive or non-finite (``out`` is then unspecified).
    """
    v = s_thth + s
    bad = ~(v > 0.0) | ~np.isfinite(v)
    if bad.any():
        return int(np.argmax(bad))
    np.divide(p_th * p_th - 1.0, v, out=out)
    out += d * p
    return -1


def max_char_speed(s, s_thth, p_th):
    return float(np.max((np.abs(p_th) + 1.0) / (s_thth + s)))


def string_accel(vx, vy, xux, xuy, vux, vuy, xuux, xuuy, outx, outy):
    """String acceleration [2<V,X_u> V_u - (|V|^2-1) X_uu] / |X_u|^2.

    Returns -1, or the first node with |X_u| == 0 (or non-finite).
    """
    a = xux * xux + xuy * xuy
    bad = ~(a > 0.0) | ~np.isfinite(a)
    if bad.any():
        return int(np.argmax(bad))
    b2 = 2.0 * (vx * xux + vy * xuy)
    c = vx * vx + vy * vy - 1.0
    np.divide(b2 * vux - c * xuux, a, out=outx)
    np.divide(b2 * vuy - c * xuuy, a, out=outy)
    return -1


def _radial_f(kind, d, r, rd):
    if kind == FLOW:
        return -1.0 / r + d * rd
    return (rd * rd - 1.0) / r


def radial_dp54(kind, d, r0, r1, t_end, rtol, atol, r_stop, h0, max_steps):
    """Integrate the radial ODE (y = (R, R')) with DP5(4) and dense output.

    Stops at ``t_end`` or when R first drops to ``r_stop``; the crossing is
    located by bisection on the continuous extension.
    Returns (times, R, Rdot, event_hit, n_steps).
    """
    t, y0, y1 = 0.0, r0, r1
    ts, rs, rds = [t], [y0], [y1]
    h = min(h0, t_end) if t_end > 0.0 else 0.0
    k1a, k1b = y1, _radial_f(kind, d, y0, y1)
    steps = 0
    event = False
    while t < t_end and steps < max_steps:
        if t + h > t_end:
            h = t_end - t
        a2 = y0 + h * _A21 * k1a
        b2 = y1 + h * _A21 * k1b
        k2a, k2b = b2, _radial_f(kind, d, a2, b2)
        a3 = y0 + h * (_A31 * k1a + _A32 * k2a)
        b3 = y1 + h * (_A31 * k1b + _A32 * k2b)
        k3a, k3b = b3, _radial_f(kind, d, a3, b3)
        a4 = y0 + h * (_A41 * k1a + _A42 * k2a + _A43 * k3a)
        b4 = y1 + h * (_A41 * k1b + _A42 * k2b + _A43 * k3b)
        k4a, k4b = b4, _radial_f(kind, d, a4, b4)
        a5 = y0 + h * (_A51 * k1a + _A52 * k2a + _A53 * k3a + _A54 * k4a)
        b5 = y1 + h * (_A51 * k1b + _A52 * k2b + _A53 * k3b + _A54 * k4b)
        k5a, k5b = b5, _radial_f(kind, d, a5, b5)
        a6 = y0 + h * (_A61 * k1a + _A62 * k2a + _A63 * k3a + _A64 * k4a
                       + _A65 * k5a)
        b6 = y1 + h * (_A61 * k1b + _A62 * k2b + _A63 * k3b + _A64 * k4b
                       + _A65 * k5b)
        if a2 <= 0.0 or a3 <= 0.0 or a4 <= 0.0 or a5 <= 0.0 or a6 <= 0.0:
            h *= 0.25
            continue
        k6a, k6b = b6, _radial_f(kind, d, a6, b6)
        n0 = y0 + h * (_A71 * k1a + _A73 * k3a + _A74 * k4a + _A75 * k5a
                       + _A76 * k6a)
        n1 = y1 + h * (_A71 * k1b + _A73 * k3b + _A74 * k4b + _A75 * k5b
                       + _A76 * k6b)
        if not n0 > 0.0:
            h *= 0.25
            continue
        k7a, k7b = n1, _radial_f(kind, d, n0, n1)
        e0 = h * (_E1 * k1a + _E3 * k3a + _E4 * k4a + _E5 * k5a + _E6 * k6a
                  + _E7 * k7a)
        e1 = h * (_E1 * k1b + _E3 * k3b + _E4 * k4b + _E5 * k5b + _E6 * k6b
                  + _E7 * k7b)
        sc0 = atol + rtol * max(abs(y0), abs(n0))
        sc1 = atol + rtol * max(abs(y1), abs(n1))
        err = math.sqrt(0.5 * ((e0 / sc0) ** 2 + (e1 / sc1) ** 2))
        if not math.isfinite(err):
            h *= 0.25
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        steps += 1
        if n0 <= r_stop:
            # dense output coefficients for both components
            ra2, rb2 = n0 - y0, n1 - y1
            ra3, rb3 = h * k1a - ra2, h * k1b - rb2
            ra4, rb4 = ra2 - h * k7a - ra3, rb2 - h * k7b - rb3
            ra5 = h * (_D1 * k1a + _D3 * k3a + _D4 * k4a + _D5 * k5a
                       + _D6 * k6a + _D7 * k7a)
            rb5 = h * (_D1 * k1b + _D3 * k3b + _D4 * k4b + _D5 * k5b
                       + _D6 * k6b + _D7 * k7b)
            lo, hi = 0.0, 1.0
            for _ in range(200):
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
        y0, y1 = n0, n1
        k1a, k1b = k7a, k7b
        ts.append(t)
        rs.append(y0)
        rds.append(y1)
        h *= min(5.0, max(0.2, 0.9 * max(err, 1e-30) ** -0.2))
    return (np.array(ts), np.array(rs), np.array(rds), event, steps)

"""Small numeric helpers shared by several modules."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=256)
def gauss_legendre(n):
    """Nodes and weights on [-1, 1], cached by order."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    return x, w


def gl_panel(a, b, n):
    """Gauss-Legendre nodes/weights mapped to the interval [a, b]."""
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def smoothstep5(u):
    """Quintic smoothstep: 0 at u<=0, 1 at u>=1, C^2 across the joints."""
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (10.0 + u * (-15.0 + 6.0 * u))


def tube_cutoff(y_tilde, eta):
    """Transverse cutoff: identically 1 on |y|<=eta, 0 on |y|>=2*eta."""
    s = np.abs(y_tilde) / eta
    return smoothstep5(2.0 - s)


def circular_mean(angles, weights):
    """Weighted mean direction of angles (radians); weights need not normalize."""
    c = np.sum(weights * np.cos(angles))
    s = np.sum(weights * np.sin(angles))
    return np.arctan2(s, c)


def unwrap_series(values, period):
    """Unwrap a 1-D sequence so consecutive jumps stay below half a period."""
    out = np.asarray(values, dtype=float).copy()
    for i in range(1, out.size):
        d = out[i] - out[i - 1]
        out[i] -= period * np.round(d / period)
    return out


def loglog_slope(x, y):
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return np.polyfit(lx, ly, 1)[0]

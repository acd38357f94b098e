"""Compiled orbit kernels for the rotation number and the Lyapunov exponent.

Matrix entries are passed as Fourier coefficient blocks (2, 2, N+1); the
entries are summed at each orbit point with the power recurrence z^l.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _eval_mat(cr, ci, x, out):
    N = cr.shape[2] - 1
    zr = math.cos(TWO_PI * x)
    zi = math.sin(TWO_PI * x)
    for i in range(2):
        for j in range(2):
            out[i, j] = cr[i, j, 0]
    pr, pi_ = 1.0, 0.0
    for l in range(1, N + 1):
        pr, pi_ = pr * zr - pi_ * zi, pr * zi + pi_ * zr
        for i in range(2):
            for j in range(2):
                out[i, j] += 2.0 * (cr[i, j, l] * pr - ci[i, j, l] * pi_)


@njit(cache=True)
def _eval_fn(fr, fi, x):
    N = fr.shape[0] - 1
    zr = math.cos(TWO_PI * x)
    zi = math.sin(TWO_PI * x)
    s = fr[0]
    pr, pi_ = 1.0, 0.0
    for l in range(1, N + 1):
        pr, pi_ = pr * zr - pi_ * zi, pr * zi + pi_ * zr
        s += 2.0 * (fr[l] * pr - fi[l] * pi_)
    return s


@njit(cache=True)
def _bump(t):
    if t <= 0.0 or t >= 1.0:
        return 0.0
    return math.exp(-1.0 / (t * (1.0 - t)))


@njit(cache=True)
def rotation_orbit(cr, ci, fr, fi, degree, alpha, x0, theta0, L):
    """Bump-weighted average of projective angle increments along one orbit.

    The increment at x is taken within pi of the centre 2*pi*(phi(x) + degree*x)
    (the polar rotation angle of A(x)); the degree part is then removed.
    """
    A = np.empty((2, 2))
    x = x0
    u0 = math.cos(theta0)
    u1 = math.sin(theta0)
    num = 0.0
    den = 0.0
    for j in range(L):
        _eval_mat(cr, ci, x, A)
        w0 = A[0, 0] * u0 + A[0, 1] * u1
        w1 = A[1, 0] * u0 + A[1, 1] * u1
        centre = TWO_PI * (_eval_fn(fr, fi, x) + degree * x)
        raw = math.atan2(w1, w0) - math.atan2(u1, u0) - centre
        raw = raw - TWO_PI * math.floor((raw + math.pi) / TWO_PI)
        delta = centre + raw - TWO_PI * degree * x
        wt = _bump((j + 0.5) / L)
        num += wt * delta
        den += wt
        nrm = math.hypot(w0, w1)
        u0 = w0 / nrm
        u1 = w1 / nrm
        x += alpha
        x -= math.floor(x)
    return num / den / TWO_PI


@njit(cache=True)
def lyapunov_orbit(cr, ci, alpha, x0, theta0, L, burn):
    """Bump-weighted average of log growth increments after ``burn`` steps."""
    A = np.empty((2, 2))
    x = x0
    u0 = math.cos(theta0)
    u1 = math.sin(theta0)
    num = 0.0
    den = 0.0
    for j in range(burn + L):
        _eval_mat(cr, ci, x, A)
        w0 = A[0, 0] * u0 + A[0, 1] * u1
        w1 = A[1, 0] * u0 + A[1, 1] * u1
        nrm = math.hypot(w0, w1)
        if j >= burn:
            wt = _bump((j - burn + 0.5) / L)
            num += wt * math.log(nrm)
            den += wt
        u0 = w0 / nrm
        u1 = w1 / nrm
        x += alpha
        x -= math.floor(x)
    return num / den


def split(coeffs):
    c = np.ascontiguousarray(coeffs)
    return np.ascontiguousarray(c.real), np.ascontiguousarray(c.imag)

"""Quasi-periodic SL(2, R) cocycles (alpha, A) over x -> x + alpha.

Covers construction (including Schrödinger transfer matrices), iteration
A^(n)(x) = A(x+(n-1)alpha)...A(x), the split of A into a rotation part and a
defect, the anti-conformal projection Q(M) = (M + JMJ)/2, and orbit estimates of
the fibered rotation number and the top Lyapunov exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _orbit
from .arithmetic import exact_alpha
from .errors import NonConvergent, NotNearRotation
from .torusfun import (
    TWO_PI,
    MatFn,
    NormLedger,
    TorusFn,
    _GRID,
    apply_pointwise,
    birkhoff_sum,
    mat_product,
    rotation_mat,
)

J = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class Cocycle:
    alpha: Fraction
    A: MatFn
    alpha_radius: Fraction = Fraction(0)

    @classmethod
    def make(cls, alpha, A: MatFn) -> "Cocycle":
        value, rad = exact_alpha(alpha)
        if not 0 < value < 1:
            raise ValueError("alpha must lie in (0, 1)")
        return cls(value, A, rad)

    @property
    def alpha_float(self) -> float:
        return float(self.alpha)

    def with_matrix(self, A: MatFn) -> "Cocycle":
        return Cocycle(self.alpha, A, self.alpha_radius)

    def det_error(self) -> float:
        M = self.A.default_grid()
        s = self.A.samples(M)
        return float(np.max(np.abs(s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0] - 1.0)))

    def to_json(self) -> dict:
        a = self.alpha
        return {"alpha": f"{a.numerator}/{a.denominator}", "A": self.A.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "Cocycle":
        return cls.make(Fraction(str(data["alpha"])), MatFn.from_json(data["A"]))


def schrodinger(v: TorusFn, E: float, alpha) -> Cocycle:
    """Transfer matrices [[E - v(x), -1], [1, 0]] of u_{n+1} + u_{n-1} + v(x + n alpha) u_n = E u_n."""
    N = v.bandwidth
    c = np.zeros((2, 2, N + 1), dtype=complex)
    c[0, 0] = -v.coeffs
    c[0, 0, 0] += E
    c[0, 1, 0] = -1.0
    c[1, 0, 0] = 1.0
    return Cocycle.make(alpha, MatFn(c, sl2=True))


def almost_mathieu_potential(lam: float) -> TorusFn:
    """v(x) = 2 lam cos(2 pi x)."""
    return TorusFn([0.0, lam])


def iterate(c: Cocycle, n: int, naive: bool = False) -> MatFn:
    """A^(n) by binary splitting A^(m+k)(x) = A^(m)(x + k alpha) A^(k)(x)."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if naive:
        out = c.A
        for j in range(1, n):
            out = mat_product(c.A.translate(c.alpha * j), out)
        return out
    result = None
    done = 0
    power = c.A  # A^(2^j)
    span = 1
    while True:
        if n & span:
            result = power if result is None else mat_product(power.translate(c.alpha * done), result)
            done += span
        if 2 * span > n:
            break
        power = mat_product(power.translate(c.alpha * span), power)
        span *= 2
    return result


# ---------------------------------------------------------------------------
# conformal / anti-conformal split


def q_project(M: MatFn) -> MatFn:
    """Q(M) = (M + JMJ)/2 = [[(a-d)/2, (b+c)/2], [(b+c)/2, (d-a)/2]]."""
    a, b, cc, d = M.coeffs[0, 0], M.coeffs[0, 1], M.coeffs[1, 0], M.coeffs[1, 1]
    s = (a - d) / 2
    t = (b + cc) / 2
    return MatFn(np.array([[s, t], [t, -s]]))


def conformal_part(M: MatFn) -> MatFn:
    """M - Q(M) = [[p, -r], [r, p]], which commutes with rotations."""
    a, b, cc, d = M.coeffs[0, 0], M.coeffs[0, 1], M.coeffs[1, 0], M.coeffs[1, 1]
    p = (a + d) / 2
    r = (cc - b) / 2
    return MatFn(np.array([[p, -r], [r, p]]))


def q_matrix(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + J @ M @ J)


def _angle_samples(s: np.ndarray, x: np.ndarray):
    """Continuous lift of the conformal angle on a grid, and its degree."""
    p = 0.5 * (s[0, 0] + s[1, 1])
    r = 0.5 * (s[1, 0] - s[0, 1])
    raw = np.arctan2(r, p) / TWO_PI
    steps = np.diff(np.concatenate([raw, raw[:1]]))
    steps -= np.round(steps)
    degree = int(round(float(steps.sum())))
    lift = raw[0] % 1.0 + np.concatenate([[0.0], np.cumsum(steps[:-1])])
    return lift - degree * x, degree


def conformal_angle(A: MatFn) -> tuple[TorusFn, int]:
    """Angle of the conformal part of A as (periodic part, degree)."""
    M = A.default_grid()
    _, degree = _angle_samples(A.samples(M), np.arange(M) / M)
    phi = apply_pointwise(lambda s, x: _angle_samples(s, x)[0], [A, _GRID], 2 * A.bandwidth)
    return phi, degree


@dataclass(frozen=True)
class DecomposedCocycle:
    alpha: Fraction
    phi: TorusFn
    F: MatFn
    degree: int = 0
    alpha_radius: Fraction = Fraction(0)

    def rotation(self) -> MatFn:
        return rotation_mat(self.phi, self.degree)

    def reconstitute(self) -> Cocycle:
        return Cocycle(self.alpha, (self.rotation() + self.F).with_sl2(True), self.alpha_radius)


def _defect_samples(s: np.ndarray, sl2: bool) -> np.ndarray:
    """F = A - C/sqrt(det C) pointwise, with det C - 1 taken from Q when det A = 1."""
    qa = 0.5 * (s[0, 0] - s[1, 1])
    qb = 0.5 * (s[0, 1] + s[1, 0])
    p = 0.5 * (s[0, 0] + s[1, 1])
    r = 0.5 * (s[1, 0] - s[0, 1])
    D = p * p + r * r
    Dm1 = qa * qa + qb * qb if sl2 else D - 1.0
    sq = np.sqrt(D)
    k = Dm1 / (sq * (sq + 1.0))  # 1 - 1/sqrt(D)
    return np.array([[qa + k * p, qb - k * r], [qb + k * r, -qa + k * p]])


def decompose(c, det_floor: float = 1e-10) -> DecomposedCocycle:
    """Split A = R_{phi(x) + degree*x} + F, with R the polar rotation (A - Q(A))/sqrt(det(A - Q(A)))."""
    A = c.A if isinstance(c, Cocycle) else c
    M = A.default_grid()
    s = A.samples(M)
    p = 0.5 * (s[0, 0] + s[1, 1])
    r = 0.5 * (s[1, 0] - s[0, 1])
    dmin = float(np.min(p * p + r * r))
    if dmin <= det_floor:
        raise NotNearRotation(f"min det(A - Q(A)) = {dmin:.3e} <= {det_floor:g}")
    phi, degree = conformal_angle(A)
    # F is formed by cancellation between O(1) entries: its noise floor is absolute
    floor = 4e-16 * float(np.abs(s).max())
    F = apply_pointwise(lambda s: _defect_samples(s, A.sl2), [A], 2 * A.bandwidth, kind=MatFn, floor=floor)
    alpha = c.alpha if isinstance(c, Cocycle) else Fraction(0)
    rad = c.alpha_radius if isinstance(c, Cocycle) else Fraction(0)
    return DecomposedCocycle(alpha, phi, F, degree, rad)


# ---------------------------------------------------------------------------
# orbit estimates


@dataclass(frozen=True)
class RotationOptions:
    initial_conditions: int = 8
    L0: int = 2**12
    L_max: int = 2**20
    tol: float = 1e-10
    spread_max: float = 1e-3


@dataclass(frozen=True)
class RotationNumberEstimate:
    rho: float
    error_bound: float
    orbit_length: int
    degree: int = 0
    raw: float = 0.0  # lifted average before reduction mod 1


def _initial_conditions(k: int):
    return [((j + 0.5) / k, math.pi * (2 * j + 1) / (2 * k) + 0.1) for j in range(k)]


def rotation_number(c: Cocycle, opts: RotationOptions | None = None) -> RotationNumberEstimate:
    """Fibered rotation number by bump-weighted averages of projective angle increments.

    The orbit length doubles from L0 until the spread over initial conditions
    plus the change from the previous length drops below ``tol``.
    """
    opts = opts or RotationOptions()
    phi, degree = conformal_angle(c.A)
    cr, ci = _orbit.split(c.A.coeffs)
    fr, fi = _orbit.split(phi.coeffs)
    a = float(c.alpha)
    ics = _initial_conditions(opts.initial_conditions)
    L = opts.L0
    prev = None
    while True:
        vals = np.array([_orbit.rotation_orbit(cr, ci, fr, fi, degree, a, x0, t0, L) for x0, t0 in ics])
        est = float(vals.mean())
        spread = float(vals.max() - vals.min())
        err = spread + (abs(est - prev) if prev is not None else spread)
        if (prev is not None and err < opts.tol) or L >= opts.L_max:
            break
        prev = est
        L *= 2
    if spread > opts.spread_max:
        raise NonConvergent(f"rotation number spread {spread:.2e} over initial conditions at L={L}")
    err = max(err, 1e-15)
    rho = est % 1.0
    if rho >= 1.0:  # est a tiny negative number
        rho = 0.0
    return RotationNumberEstimate(rho, err, L, degree, est)


def lyapunov(c: Cocycle, L: int = 100_000, phases: int = 8, burn: int | None = None) -> float:
    """Bump-weighted average of log|A(x_j) v_j| (v_j renormalised), averaged over fixed phases."""
    if L < 100:
        raise ValueError("L must be >= 100")
    burn = min(1000, L // 10) if burn is None else burn
    cr, ci = _orbit.split(c.A.coeffs)
    a = float(c.alpha)
    vals = [_orbit.lyapunov_orbit(cr, ci, a, x0, t0, L, burn) for x0, t0 in _initial_conditions(phases)]
    return float(np.mean(vals))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IteratedDefect:
    n: int
    xi: MatFn
    norms: NormLedger = field(repr=False, default=None)
    phi_sum: TorusFn | None = field(repr=False, default=None)  # S_n phi, mean reduced mod 1


def _rot_samples(t):
    c, s = np.cos(TWO_PI * t), np.sin(TWO_PI * t)
    return np.array([[c, -s], [s, c]])


def _combine_defects(Em_shifted: MatFn, s_k: TorusFn, Ek: MatFn) -> MatFn:
    """E_{m+k} = (I + R_{-s} E_m(. + k alpha) R_s)(I + E_k) - I with s = S_k phi."""

    def f(em, s, ek):
        conj = np.einsum("ijm,jkm,klm->ilm", _rot_samples(-s), em, _rot_samples(s))
        return conj + ek + np.einsum("ijm,jkm->ikm", conj, ek)

    return apply_pointwise(
        f, [Em_shifted, s_k, Ek], Em_shifted.bandwidth + Ek.bandwidth + 2 * s_k.bandwidth, kind=MatFn
    )


def iterated_defect(d: DecomposedCocycle, n: int, orders=(0, 1)) -> IteratedDefect:
    """xi = A^(n) - R_{S_n phi} for the cocycle A = R_phi + F.

    The iterate is carried as E_m = R_{-S_m phi} A^(m) - Id, which stays small,
    so xi keeps relative accuracy even when n is large.
    """
    if d.degree != 0:
        raise NotNearRotation("iterated defect needs a degree-zero rotation part")
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    a = d.alpha
    rot = lambda t: birkhoff_sum(d.phi, a, t, mod_one=True)  # noqa: E731
    E1 = apply_pointwise(
        lambda p, F: np.einsum("ijm,jkm->ikm", _rot_samples(-p), F),
        [d.phi, d.F],
        d.phi.bandwidth * 2 + d.F.bandwidth,
        kind=MatFn,
    )
    result = None
    done = 0
    power, span = E1, 1
    while True:
        if n & span:
            result = power if result is None else _combine_defects(power.translate(a * done), rot(done), result)
            done += span
        if 2 * span > n:
            break
        power = _combine_defects(power.translate(a * span), rot(span), power)
        span *= 2
    S = rot(n)
    xi = apply_pointwise(
        lambda s, e: np.einsum("ijm,jkm->ikm", _rot_samples(s), e),
        [S, result],
        2 * S.bandwidth + result.bandwidth,
        kind=MatFn,
    )
    return IteratedDefect(n, xi, NormLedger.of(xi, orders, label=f"xi(q={n})"), phi_sum=S)

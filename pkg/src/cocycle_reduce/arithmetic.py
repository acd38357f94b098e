"""Continued fractions, the convergent subsequence driving the scheme, and
resonance checks on the rotation number.

All denominators are Python integers. The frequency is carried as an exact
``Fraction`` together with an uncertainty radius, so partial quotients are only
emitted while they are certified for every number in ``[alpha - r, alpha + r]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import mpmath

from .errors import RationalInput

__all__ = [
    "ConvergentTable",
    "Subsequence",
    "ResonanceReport",
    "exact_alpha",
    "expand",
    "dist_to_integer",
    "frac_centered",
    "select_subsequence",
    "check_resonances",
    "golden_alpha",
    "liouville_alpha",
]


def exact_alpha(alpha) -> tuple[Fraction, Fraction]:
    """Return ``(value, radius)`` with ``value`` the exact rational carried by
    ``alpha`` and ``radius`` its representation uncertainty.

    Floats are exact dyadic rationals known to half an ulp; ``mpmath.mpf``
    values to ``2**-prec`` relative; rationals and decimal strings are exact.
    A ``(value, radius)`` tuple is passed through.
    """
    if isinstance(alpha, bool):
        raise TypeError("alpha must be a number")
    if isinstance(alpha, tuple):
        value, radius = alpha
        return Fraction(value), Fraction(radius)
    if isinstance(alpha, Rational):
        return Fraction(alpha), Fraction(0)
    if isinstance(alpha, float):
        if not math.isfinite(alpha):
            raise ValueError("alpha must be finite")
        return Fraction(alpha), Fraction(math.ulp(alpha)) / 2
    if isinstance(alpha, mpmath.mpf):
        man, exp = alpha.man_exp
        value = Fraction(int(man)) * Fraction(2) ** int(exp)
        prec = mpmath.mp.prec
        return value, abs(value) / Fraction(2) ** prec
    if isinstance(alpha, str):
        return Fraction(alpha), Fraction(0)
    raise TypeError(f"unsupported alpha type {type(alpha).__name__}")


def golden_alpha(bits: int = 256) -> tuple[Fraction, Fraction]:
    """(sqrt(5) - 1)/2 as ``(value, radius)`` accurate to about ``bits`` bits."""
    with mpmath.workprec(bits + 16):
        g = (mpmath.sqrt(5) - 1) / 2
    man, exp = g.man_exp
    return Fraction(int(man)) * Fraction(2) ** int(exp), Fraction(1, 2**bits)


def liouville_alpha(k: int) -> Fraction:
    """Truncated Liouville number sum_{j=1..k} 10**(-j!)."""
    return sum((Fraction(1, 10 ** math.factorial(j)) for j in range(1, k + 1)), Fraction(0))


def dist_to_integer(x):
    """Distance to the nearest integer; exact for rationals."""
    if isinstance(x, Rational):
        x = Fraction(x)
        return abs(x - round(x))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    return abs(x - round(x))


def frac_centered(x: Fraction) -> Fraction:
    """Representative of x mod 1 in [-1/2, 1/2)."""
    r = x - math.floor(x)
    return r - 1 if r >= Fraction(1, 2) else r


@dataclass(frozen=True)
class ConvergentTable:
    alpha: Fraction
    partial_quotients: tuple[int, ...]  # a_1, a_2, ...
    denominators: tuple[int, ...]  # q_0, q_1, ...
    numerators: tuple[int, ...]  # p_0, p_1, ...
    radius: Fraction = Fraction(0)
    stop_reason: str = "max_terms"  # max_terms | q_cap | precision | rational
    precision_exhausted: bool = False

    @property
    def count(self) -> int:
        return len(self.denominators)

    def q(self, n: int) -> int:
        return self.denominators[n]

    def convergent(self, n: int) -> Fraction:
        return Fraction(self.numerators[n], self.denominators[n])

    def check_recursion(self) -> bool:
        q = self.denominators
        if q[0] != 1:
            return False
        prev = 0
        for n in range(1, len(q)):
            if q[n] != self.partial_quotients[n - 1] * q[n - 1] + prev:
                return False
            prev = q[n - 1]
        return all(q[n + 1] > q[n] for n in range(1, len(q) - 1))

    def sandwich_holds(self, k: int) -> bool:
        """1/(q_{k+1}+q_k) < |q_k alpha - p_k| < 1/q_{k+1}, exactly.

        For k >= 1 the left side is ||q_k alpha||; at k = 0 with a_1 = 1 the
        nearest integer to alpha is 1, not p_0 = 0, so the distance to p_k is used.
        """
        q = self.denominators
        d = abs(q[k] * self.alpha - self.numerators[k])
        return Fraction(1, q[k + 1] + q[k]) < d < Fraction(1, q[k + 1])

    def best_approximation_holds(self, n: int, max_enumerate: int = 10**5, samples: int = 20000) -> bool:
        """||k alpha|| >= ||q_{n-1} alpha|| for 1 <= k < q_n.

        Enumerates every k when q_n is small, otherwise checks a deterministic
        sample of k (including the neighbours of every smaller convergent).
        """
        q = self.denominators
        ref = dist_to_integer(q[n - 1] * self.alpha)
        p, d = self.alpha.numerator, self.alpha.denominator

        def ok(k):
            r = (k * p) % d
            return Fraction(min(r, d - r), d) >= ref

        if q[n] <= max_enumerate:
            return all(ok(k) for k in range(1, q[n]))
        ks = set()
        for m in range(n):
            for off in (-1, 0, 1):
                if 1 <= q[m] + off < q[n]:
                    ks.add(q[m] + off)
        step = max(1, q[n] // samples)
        ks.update(range(1, q[n], step))
        return all(ok(k) for k in ks)


def expand(alpha, max_terms: int = 40, q_cap: int | None = None, radius=None) -> ConvergentTable:
    """Continued-fraction expansion of ``alpha`` in (0, 1).

    Returns at most ``max_terms`` denominators q_0..q_{max_terms-1}. The
    expansion stops early (``precision_exhausted``) once the uncertainty
    interval around alpha no longer pins down the next partial quotient, or
    when the exact value turns out to be rational.
    """
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    value, rad = exact_alpha(alpha)
    if radius is not None:
        rad = Fraction(radius)
    if not 0 < value < 1:
        raise ValueError("alpha must lie in (0, 1)")

    a: list[int] = []
    q = [1]
    p = [0]
    q_prev, p_prev = 0, 1
    x = value
    lo, hi = value - rad, value + rad
    reason = "max_terms"
    exhausted = False
    while len(q) < max_terms:
        if x == 0:
            reason, exhausted = "rational", True
            break
        if lo <= 0:
            reason, exhausted = "precision", True
            break
        x = 1 / x
        lo, hi = 1 / hi, 1 / lo
        ak = math.floor(x)
        if math.floor(lo) != ak or math.floor(hi) != ak or lo == ak:
            # the exact value sits on an integer here: input is rational up to its precision
            reason = "rational" if x == ak else "precision"
            exhausted = True
            break
        qn = ak * q[-1] + q_prev
        if q_cap is not None and qn > q_cap:
            reason = "q_cap"
            break
        pn = ak * p[-1] + p_prev
        a.append(ak)
        q_prev, p_prev = q[-1], p[-1]
        q.append(qn)
        p.append(pn)
        x = x - ak
        lo, hi = lo - ak, hi - ak
    if exhausted and len(q) < 2:
        raise RationalInput(f"rational input: alpha = {value} (indistinguishable from rational at its precision)")
    return ConvergentTable(
        alpha=value,
        partial_quotients=tuple(a),
        denominators=tuple(q),
        numerators=tuple(p),
        radius=rad,
        stop_reason=reason,
        precision_exhausted=exhausted,
    )


@dataclass(frozen=True)
class Subsequence:
    indices: tuple[int, ...]
    q_values: tuple[int, ...]
    s_values: tuple[int, ...]
    exhausted: bool = True
    branches: tuple[str, ...] = ()  # how each n_{h+1} was chosen
    diagnostics: tuple[str, ...] = ()

    def __len__(self):
        return len(self.indices)

    def growth_bounds_hold(self, table: ConvergentTable) -> bool:
        """q_{n_{h+1}} <= q_{n_h + 1}^4 and s_h^6 <= q_{n_{h+1}}^12 along the subsequence."""
        q = table.denominators
        for h in range(len(self.indices) - 1):
            nxt = self.q_values[h + 1]
            if nxt > q[self.indices[h] + 1] ** 4:
                return False
            if self.s_values[h] ** 6 > nxt**12:
                return False
        return True


def select_subsequence(table: ConvergentTable | Sequence[int]) -> Subsequence:
    """Subsequence n_0 = 0 < n_1 < ... of convergent indices.

    Given n_h and Q = q_{n_h + 1}: take the smallest k with Q**2 <= q_k < Q**4
    if one exists, otherwise the largest k with q_k <= Q**2. Selection stops
    (``exhausted``) as soon as the table is too short to decide n_{h+1}.
    """
    q = list(table.denominators if isinstance(table, ConvergentTable) else table)
    if len(q) < 2:
        raise ValueError("need at least two convergents")
    indices = [0]
    branches: list[str] = []
    diagnostics: list[str] = []
    while True:
        n = indices[-1]
        if n + 1 >= len(q):
            break
        Q = q[n + 1]
        lo, hi = Q * Q, Q**4
        if q[-1] < lo:
            break  # cannot tell whether some later q_k lands in [Q^2, Q^4)
        candidates = [k for k in range(len(q)) if lo <= q[k] < hi]
        if candidates:
            k = candidates[0]
            branch = "window"
        else:
            k = max(j for j in range(len(q)) if q[j] <= lo)
            branch = "max"
        if k <= n:
            diagnostics.append(f"h={len(indices) - 1}: rule returned k={k} <= n_h={n}; advanced to n_h+1")
            k = n + 1
        indices.append(k)
        branches.append(branch)
    s = []
    prod = 1
    for k in indices:
        prod *= q[k]
        s.append(prod)
    return Subsequence(
        indices=tuple(indices),
        q_values=tuple(q[k] for k in indices),
        s_values=tuple(s),
        exhausted=True,
        branches=tuple(branches),
        diagnostics=tuple(diagnostics),
    )


@dataclass(frozen=True)
class ResonanceReport:
    h: int
    n: int
    q: int
    rho: float
    value: float
    threshold: float
    passed: bool = field(default=False)


def resonance_threshold(epsilon: float, n: int) -> float:
    return epsilon if n == 0 else epsilon / n**2


def check_resonances(rho, sub: Subsequence, epsilon: float) -> list[ResonanceReport]:
    """||2 q_{n_h} rho|| against eps / n_h**2 (eps itself when n_h = 0)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    r = Fraction(rho) if not isinstance(rho, Fraction) else rho
    reports = []
    for h, (n, q) in enumerate(zip(sub.indices, sub.q_values)):
        value = float(dist_to_integer(2 * q * r))
        thr = resonance_threshold(epsilon, n)
        reports.append(ResonanceReport(h, n, q, float(rho), value, thr, value >= thr))
    return reports

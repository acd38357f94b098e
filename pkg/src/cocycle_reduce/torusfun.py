"""Band-limited real functions on the circle and 2x2 matrix functions.

A ``TorusFn`` stores Fourier coefficients c_l for l = 0..N of a real function
f(x) = sum_{|l| <= N} c_l e^{2 pi i l x} with c_{-l} = conj(c_l); only the
non-negative half is kept, so Hermitian symmetry holds by construction.
``MatFn`` stores a (2, 2, N+1) coefficient block with one shared bandwidth.

Nonlinear operations (products, cos/sin, inverses) go through
``apply_pointwise``: evaluate on an oversampled grid, transform back, and double
the grid until the upper half of the spectrum is below ``tail_tol`` relative to
the largest coefficient.

Translations take the shift as an exact rational whenever possible so that
phases l*beta mod 1 are reduced with integer arithmetic.
"""

from __future__ import annotations

import contextvars
import math
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Callable, Sequence

import numpy as np

from .errors import BandwidthOverflow, DegenerateNorm, NonFinite, SingularMatrix, SmallDivisorWarning

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Numerics:
    tail_tol: float = 1e-13
    chop_tol: float = 1e-15
    max_modes: int = 2**14
    grid_factor: int = 4
    small_divisor: float = 1e-14
    noise_ceiling: float = 1e-9


_NUMERICS: contextvars.ContextVar[Numerics] = contextvars.ContextVar("numerics", default=Numerics())


def get_numerics() -> Numerics:
    return _NUMERICS.get()


@contextmanager
def numerics(**overrides):
    """Temporarily override the adaptive-resampling settings."""
    token = _NUMERICS.set(replace(_NUMERICS.get(), **overrides))
    try:
        yield _NUMERICS.get()
    finally:
        _NUMERICS.reset(token)


def _pow2_at_least(n: int) -> int:
    return 1 << max(3, (int(n) - 1).bit_length())


# ---------------------------------------------------------------------------
# coefficient <-> grid transforms on arrays with a trailing mode axis


def _to_grid(c: np.ndarray, M: int) -> np.ndarray:
    N = c.shape[-1] - 1
    if M < 2 * N + 2:
        raise ValueError(f"grid of size {M} too small for bandwidth {N}")
    X = np.zeros(c.shape[:-1] + (M // 2 + 1,), dtype=complex)
    X[..., : N + 1] = c * M
    return np.fft.irfft(X, n=M, axis=-1)


def _from_grid(s: np.ndarray) -> np.ndarray:
    M = s.shape[-1]
    X = np.fft.rfft(s, axis=-1) / M
    if M % 2 == 0:
        X[..., M // 2] *= 0.5  # split the Nyquist term between +M/2 and -M/2
    X[..., 0] = X[..., 0].real
    return X


def _chop(c: np.ndarray, tol: float, floor: float = 0.0) -> np.ndarray:
    """Drop trailing modes below tol * max (or below the absolute floor)."""
    mag = np.abs(c).reshape(-1, c.shape[-1]).max(axis=0)
    scale = mag.max() if mag.size else 0.0
    if scale == 0.0:
        return c[..., :1].copy()
    keep = np.nonzero(mag > max(tol * scale, floor))[0]
    last = int(keep[-1]) if keep.size else 0
    return c[..., : last + 1].copy()


def _pad(c: np.ndarray, N: int) -> np.ndarray:
    n0 = c.shape[-1] - 1
    if n0 == N:
        return c
    if n0 > N:
        return c[..., : N + 1]
    out = np.zeros(c.shape[:-1] + (N + 1,), dtype=complex)
    out[..., : n0 + 1] = c
    return out


# ---------------------------------------------------------------------------
# exact phases


def _as_shift(beta):
    """Exact rational value of a shift (floats are taken at face value)."""
    if isinstance(beta, Rational):
        return Fraction(beta)
    if isinstance(beta, tuple):  # (value, radius) as produced by exact_alpha
        return Fraction(beta[0])
    if isinstance(beta, float):
        if not math.isfinite(beta):
            raise NonFinite("shift must be finite")
        return Fraction(beta)
    if isinstance(beta, (np.floating, np.integer)):
        return Fraction(float(beta))
    raise TypeError(f"unsupported shift type {type(beta).__name__}")


@lru_cache(maxsize=256)
def _phases_cached(p: int, d: int, N: int) -> np.ndarray:
    out = np.empty(N + 1)
    for l in range(N + 1):
        r = (l * p) % d
        if 2 * r >= d:
            r -= d
        out[l] = r / d
    return out


def centered_phases(beta, N: int) -> np.ndarray:
    """t_l = l*beta mod 1 in [-1/2, 1/2) for l = 0..N, reduced exactly."""
    b = _as_shift(beta)
    return _phases_cached(b.numerator, b.denominator, int(N)).copy()


def _shift_factors(beta, N: int) -> np.ndarray:
    t = centered_phases(beta, N)
    return np.exp(TWO_PI * 1j * t)


def _shift_minus_one(beta, N: int) -> np.ndarray:
    """e^{2 pi i l beta} - 1 without cancellation for tiny l*beta mod 1."""
    t = centered_phases(beta, N)
    return 2j * np.sin(np.pi * t) * np.exp(1j * np.pi * t)


# ---------------------------------------------------------------------------


class _Spectral:
    __slots__ = ("coeffs", "_grid_cache")

    def __init__(self, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.ndim == 0 or c.shape[-1] < 1:
            raise ValueError("need at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise NonFinite("non-finite Fourier coefficient")
        c = c.copy()
        c[..., 0] = c[..., 0].real
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "_grid_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("spectral functions are immutable")

    @property
    def bandwidth(self) -> int:
        return self.coeffs.shape[-1] - 1

    def samples(self, M: int) -> np.ndarray:
        """Values on the grid x_j = j/M (cached per M)."""
        s = self._grid_cache.get(M)
        if s is None:
            s = _to_grid(self.coeffs, M)
            s.setflags(write=False)
            self._grid_cache[M] = s
        return s

    def default_grid(self) -> int:
        return _pow2_at_least(4 * (self.bandwidth + 1))

    def _new(self, coeffs):
        return type(self)(coeffs)

    def padded(self, N: int):
        return self._new(_pad(self.coeffs, N))

    def chopped(self, tol: float | None = None):
        tol = get_numerics().chop_tol if tol is None else tol
        return self._new(_chop(self.coeffs, tol))

    def _binary(self, other, op):
        if isinstance(other, _Spectral):
            if type(other) is not type(self):
                raise TypeError("mixing TorusFn and MatFn")
            N = max(self.bandwidth, other.bandwidth)
            return self._new(op(_pad(self.coeffs, N), _pad(other.coeffs, N)))
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return self._new(-self.coeffs)

    def scale(self, s: float):
        return self._new(self.coeffs * float(s))

    def derivative(self, k: int = 1):
        if k < 0:
            raise ValueError("derivative order must be >= 0")
        if k == 0:
            return self
        l = np.arange(self.bandwidth + 1)
        return self._new(self.coeffs * (TWO_PI * 1j * l) ** k)

    def truncate(self, a: float):
        if a < 0:
            raise ValueError("a must be >= 0")
        c = self.coeffs.copy()
        c[..., np.arange(self.bandwidth + 1) > a] = 0
        return self._new(c)

    def rest(self, a: float):
        if a < 0:
            raise ValueError("a must be >= 0")
        c = self.coeffs.copy()
        c[..., np.arange(self.bandwidth + 1) <= a] = 0
        return self._new(c)

    def translate(self, beta):
        """x -> f(x + beta)."""
        if beta == 0:
            return self
        return self._new(self.coeffs * _shift_factors(beta, self.bandwidth))

    def translate_diff(self, beta):
        """x -> f(x + beta) - f(x), computed coefficientwise."""
        return self._new(self.coeffs * _shift_minus_one(beta, self.bandwidth))

    def evaluate(self, x) -> np.ndarray:
        """Direct evaluation at arbitrary points (O(len(x) * N))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        l = np.arange(1, self.bandwidth + 1)
        c = self.coeffs
        out = np.empty(c.shape[:-1] + x.shape)
        for start in range(0, x.size, 256):
            xs = x[start : start + 256]
            E = np.exp(TWO_PI * 1j * np.outer(l, xs))
            out[..., start : start + 256] = c[..., :1].real + 2.0 * np.real(c[..., 1:] @ E)
        return out


class TorusFn(_Spectral):
    """Real trigonometric polynomial on R/Z."""

    __slots__ = ()

    def __init__(self, coeffs):
        super().__init__(coeffs)
        if self.coeffs.ndim != 1:
            raise ValueError("TorusFn coefficients must be one-dimensional")

    @classmethod
    def constant(cls, value: float) -> "TorusFn":
        return cls([float(value)])

    @classmethod
    def zero(cls) -> "TorusFn":
        return cls([0.0])

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], hint: int = 8) -> "TorusFn":
        """Adaptive spectral fit of a callable on [0, 1)."""
        return apply_pointwise(lambda x: func(x), [_GRID], hint, kind=cls)

    @property
    def mean(self) -> float:
        return float(self.coeffs[0].real)

    def __mul__(self, other):
        if isinstance(other, TorusFn):
            return fn_product(self, other)
        if isinstance(other, (int, float, np.floating)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def __call__(self, x):
        return self.evaluate(x)

    def shift_mean(self, delta: float) -> "TorusFn":
        c = self.coeffs.copy()
        c[0] += delta
        return TorusFn(c)

    def to_json(self) -> dict:
        return {
            "bandwidth": self.bandwidth,
            "coefficients": [[float(z.real), float(z.imag)] for z in self.coeffs],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TorusFn":
        try:
            N = int(data["bandwidth"])
            pairs = data["coefficients"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed TorusFn record: {exc}") from None
        if N < 0 or len(pairs) != N + 1:
            raise ValueError("coefficient count does not match bandwidth")
        arr = np.array(pairs, dtype=float)
        if arr.shape != (N + 1, 2):
            raise ValueError("coefficients must be [re, im] pairs")
        if not np.all(np.isfinite(arr)):
            raise NonFinite("non-finite coefficient in TorusFn record")
        if arr[0, 1] != 0.0:
            raise ValueError("mean coefficient must be real for a real-valued function")
        return cls(arr[:, 0] + 1j * arr[:, 1])

    def __repr__(self):
        return f"TorusFn(bandwidth={self.bandwidth}, mean={self.mean:.6g})"


class MatFn(_Spectral):
    """2x2 matrix of real trigonometric polynomials, shared bandwidth."""

    __slots__ = ("sl2",)

    def __init__(self, coeffs, sl2: bool = False):
        super().__init__(coeffs)
        if self.coeffs.shape[:-1] != (2, 2):
            raise ValueError("MatFn coefficients must have shape (2, 2, N+1)")
        object.__setattr__(self, "sl2", bool(sl2))

    def _new(self, coeffs):
        return MatFn(coeffs, sl2=False)

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[TorusFn]], sl2: bool = False) -> "MatFn":
        N = max(e.bandwidth for row in entries for e in row)
        c = np.stack([np.stack([_pad(e.coeffs, N) for e in row]) for row in entries])
        return cls(c, sl2=sl2)

    @classmethod
    def constant(cls, M, sl2: bool | None = None) -> "MatFn":
        M = np.asarray(M, dtype=float)
        if M.shape != (2, 2):
            raise ValueError("expected a 2x2 matrix")
        if sl2 is None:
            sl2 = abs(np.linalg.det(M) - 1.0) <= 1e-12
        return cls(M.reshape(2, 2, 1).astype(complex), sl2=sl2)

    @classmethod
    def identity(cls) -> "MatFn":
        return cls.constant(np.eye(2), sl2=True)

    def entry(self, i: int, j: int) -> TorusFn:
        return TorusFn(self.coeffs[i, j])

    @property
    def entries(self):
        return [[self.entry(i, j) for j in range(2)] for i in range(2)]

    def with_sl2(self, flag: bool = True) -> "MatFn":
        return MatFn(self.coeffs, sl2=flag)

    def mean_matrix(self) -> np.ndarray:
        return self.coeffs[:, :, 0].real.copy()

    def translate(self, beta):
        out = super().translate(beta)
        return out.with_sl2(self.sl2)

    def chopped(self, tol=None):
        return super().chopped(tol).with_sl2(self.sl2)

    def __matmul__(self, other):
        if isinstance(other, MatFn):
            return mat_product(self, other)
        return NotImplemented

    def __call__(self, x):
        return np.moveaxis(self.evaluate(x), -1, 0)

    def det(self) -> TorusFn:
        return apply_pointwise(
            lambda s: s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0], [self], 2 * self.bandwidth, kind=TorusFn
        )

    def to_json(self) -> dict:
        return {
            "entries": [[self.entry(i, j).to_json() for j in range(2)] for i in range(2)],
            "sl2": self.sl2,
        }

    @classmethod
    def from_json(cls, data: dict) -> "MatFn":
        try:
            rows = data["entries"]
            if len(rows) != 2 or any(len(r) != 2 for r in rows):
                raise ValueError("entries must be 2x2")
            entries = [[TorusFn.from_json(e) for e in row] for row in rows]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed MatFn record: {exc}") from None
        return cls.from_entries(entries, sl2=bool(data.get("sl2", False)))

    def __repr__(self):
        return f"MatFn(bandwidth={self.bandwidth}, sl2={self.sl2})"


class _GridPoints:
    """Placeholder input whose samples are the grid abscissae."""

    bandwidth = 0

    def samples(self, M):
        return np.arange(M) / M


_GRID = _GridPoints()


def grid_points(M: int) -> np.ndarray:
    return np.arange(M) / M


# ---------------------------------------------------------------------------
# adaptive pointwise evaluation


def apply_pointwise(func, inputs, hint: int, kind=TorusFn, sl2: bool = False, groups=None, floor: float = 0.0):
    """Spectral fit of ``func(*samples)`` where samples are grid values of
    ``inputs``. The grid starts at ``grid_factor * (hint + 1)`` points and
    doubles until the coefficients above M/4 are negligible; modes l <= M/4
    are kept and trailing coefficients below ``chop_tol`` are dropped.

    ``kind=None`` returns the raw coefficient array. ``groups`` lists index
    sets of the flattened leading axes whose tails are judged separately,
    each against its own largest coefficient.

    Results formed with cancellation (a small output from O(1) inputs) carry a
    rounding floor that no grid can remove. Callers that know it pass
    ``floor`` (absolute): tails below it are accepted and trailing coefficients
    below it are chopped. Otherwise, if the tail stops shrinking when the grid
    doubles and is already below ``noise_ceiling``, it is taken as the floor.
    """
    cfg = get_numerics()
    need = max([hint] + [x.bandwidth for x in inputs])
    M = _pow2_at_least(cfg.grid_factor * (need + 1))
    prev = None
    while True:
        out = np.asarray(func(*[x.samples(M) for x in inputs]), dtype=float)
        if not np.all(np.isfinite(out)):
            raise NonFinite("non-finite values in pointwise operation")
        c = _from_grid(out)
        mag = np.abs(c).reshape(-1, c.shape[-1])
        keep = M // 4
        worst = 0.0
        for rows in groups or [slice(None)]:
            m = mag[rows]
            scale = m.max()
            if scale > 0.0 and m.shape[-1] > keep + 1:
                tail = m[..., keep + 1 :].max()
                if tail > floor:
                    worst = max(worst, tail / scale)
        plateau = prev is not None and worst >= 0.25 * prev and worst <= cfg.noise_ceiling
        if worst <= cfg.tail_tol or plateau:
            c = c[..., : keep + 1]
            if kind is None:
                return c
            c = _chop(c, cfg.chop_tol, floor)
            if kind is MatFn:
                return MatFn(c, sl2=sl2)
            return kind(c)
        if keep >= cfg.max_modes:
            raise BandwidthOverflow(
                f"relative spectral tail {worst:.2e} above tolerance at {keep} modes (cap {cfg.max_modes})"
            )
        prev = worst
        M *= 2


def from_samples(samples) -> TorusFn:
    """Trigonometric interpolant of equispaced samples on [0, 1).

    For even M the Nyquist term is split evenly between modes +M/2 and -M/2,
    so the interpolant has bandwidth M/2 and reproduces the samples exactly.
    """
    s = np.asarray(samples, dtype=float)
    if s.ndim != 1 or s.size < 8:
        raise ValueError("need a one-dimensional array of at least 8 samples")
    if not np.all(np.isfinite(s)):
        raise NonFinite("non-finite sample")
    return TorusFn(_from_grid(s))


def derivative(f, k: int = 1):
    return f.derivative(k)


def truncate(f, a: float):
    return f.truncate(a)


def rest(f, a: float):
    return f.rest(a)


def translate(f, beta):
    return f.translate(beta)


def fn_product(f: TorusFn, g: TorusFn) -> TorusFn:
    return apply_pointwise(np.multiply, [f, g], f.bandwidth + g.bandwidth)


def mat_product(A: MatFn, B: MatFn) -> MatFn:
    return apply_pointwise(
        lambda a, b: np.einsum("ijm,jkm->ikm", a, b),
        [A, B],
        A.bandwidth + B.bandwidth,
        kind=MatFn,
        sl2=A.sl2 and B.sl2,
    )


def mat_products(*mats: MatFn) -> MatFn:
    """Product of several matrix functions in one pointwise pass."""

    def f(*grids):
        out = grids[0]
        for g in grids[1:]:
            out = np.einsum("ijm,jkm->ikm", out, g)
        return out

    return apply_pointwise(f, list(mats), sum(m.bandwidth for m in mats), kind=MatFn, sl2=all(m.sl2 for m in mats))


def mat_scalar(f: TorusFn, A: MatFn) -> MatFn:
    return apply_pointwise(lambda s, a: s * a, [f, A], f.bandwidth + A.bandwidth, kind=MatFn)


def mat_inverse(A: MatFn, det_floor: float = 1e-8) -> MatFn:
    """Inverse by adjugate; for SL(2)-flagged input the determinant is taken as 1."""
    if A.sl2:
        return apply_pointwise(_adjugate, [A], A.bandwidth, kind=MatFn, sl2=True)
    M = A.default_grid()
    s = A.samples(M)
    d = s[0, 0] * s[1, 1] - s[0, 1] * s[1, 0]
    if np.min(np.abs(d)) < det_floor:
        raise SingularMatrix(f"min |det| = {np.min(np.abs(d)):.3e} below {det_floor:g}")

    def inv(a):
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        if np.min(np.abs(det)) < det_floor:
            raise SingularMatrix(f"min |det| = {np.min(np.abs(det)):.3e} below {det_floor:g}")
        return _adjugate(a) / det

    return apply_pointwise(inv, [A], 2 * A.bandwidth, kind=MatFn)


def _adjugate(a):
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])


def mat_translate(A: MatFn, beta) -> MatFn:
    return A.translate(beta)


def rotation_mat(phi: TorusFn, degree: int = 0) -> MatFn:
    """x -> R_{phi(x) + degree*x}, with R_t = [[cos 2 pi t, -sin 2 pi t], [sin 2 pi t, cos 2 pi t]]."""
    # only phi mod 1 matters; reduce the mean first so huge means keep full precision
    c = phi.coeffs.copy()
    c[0] = math.fmod(c[0].real, 1.0)
    red = TorusFn(c)
    if red.bandwidth == 0 and degree == 0:
        t = TWO_PI * c[0].real
        return MatFn.constant([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]], sl2=True)

    def f(p, x):
        ang = TWO_PI * (p + degree * x)
        cs, sn = np.cos(ang), np.sin(ang)
        return np.array([[cs, -sn], [sn, cs]])

    # a tighter tail keeps det R = 1 to ~1e-14 pointwise off the fitting grid
    with numerics(tail_tol=min(get_numerics().tail_tol, 1e-15)):
        return apply_pointwise(f, [red, _GRID], 2 * red.bandwidth + abs(degree), kind=MatFn, sl2=True)


# ---------------------------------------------------------------------------
# Birkhoff sums


def birkhoff_sum(f: TorusFn, alpha, n: int, mod_one: bool = False) -> TorusFn:
    """S_n f(x) = sum_{h<n} f(x + h alpha), computed mode by mode.

    With ``mod_one`` the mean n*c_0 is reduced mod 1 exactly (for angle
    functions, where only the value mod 1 is meaningful).
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    N = f.bandwidth
    t1 = centered_phases(alpha, N)
    tn = centered_phases(_as_shift(alpha) * n, N)
    s1 = np.sin(np.pi * t1)
    sn = np.sin(np.pi * tn)
    ratio = np.empty(N + 1, dtype=complex)
    zero = s1 == 0.0
    ratio[zero] = n
    nz = ~zero
    ratio[nz] = sn[nz] / s1[nz] * np.exp(1j * np.pi * (tn[nz] - t1[nz]))
    small = np.abs(2.0 * s1[1:]) < get_numerics().small_divisor
    if np.any(small & (np.abs(f.coeffs[1:]) > 0)):
        warnings.warn(
            f"small divisor |e^(2 pi i l alpha) - 1| < {get_numerics().small_divisor:g} in band",
            SmallDivisorWarning,
            stacklevel=2,
        )
    c = f.coeffs * ratio
    c0 = f.coeffs[0].real
    if mod_one:
        m = (Fraction(c0) * n) % 1
        c[0] = float(m)
    else:
        c[0] = n * c0
    return TorusFn(c)


def birkhoff_sum_direct(f: TorusFn, alpha, n: int, x) -> np.ndarray:
    """Reference evaluation by summing n translates (for small n)."""
    x = np.asarray(x, dtype=float)
    a = _as_shift(alpha)
    total = np.zeros_like(x)
    for h in range(int(n)):
        shift = float((a * h) % 1)
        total += f.evaluate((x + shift) % 1.0)
    return total


# ---------------------------------------------------------------------------
# norms


def _sup_abs_coeffs(c: np.ndarray, max_candidates: int = 32) -> tuple[float, float]:
    """Certified-ish (lower, upper) bounds for sup |g| of a real trig polynomial."""
    N = c.shape[-1] - 1
    if N == 0 or not np.any(c[1:]):
        v = abs(float(c[0].real))
        return v, v
    M = _pow2_at_least(8 * (N + 1))
    g = _to_grid(c, M)
    a = np.abs(g)
    gm = float(a.max())
    if gm == 0.0:
        return 0.0, 0.0
    # between grid points |g| can exceed the grid max by at most (pi N / M)^2 / 2 relative
    kappa = 0.5 * (np.pi * N / M) ** 2
    upper = gm / (1.0 - kappa)
    cand = np.nonzero((a >= gm * (1.0 - kappa)) & (a >= np.roll(a, 1)) & (a >= np.roll(a, -1)))[0]
    if cand.size > max_candidates:
        cand = cand[np.argsort(a[cand])[-max_candidates:]]
    x = cand / M
    l = np.arange(1, N + 1)
    w = TWO_PI * l
    cl = c[1:]
    for _ in range(30):
        E = np.exp(1j * np.outer(x, w))
        d1 = 2.0 * np.real(E @ (1j * w * cl))
        d2 = 2.0 * np.real(E @ (-(w**2) * cl))
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d2 != 0.0, -d1 / d2, 0.0)
        step = np.clip(step, -1.0 / M, 1.0 / M)
        x = x + step
        if np.max(np.abs(step)) < 1e-15:
            break
    E = np.exp(1j * np.outer(x, w))
    vals = np.abs(c[0].real + 2.0 * np.real(E @ cl))
    lower = max(gm, float(vals.max()))
    return lower, max(upper, lower)


def sup_bounds(f) -> tuple[float, float]:
    """(lower, upper) bounds on sup |f| (Frobenius pointwise for MatFn)."""
    if isinstance(f, MatFn):
        sq = apply_pointwise(lambda a: np.sum(a * a, axis=(0, 1)), [f], 2 * f.bandwidth)
        lo, hi = _sup_abs_coeffs(sq.coeffs)
        return math.sqrt(lo), math.sqrt(hi)
    return _sup_abs_coeffs(f.coeffs)


def sup_norm(f) -> float:
    return sup_bounds(f)[0]


def cr_norm_bounds(f, k: int) -> tuple[float, float]:
    if k < 0:
        raise ValueError("k must be >= 0")
    lo = hi = 0.0
    for h in range(k + 1):
        a, b = sup_bounds(f.derivative(h))
        lo += a
        hi += b
    return lo, hi


def cr_norm(f, k: int) -> float:
    """||f||_k = sum_{h<=k} sup |D^h f| (lower bound from refined maxima)."""
    return cr_norm_bounds(f, k)[0]


@dataclass(frozen=True)
class NormLedger:
    label: str
    values: dict

    @classmethod
    def of(cls, f, orders=(0, 1), label: str = "") -> "NormLedger":
        sups = {}
        total = 0.0
        vals = {}
        for h in range(max(orders) + 1):
            sups[h] = sup_norm(f.derivative(h))
            total += sups[h]
            if h in orders:
                vals[h] = total
        return cls(label, vals)


def interpolation_ratio(f: TorusFn, a: int, b: int, c: int) -> float:
    """|D^b f|_0 / (||f||_a^(1-lam) ||f||_c^lam) with lam = (b-a)/(c-a)."""
    if not a < b < c:
        raise ValueError("need a < b < c")
    if f.bandwidth == 0 or not np.any(f.coeffs[1:]):
        raise DegenerateNorm("constant function: derivative norms vanish")
    lam = (b - a) / (c - a)
    na, nc = cr_norm(f, a), cr_norm(f, c)
    denom = na ** (1.0 - lam) * nc**lam
    if denom < 1e-300:
        raise DegenerateNorm(f"denominator {denom:.3e} too small")
    return sup_norm(f.derivative(b)) / denom


def random_trig_poly(rng: np.random.Generator, N: int, decay: float = 0.0, scale: float = 1.0) -> TorusFn:
    """Random real trig polynomial with coefficients ~ scale * (1+l)^-decay."""
    l = np.arange(N + 1)
    c = (rng.standard_normal(N + 1) + 1j * rng.standard_normal(N + 1)) * (1.0 + l) ** (-decay)
    c[0] = c[0].real
    return TorusFn(scale * c)

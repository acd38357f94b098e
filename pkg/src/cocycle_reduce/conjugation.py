"""Conjugation of a near-rotation cocycle over a small shift.

``elliptic_reduce`` finds B with B(x) Abar(x) B(x)^-1 = R_{phi1(x)} pointwise
for Abar = R_phibar + Fbar with phibar elliptic (R_{2 phibar} away from Id).
``cheap_trick`` repeats this over the shift beta = q*alpha mod 1: each pass
leaves the defect (B(x+beta) - B(x)) Abar(x) B(x)^-1, which is small because
beta is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import LogDiverges, NoContraction, PreconditionFailed, ResonantAngle
from .torusfun import (
    TWO_PI,
    MatFn,
    NormLedger,
    TorusFn,
    _from_grid,
    apply_pointwise,
    mat_inverse,
    mat_products,
    rotation_mat,
    sup_norm,
)


@dataclass(frozen=True)
class EllipticOptions:
    inner_tol: float = 1e-14
    max_inner: int = 40
    ellipticity_floor: float = 1e-6
    epsilon: float = 0.05  # smallness: |Fbar|_0 < epsilon * min(1, min_x |R_{2 phibar} - Id|)
    check_smallness: bool = True
    stall_ratio: float = 0.9
    stall_count: int = 3


# ---------------------------------------------------------------------------
# pointwise 2x2 helpers on arrays of shape (2, 2, M)


def _mm(a, b):
    return np.einsum("ijm,jkm->ikm", a, b)


def _eye(M):
    out = np.zeros((2, 2, M))
    out[0, 0] = out[1, 1] = 1.0
    return out


def _compose_small(*factors):
    """(I + f1)(I + f2)... - I without forming the identity."""
    acc = factors[0]
    for f in factors[1:]:
        acc = acc + f + _mm(acc, f)
    return acc


def _rot(t):
    c, s = np.cos(TWO_PI * t), np.sin(TWO_PI * t)
    return np.array([[c, -s], [s, c]])


def _rot_minus_id(t):
    s = np.sin(TWO_PI * t)
    cm1 = -2.0 * np.sin(np.pi * t) ** 2
    return np.array([[cm1, -s], [s, cm1]])


def _frob(a):
    return np.sqrt(np.sum(a * a, axis=(0, 1)))


def _log_series(Y):
    """log(I + Y) by its power series; the caller guarantees |Y| < 1/2."""
    out = Y.copy()
    term = Y.copy()
    ref = max(float(_frob(Y).max()), 1e-300)
    for h in range(2, 200):
        term = _mm(term, Y)
        add = ((-1) ** (h + 1) / h) * term
        out += add
        if float(_frob(add).max()) <= 1e-17 * ref:
            break
    return out


def _sym(w):
    return np.array([[w.real, w.imag], [w.imag, -w.real]])


def _expm1_sym(w, sign=1.0):
    """e^{sign*v} - I for v = [[Re w, Im w], [Im w, -Re w]] (v^2 = |w|^2 I)."""
    s = np.abs(w)
    ch = 2.0 * np.sinh(0.5 * s) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        shc = np.where(s > 0, np.sinh(s) / np.where(s > 0, s, 1.0), 1.0)
    v = _sym(w)
    out = sign * shc * v
    out[0, 0] += ch
    out[1, 1] += ch
    return out


def ellipticity(theta_samples) -> np.ndarray:
    """|R_{2 theta} - Id| = |e^{4 pi i theta} - 1| pointwise."""
    return 2.0 * np.abs(np.sin(TWO_PI * theta_samples))


@dataclass
class InnerStats:
    iterations: int = 0
    g_norms: list = field(default_factory=list)
    y_norm: float = 0.0
    identity_residual: float = 0.0
    ellipticity_min: float = math.inf
    grid: int = 0


def _elliptic_core(phi, F, opts: EllipticOptions, stats: InnerStats, keep=None):
    """Inner iteration on grid samples; returns stacked [W (4 rows), theta]."""
    M = phi.shape[-1]
    theta = phi.copy()
    W = np.zeros((2, 2, M))
    Y = _mm(F, _rot(-theta))
    stats.y_norm = float(_frob(Y).max())
    if stats.y_norm >= 0.5:
        raise LogDiverges(f"|Y|_0 = {stats.y_norm:.3e} >= 1/2", y_norm=stats.y_norm)
    G = _log_series(Y)
    gn = float(_frob(G).max())
    stats.g_norms = [gn]
    stats.iterations = 0
    stats.identity_residual = 0.0
    stats.ellipticity_min = float(ellipticity(theta).min())
    stall = 0
    while gn > 0.0 and (gn >= opts.inner_tol or stats.iterations == 0):
        if stats.iterations >= opts.max_inner:
            break
        ell = ellipticity(theta)
        stats.ellipticity_min = min(stats.ellipticity_min, float(ell.min()))
        if ell.min() < opts.ellipticity_floor:
            raise ResonantAngle(
                f"min |R_2theta - Id| = {ell.min():.3e} below floor {opts.ellipticity_floor:g}",
                ellipticity_min=float(ell.min()),
            )
        x = G[0, 0]
        y = 0.5 * (G[0, 1] + G[1, 0])
        z = (G[1, 0] - G[0, 1]) / (2.0 * TWO_PI)
        e4 = np.exp(2j * TWO_PI * theta)
        w = (x + 1j * y) / (e4 - 1.0)
        if stats.iterations == 0 and keep is not None:
            keep.update(Y=Y.copy(), G=G.copy(), x=x.copy(), y=y.copy(), z=z.copy(), v=_sym(w), theta=theta.copy())
        if stats.iterations == 0:
            v = _sym(w)
            Rt = _rot(theta)
            Gs = np.array([[x, y], [y, -x]])
            resid = _mm(v, Rt) - _mm(Rt, v) + _mm(Gs, Rt)
            stats.identity_residual = float(_frob(resid).max())
        E = _expm1_sym(w, 1.0)
        Ei = _expm1_sym(w * e4, -1.0)  # R_theta (e^{-v} - I) R_{-theta}
        Z = _rot_minus_id(-z)
        Y = _compose_small(E, Y, Ei, Z)
        W = _compose_small(E, W)
        theta = theta + z
        y_norm = float(_frob(Y).max())
        if y_norm >= 0.5:
            raise LogDiverges(f"|Y|_0 = {y_norm:.3e} >= 1/2 at inner step {stats.iterations + 1}")
        G = _log_series(Y)
        new = float(_frob(G).max())
        stats.iterations += 1
        stats.g_norms.append(new)
        stall = stall + 1 if new > opts.stall_ratio * gn else 0
        if stall >= opts.stall_count:
            raise NoContraction(f"inner iteration stalled at |G| = {new:.3e}")
        gn = new
    stats.grid = M
    return np.concatenate([W.reshape(4, M), theta[None, :]])


@dataclass(frozen=True)
class EllipticResult:
    W: MatFn  # B1 - Id
    phi1: TorusFn
    iterations: int
    g_norms: tuple
    ellipticity_min: float
    identity_residual: float
    defect: float
    internals: dict | None = None

    @property
    def B(self) -> MatFn:
        return (MatFn.identity() + self.W).with_sl2(True)


def _check_smallness(phi_bar: TorusFn, F_bar: MatFn, opts: EllipticOptions):
    M = max(phi_bar.default_grid(), F_bar.default_grid())
    ell_min = float(ellipticity(phi_bar.samples(M)).min())
    f0 = sup_norm(F_bar)
    bound = opts.epsilon * min(1.0, ell_min)
    if f0 >= bound:
        raise PreconditionFailed(
            f"|Fbar|_0 = {f0:.3e} not below eps*min(1, min|R_2phi - Id|) = {bound:.3e}",
            f_norm=f0,
            ellipticity_min=ell_min,
            epsilon=opts.epsilon,
        )
    return f0, ell_min


def elliptic_reduce(
    phi_bar: TorusFn, F_bar: MatFn, n_label: int = 0, opts: EllipticOptions | None = None, internals: bool = False
) -> EllipticResult:
    """B1 and phi1 with B1 (R_phibar + Fbar) B1^-1 = R_phi1 pointwise.

    Each inner step writes G = log(Abar R_{-theta}) as [[x, y - 2 pi z], [y + 2 pi z, -x]],
    conjugates by e^v with v the symmetric matrix of (x + i y)/(e^{4 pi i theta} - 1)
    and moves theta by z; G contracts quadratically.
    """
    opts = opts or EllipticOptions()
    if opts.check_smallness:
        _check_smallness(phi_bar, F_bar, opts)
    if not np.any(F_bar.coeffs):
        zero = MatFn(np.zeros((2, 2, 1)))
        return EllipticResult(zero, phi_bar, 0, (0.0,), float("nan"), 0.0, 0.0, {} if internals else None)
    stats = InnerStats()
    keep: dict | None = {} if internals else None

    def core(phi, F):
        return _elliptic_core(phi, F, opts, stats, keep)

    c = apply_pointwise(
        core,
        [phi_bar, F_bar],
        2 * (phi_bar.bandwidth + F_bar.bandwidth),
        kind=None,
        groups=[[0, 1, 2, 3], [4]],
    )
    W = MatFn(c[:4].reshape(2, 2, -1)).chopped()
    phi1 = TorusFn(c[4]).chopped()
    defect = _conjugation_defect(W, phi_bar, F_bar, phi1)
    extra = None
    if internals:
        extra = {k: (TorusFn(_fit(v)) if v.ndim == 1 else MatFn(_fit(v))) for k, v in keep.items()}
    return EllipticResult(
        W, phi1, stats.iterations, tuple(stats.g_norms), stats.ellipticity_min, stats.identity_residual, defect, extra
    )


def _fit(samples):
    return _from_grid(samples)[..., : samples.shape[-1] // 4 + 1]


def _conjugation_defect(W: MatFn, phi: TorusFn, F: MatFn, phi1: TorusFn) -> float:
    """max_x |B1 Abar B1^-1 - R_phi1| (Frobenius) on an oversampled grid."""
    M = 2 * max(W.default_grid(), phi.default_grid(), F.default_grid(), phi1.default_grid())
    B = _eye(M) + W.samples(M)
    Binv = np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]])
    A = _rot(phi.samples(M)) + F.samples(M)
    D = _mm(_mm(B, A), Binv) - _rot(phi1.samples(M))
    return float(_frob(D).max())


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheapTrickOptions:
    C: float = 10.0  # |(R_{2 phibar} - Id)^-1|_0 <= C max(n, 1)^2
    floor_tol: float = 1e-15
    check_preconditions: bool = True
    elliptic: EllipticOptions = field(default_factory=EllipticOptions)
    norm_orders: tuple = (0, 1)


@dataclass(frozen=True)
class PassRecord:
    index: int
    norm0: float
    norm1: float
    inner_iters: int
    ellipticity_min: float

    def to_json(self) -> dict:
        return {
            "pass": self.index,
            "norm0": self.norm0,
            "norm1": self.norm1,
            "inner_iters": self.inner_iters,
            "ellipticity_min": self.ellipticity_min,
        }


@dataclass(frozen=True)
class CheapTrickResult:
    B: MatFn
    W: MatFn  # B - Id
    phi: TorusFn
    F: MatFn
    passes: int
    per_pass_norms: tuple
    records: tuple
    early_exit: bool = False
    shift: Fraction = Fraction(0)
    B_last: MatFn | None = None  # conjugacy of the final pass alone
    B_prior: MatFn | None = None  # product of all earlier passes


def centered_shift(alpha, q: int) -> Fraction:
    """q*alpha reduced to [-1/2, 1/2), exactly."""
    t = Fraction(alpha) * int(q)
    t -= math.floor(t)
    return t - 1 if t >= Fraction(1, 2) else t


def cheap_trick(
    alpha,
    q_n: int,
    phi_bar: TorusFn,
    F_bar: MatFn,
    r0: int = 3,
    opts: CheapTrickOptions | None = None,
    n_label: int = 0,
) -> CheapTrickResult:
    """r0 + 1 elliptic passes over the shift q_n alpha.

    Pass k conjugates R_phi_k + F_k to R_phi_{k+1} pointwise by B_k and leaves
    F_{k+1}(x) = (B_k(x + q_n alpha) - B_k(x)) (R_phi_k + F_k)(x) B_k(x)^-1.
    """
    opts = opts or CheapTrickOptions()
    if r0 < 0:
        raise ValueError("r0 must be >= 0")
    beta = centered_shift(alpha, q_n)
    if opts.check_preconditions:
        M = max(phi_bar.default_grid(), 64)
        ell_min = float(ellipticity(phi_bar.samples(M)).min())
        inv_norm = math.inf if ell_min == 0 else 1.0 / ell_min
        bound = opts.C * max(n_label, 1) ** 2
        if inv_norm > bound:
            raise ResonantAngle(
                f"|(R_2phi - Id)^-1|_0 = {inv_norm:.3e} exceeds C n^2 = {bound:.3e}",
                inverse_norm=inv_norm,
                bound=bound,
            )
        f0 = sup_norm(F_bar)
        if f0 >= 1.0 / int(q_n):
            raise PreconditionFailed(f"|Fbar|_0 = {f0:.3e} not below 1/q_n = {1.0 / int(q_n):.3e}", f_norm=f0)

    phi_k, F_k = phi_bar, F_bar
    Wbar = MatFn(np.zeros((2, 2, 1)))
    W_prior = Wbar
    W_last = Wbar
    ledgers = [NormLedger.of(F_k, opts.norm_orders, label="pass 0")]
    records = []
    early = False
    done = 0
    for k in range(r0 + 1):
        if k > 0 and ledgers[-1].values[0] < opts.floor_tol:
            early = True
            break
        try:
            res = elliptic_reduce(phi_k, F_k, n_label, opts.elliptic)
        except PreconditionFailed as exc:
            exc.details["pass"] = k
            raise
        except Exception as exc:  # tag with the pass index and re-raise
            exc.args = (f"pass {k}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
            raise
        A_k = (rotation_mat(phi_k) + F_k).with_sl2(True)
        Binv = mat_inverse(res.B)
        F_next = mat_products(res.W.translate_diff(beta), A_k, Binv)
        W_prior = Wbar
        W_last = res.W
        Wbar = res.W + Wbar + mat_products(res.W, Wbar)
        phi_k, F_k = res.phi1, F_next
        done += 1
        ledger = NormLedger.of(F_k, opts.norm_orders, label=f"pass {k + 1}")
        ledgers.append(ledger)
        records.append(
            PassRecord(k + 1, ledger.values[0], ledger.values.get(1, float("nan")), res.iterations, res.ellipticity_min)
        )
    eye = MatFn.identity()
    return CheapTrickResult(
        B=(eye + Wbar).with_sl2(True),
        W=Wbar,
        phi=phi_k,
        F=F_k,
        passes=done,
        per_pass_norms=tuple(ledgers),
        records=tuple(records),
        early_exit=early,
        shift=beta,
        B_last=(eye + W_last).with_sl2(True),
        B_prior=(eye + W_prior).with_sl2(True),
    )


def direct_defect(B: MatFn, phi_bar: TorusFn, F_bar: MatFn, phi: TorusFn, shift) -> MatFn:
    """B(x + shift) Abar(x) B(x)^-1 - R_phi(x), formed without the per-pass bookkeeping."""
    A = (rotation_mat(phi_bar) + F_bar).with_sl2(True)
    return mat_products(B.translate(shift), A, mat_inverse(B)) - rotation_mat(phi)

"""Reduction of a near-constant cocycle to a rotation-valued one.

Step h takes the state R_{phi_h} + F_h (over alpha), iterates it q = q_{n_h}
times, runs the cheap trick on the iterate over the shift q*alpha, and brings
the resulting conjugacy B_h back to frequency alpha:

    Atil = B_h(. + alpha) (R_{phi_h} + F_h) B_h^-1,   R_{phi_{h+1}} + F_{h+1} = split of Atil.

The loop runs along the convergent subsequence until |F_h|_1 drops below the
target. Mathematical obstructions (resonances, failed smallness) end the run as
report outcomes, not exceptions.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from scipy.linalg import sqrtm

from .arithmetic import (
    ConvergentTable,
    ResonanceReport,
    Subsequence,
    check_resonances,
    expand,
    select_subsequence,
)
from .cocycle import (
    Cocycle,
    DecomposedCocycle,
    decompose,
    iterated_defect,
    q_project,
    rotation_number,
)
from .conjugation import CheapTrickOptions, CheapTrickResult, EllipticOptions, cheap_trick
from .errors import (
    CocycleError,
    NonConvergent,
    NotNearRotation,
    NumericalFailure,
    PreconditionFailed,
    ResonanceBlocked,
)
from .torusfun import (
    TWO_PI,
    MatFn,
    TorusFn,
    birkhoff_sum,
    mat_inverse,
    mat_products,
    numerics,
    rotation_mat,
    sup_norm,
)


class Outcome(str, enum.Enum):
    CONVERGED = "Converged"
    RESONANCE_BLOCKED = "ResonanceBlocked"
    PRECONDITION_FAILED = "PreconditionFailed"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class SchemeConfig:
    epsilon: float = 0.1  # resonance threshold: |2 q_{n_h} rho| >= epsilon / n_h^2
    r0: int = 3
    max_steps: int = 12
    target_norm: float = 1e-10
    C: float = 10.0  # |(R_{2 phibar} - Id)^-1|_0 <= C n^2
    smallness: float = 0.05
    det_tol: float = 1e-10
    inner_tol: float = 1e-14
    reconstruction_tol: float = 1e-10
    verify_tol: float = 1e-8
    max_modes: int = 2**14
    norm_orders: tuple = (0, 1, 5)
    max_terms: int = 60
    precondition: bool = True
    diagnostics: bool = False
    check_rho: bool = True
    rho_consistency_floor: float = 1e-9

    def __post_init__(self):
        for name in ("epsilon", "target_norm", "C", "smallness", "det_tol", "inner_tol", "reconstruction_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.r0 < 0 or self.max_steps < 0:
            raise ValueError("r0 and max_steps must be >= 0")

    def cheap_trick_options(self) -> CheapTrickOptions:
        return CheapTrickOptions(
            C=self.C,
            elliptic=EllipticOptions(inner_tol=self.inner_tol, epsilon=self.smallness),
        )


@dataclass(frozen=True)
class SchemeState:
    h: int
    alpha: Fraction
    phi: TorusFn
    F: MatFn
    W_cum: MatFn  # B_cumulative - Id
    norms: dict
    A0: MatFn  # the cocycle being reduced, untouched
    rho: float

    @property
    def B_cumulative(self) -> MatFn:
        return (MatFn.identity() + self.W_cum).with_sl2(True)

    def decomposed(self) -> DecomposedCocycle:
        return DecomposedCocycle(self.alpha, self.phi, self.F)


@dataclass(frozen=True)
class GoBackDiagnostics:
    L: MatFn
    L1: MatFn
    J1: MatFn | None = None
    J2: MatFn | None = None
    J3: MatFn | None = None
    j_residual: float | None = None  # |J1 + J2 + J3 - (R_{phi~(.+alpha)} Atil - Atil R_phi~)|_0


@dataclass(frozen=True)
class StepInfo:
    n: int
    q: int
    resonance: ResonanceReport
    cheap_trick: CheapTrickResult
    min_det: float
    invariant_error: float
    diagnostics: GoBackDiagnostics | None = None


@dataclass
class SchemeReport:
    outcome: Outcome
    final_defect: float
    steps: int
    trace: list = field(default_factory=list)
    B: MatFn | None = None
    phi: TorusFn | None = None
    message: str = ""
    rho: float = float("nan")
    rho_err: float = float("nan")
    pass_records: list = field(default_factory=list)
    preconditioner: list | None = None
    B_distance: float = float("nan")  # |B - Id|_0
    elapsed: float = 0.0

    def to_json(self) -> dict:
        out = {
            "outcome": self.outcome.value,
            "final_defect": self.final_defect,
            "steps": self.steps,
            "message": self.message,
            "rho": self.rho,
            "rho_err": self.rho_err,
            "B_distance": self.B_distance,
            "trace": self.trace,
            "passes": self.pass_records,
        }
        if self.preconditioner is not None:
            out["preconditioner"] = self.preconditioner
        return out


# ---------------------------------------------------------------------------


def _norms(F: MatFn, orders) -> dict:
    out = {}
    total = 0.0
    for k in range(max(orders) + 1):
        total += sup_norm(F.derivative(k))
        if k in orders:
            out[k] = total
    return out


def _compose_w(W1: MatFn, W0: MatFn) -> MatFn:
    """(Id + W1)(Id + W0) - Id."""
    return (W1 + W0 + mat_products(W1, W0)).chopped()


def conjugate(B: MatFn, A: MatFn, alpha) -> MatFn:
    """B(x + alpha) A(x) B(x)^-1."""
    return mat_products(B.translate(alpha), A, mat_inverse(B.with_sl2(True))).with_sl2(True)


def state_invariant_error(state: SchemeState) -> float:
    lhs = rotation_mat(state.phi) + state.F
    rhs = conjugate(state.B_cumulative, state.A0, state.alpha)
    return sup_norm(lhs - rhs)


def go_back_diagnostics(
    state: SchemeState, q: int, ct: CheapTrickResult, Atil: MatFn, Abar: MatFn, B_h: MatFn
) -> GoBackDiagnostics:
    a = state.alpha
    qa = a * q
    L = q_project(Atil)
    L1 = q_project(Atil.translate(qa) - Atil)
    A_h = (rotation_mat(state.phi) + state.F).with_sl2(True)
    Bbar, Btil = ct.B_last, ct.B_prior
    B_inv = mat_inverse(B_h)
    RF = (rotation_mat(ct.phi) + ct.F).with_sl2(True)
    J1 = mat_products(
        Bbar.translate(a) - Bbar.translate(a + qa),
        Btil.translate(qa + a),
        A_h.translate(qa),
        B_inv.translate(qa),
        RF,
    )
    J2 = mat_products(Atil.translate(qa) - Atil, RF)
    # (Bbar(x + q alpha) - Bbar(x)): the sign that makes the three terms add up
    J3 = mat_products(Atil, Bbar.translate(qa) - Bbar, Btil.translate(qa), Abar, B_inv)
    lhs = mat_products(rotation_mat(ct.phi.translate(a)), Atil) - mat_products(Atil, rotation_mat(ct.phi))
    resid = sup_norm(J1 + J2 + J3 - lhs)
    return GoBackDiagnostics(L, L1, J1, J2, J3, resid)


def reduce_step(
    state: SchemeState,
    table: ConvergentTable,
    sub: Subsequence,
    cfg: SchemeConfig,
    rho_exact: Fraction | None = None,
) -> tuple[SchemeState, StepInfo]:
    """One inductive step at q = q_{n_h}: iterate, cheap trick, go back to alpha."""
    h = state.h
    if h >= len(sub):
        raise IndexError("subsequence exhausted")
    n, q = sub.indices[h], sub.q_values[h]
    rho = rho_exact if rho_exact is not None else Fraction(state.rho)
    rep = check_resonances(rho, Subsequence((n,), (q,), (q,)), cfg.epsilon)[0]
    rep = replace(rep, h=h)
    if not rep.passed:
        raise ResonanceBlocked(f"|2 q rho| = {rep.value:.3e} below {rep.threshold:.3e} at h={h} (q={q})", report=rep)
    d = state.decomposed()
    if q == 1:
        phibar, xi = state.phi, state.F
    else:
        it = iterated_defect(d, q)
        phibar, xi = it.phi_sum, it.xi
    ct = cheap_trick(state.alpha, q, phibar, xi, cfg.r0, cfg.cheap_trick_options(), n_label=n)
    B_h = ct.B
    A_h = (rotation_mat(state.phi) + state.F).with_sl2(True)
    Atil = conjugate(B_h, A_h, state.alpha)
    s = Atil.samples(Atil.default_grid())
    P = 0.5 * (s[0, 0] + s[1, 1])
    R = 0.5 * (s[1, 0] - s[0, 1])
    min_det = float(np.min(P * P + R * R))  # det(Atil - Q(Atil))
    dec = decompose(Atil, det_floor=cfg.det_tol)
    if dec.degree != 0:
        raise NotNearRotation(f"conjugated cocycle has degree {dec.degree}")
    W_cum = _compose_w(ct.W, state.W_cum)
    new = SchemeState(
        h + 1,
        state.alpha,
        dec.phi.chopped(),
        dec.F.chopped(),
        W_cum,
        _norms(dec.F, cfg.norm_orders),
        state.A0,
        state.rho,
    )
    inv = state_invariant_error(new)
    if inv > cfg.reconstruction_tol:
        raise NumericalFailure(f"state invariant drifted to {inv:.3e} after step {h}")
    diag = None
    if cfg.diagnostics:
        Abar = (rotation_mat(phibar) + xi).with_sl2(True)
        diag = go_back_diagnostics(state, q, ct, Atil, Abar, B_h)
    return new, StepInfo(n, q, rep, ct, min_det, inv, diag)


# ---------------------------------------------------------------------------


def elliptic_normalizer(M: np.ndarray) -> np.ndarray | None:
    """Symmetric positive P with P M P^-1 a rotation, for elliptic M (det normalised to 1)."""
    M = np.asarray(M, dtype=float)
    det = np.linalg.det(M)
    if det <= 0:
        return None
    M = M / math.sqrt(det)
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    if abs(a + d) >= 2.0:
        return None
    S = np.array([[c, 0.5 * (d - a)], [0.5 * (d - a), -b]])
    dS = np.linalg.det(S)
    if dS <= 0:
        return None
    S = S / math.sqrt(dS)
    if S[0, 0] < 0:
        S = -S
    P = np.real(sqrtm(S))
    return 0.5 * (P + P.T)


def verify_conjugacy(B: MatFn, c: Cocycle, phi: TorusFn, oversample: int = 4) -> float:
    """sup_x |B(x + alpha) A(x) B(x)^-1 - R_phi(x)| (Frobenius) by direct evaluation.

    Uses plain trigonometric sums at the shifted points and numpy 2x2
    inverses; nothing from the reduction loop is reused.
    """
    N = max(B.bandwidth, c.A.bandwidth, phi.bandwidth)
    M = oversample * 1 << max(3, int(2 * N + 2 - 1).bit_length())
    x = np.arange(M) / M
    a = float(c.alpha % 1)
    Bs = np.moveaxis(B.evaluate((x + a) % 1.0), -1, 0)
    B0 = np.moveaxis(B.evaluate(x), -1, 0)
    As = np.moveaxis(c.A.evaluate(x), -1, 0)
    p = phi.evaluate(x)
    cs, sn = np.cos(TWO_PI * p), np.sin(TWO_PI * p)
    R = np.stack([np.stack([cs, -sn], -1), np.stack([sn, cs], -1)], -2)
    D = Bs @ As @ np.linalg.inv(B0) - R
    return float(np.sqrt((D**2).sum(axis=(1, 2))).max())


def birkhoff_closeness(phi: TorusFn, alpha, table: ConvergentTable, n: int) -> tuple[float, tuple[str, ...]]:
    """|S_{q_n} phi - q_n phihat(0)|_0 and which growth hypothesis q_n satisfies.

    "window": some earlier q_k has q_k^2 < q_n < q_k^4. "jump": q_{n+1} > q_n^2.
    """
    q = table.denominators
    qn = q[n]
    centred = phi.shift_mean(-phi.mean)
    value = sup_norm(birkhoff_sum(centred, alpha, qn))
    tags = []
    if any(q[k] ** 2 < qn < q[k] ** 4 for k in range(n)):
        tags.append("window")
    if n + 1 < len(q) and q[n + 1] > qn**2:
        tags.append("jump")
    return value, tuple(tags)


def _trace_record(state: SchemeState, sub: Subsequence, reports, outcome: str) -> dict:
    h = state.h
    n = sub.indices[h] if h < len(sub) else None
    qv = sub.q_values[h] if h < len(sub) else None
    res = reports[h].value if h < len(reports) else None
    high = max(state.norms) if state.norms else 0
    return {
        "h": h,
        "n_h": n,
        "q_nh": str(qv) if qv is not None else None,
        "resonance_value": res,
        "norm0": state.norms.get(0),
        "norm1": state.norms.get(1),
        "norm_high": state.norms.get(high),
        "bandwidth": max(state.F.bandwidth, state.phi.bandwidth),
        "outcome_so_far": outcome,
    }


def _outcome_for(exc: Exception) -> Outcome:
    if isinstance(exc, ResonanceBlocked):
        return Outcome.RESONANCE_BLOCKED
    if isinstance(exc, (PreconditionFailed, NotNearRotation)):
        return Outcome.PRECONDITION_FAILED
    return Outcome.NUMERICAL_FAILURE


def rotations_reduce(c: Cocycle, cfg: SchemeConfig | None = None, rho_estimate=None, on_record=None) -> SchemeReport:
    """Run the reduction loop on (alpha, A) and verify the result independently.

    ``on_record`` is called with each NDJSON trace record as it is produced.
    """
    cfg = cfg or SchemeConfig()
    t0 = time.perf_counter()
    with numerics(max_modes=cfg.max_modes):
        return _rotations_reduce(c, cfg, rho_estimate, on_record, t0)


def _rotations_reduce(c, cfg, rho_estimate, on_record, t0) -> SchemeReport:
    trace: list = []
    passes: list = []

    def emit(rec):
        trace.append(rec)
        if on_record is not None:
            on_record(rec)

    def finish(outcome, message="", steps=0, **kw):
        return SchemeReport(
            outcome,
            kw.pop("final_defect", float("nan")),
            steps,
            trace,
            message=message,
            pass_records=passes,
            elapsed=time.perf_counter() - t0,
            **kw,
        )

    table = expand((c.alpha, c.alpha_radius), max_terms=cfg.max_terms)
    sub = select_subsequence(table)
    try:
        est = rho_estimate or rotation_number(c)
    except NonConvergent as exc:
        return finish(Outcome.NUMERICAL_FAILURE, str(exc))
    rho, rho_err = est.rho, est.error_bound

    A0 = c.A
    W0 = MatFn(np.zeros((2, 2, 1)))
    P_list = None
    try:
        dec = decompose(A0, det_floor=cfg.det_tol)
    except NotNearRotation as exc:
        return finish(Outcome.PRECONDITION_FAILED, str(exc), rho=rho, rho_err=rho_err)
    if cfg.precondition:
        P = elliptic_normalizer(A0.mean_matrix())
        if P is not None:
            Pm = MatFn.constant(P, sl2=True)
            A1 = mat_products(Pm, A0, MatFn.constant(np.linalg.inv(P), sl2=True)).with_sl2(True)
            dec1 = decompose(A1, det_floor=cfg.det_tol)
            if sup_norm(dec1.F) < sup_norm(dec.F):
                dec = dec1
                W0 = (Pm - MatFn.identity()).chopped()
                P_list = P.tolist()
    if dec.degree != 0:
        return finish(Outcome.PRECONDITION_FAILED, f"cocycle has degree {dec.degree}", rho=rho, rho_err=rho_err)

    reports = check_resonances(Fraction(rho), sub, cfg.epsilon)
    state = SchemeState(0, c.alpha, dec.phi, dec.F, W0, _norms(dec.F, cfg.norm_orders), A0, rho)

    def success(state):
        B = state.B_cumulative.chopped()
        defect = verify_conjugacy(B, c, state.phi)
        bdist = sup_norm(B - MatFn.identity())
        if defect > cfg.verify_tol:
            return finish(
                Outcome.NUMERICAL_FAILURE,
                f"independent check gives defect {defect:.3e} above {cfg.verify_tol:g}",
                state.h,
                final_defect=defect,
                rho=rho,
                rho_err=rho_err,
            )
        return finish(
            Outcome.CONVERGED,
            "",
            state.h,
            final_defect=defect,
            B=B,
            phi=state.phi,
            rho=rho,
            rho_err=rho_err,
            preconditioner=P_list,
            B_distance=bdist,
        )

    while True:
        if state.norms[1] <= cfg.target_norm:
            emit(_trace_record(state, sub, reports, Outcome.CONVERGED.value))
            return success(state)
        if state.h >= cfg.max_steps or state.h >= len(sub):
            why = "max_steps reached" if state.h >= cfg.max_steps else "convergent subsequence exhausted"
            emit(_trace_record(state, sub, reports, Outcome.BUDGET_EXHAUSTED.value))
            return finish(Outcome.BUDGET_EXHAUSTED, why, state.h, final_defect=state.norms[0], rho=rho, rho_err=rho_err)
        # the record of state h goes out once its step has an outcome
        rec = _trace_record(state, sub, reports, "running")
        try:
            new, info = reduce_step(state, table, sub, cfg, Fraction(rho))
        except (CocycleError, FloatingPointError) as exc:
            outcome = _outcome_for(exc)
            rec["outcome_so_far"] = outcome.value
            emit(rec)
            return finish(
                outcome,
                f"step {state.h}: {type(exc).__name__}: {exc}",
                state.h,
                final_defect=state.norms[0],
                rho=rho,
                rho_err=rho_err,
            )
        emit(rec)
        passes.extend({"h": state.h, **r.to_json()} for r in info.cheap_trick.records)
        if state.h == 0 and cfg.check_rho:
            try:
                est1 = rotation_number(new.decomposed().reconstitute())
            except NonConvergent as exc:
                return finish(Outcome.NUMERICAL_FAILURE, str(exc), 1, rho=rho, rho_err=rho_err)
            diff = abs((est1.rho - rho + 0.5) % 1.0 - 0.5)
            allowed = max(10 * max(est1.error_bound, rho_err), cfg.rho_consistency_floor)
            if diff > allowed:
                emit(_trace_record(new, sub, reports, Outcome.NUMERICAL_FAILURE.value))
                return finish(
                    Outcome.NUMERICAL_FAILURE,
                    f"rotation number moved by {diff:.3e} under conjugation (allowed {allowed:.1e})",
                    1,
                    rho=rho,
                    rho_err=rho_err,
                )
        state = new

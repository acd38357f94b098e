"""Command-line driver: cf, rotnum, reduce, sweep, selftest.

Exit codes: 0 success / Converged, 2 input error, 3 ResonanceBlocked,
4 PreconditionFailed, 5 BudgetExhausted, 6 NumericalFailure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .arithmetic import expand, select_subsequence
from .cocycle import Cocycle, rotation_number, schrodinger
from .errors import CocycleError, RationalInput
from .scheme import Outcome, rotations_reduce, verify_conjugacy
from .sweep import RunConfig, parse_alpha, run_sweep
from .torusfun import MatFn, TorusFn, rotation_mat

EXIT_CODES = {
    Outcome.CONVERGED: 0,
    Outcome.RESONANCE_BLOCKED: 3,
    Outcome.PRECONDITION_FAILED: 4,
    Outcome.BUDGET_EXHAUSTED: 5,
    Outcome.NUMERICAL_FAILURE: 6,
}
EXIT_INPUT = 2


class InputError(Exception):
    pass


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _json_default(o):
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(type(o).__name__)


def load_config(args) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}") from None
    for key in ("alpha", "E", "out", "trace", "width"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "lam", None) is not None:
        data["potential"] = [0.0, args.lam]
    if getattr(args, "potential", None) is not None:
        try:
            data["potential"] = json.loads(args.potential)
        except json.JSONDecodeError as exc:
            raise InputError(f"bad --potential: {exc}") from None
    if getattr(args, "E_grid", None) is not None:
        data["E_grid"] = args.E_grid
    try:
        return RunConfig.from_json(data)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None


def _cocycle(args, cfg: RunConfig) -> Cocycle:
    if getattr(args, "cocycle", None):
        with open(args.cocycle) as fh:
            return Cocycle.from_json(json.load(fh))
    try:
        return cfg.cocycle()
    except RationalInput:
        raise
    except ValueError as exc:
        raise InputError(str(exc)) from None


# ---------------------------------------------------------------------------


def cmd_cf(args) -> int:
    try:
        alpha = parse_alpha(args.alpha)
        table = expand(alpha, max_terms=args.n)
    except RationalInput as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except (TypeError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sub = select_subsequence(table)
    lines = [f"{'k':>3} {'a_k':>8} {'q_k':>24} {'p_k':>24}"]
    a = (0,) + tuple(table.partial_quotients)  # a_0 = floor(alpha) = 0
    for k in range(table.count):
        lines.append(f"{k:>3} {a[k]:>8} {table.denominators[k]:>24} {table.numerators[k]:>24}")
    lines.append(f"subsequence n_h: {list(sub.indices)}")
    lines.append(f"stop: {table.stop_reason}")
    print("\n".join(lines))
    if args.out:
        payload = {
            "alpha": args.alpha,
            "partial_quotients": [str(a) for a in table.partial_quotients],
            "q": [str(q) for q in table.denominators],
            "p": [str(p) for p in table.numerators],
            "subsequence": list(sub.indices),
            "stop_reason": table.stop_reason,
        }
        _write(args.out, json.dumps(payload, indent=1) + "\n")
    return 0


def cmd_rotnum(args) -> int:
    cfg = load_config(args)
    c = _cocycle(args, cfg)
    try:
        est = rotation_number(c)
    except CocycleError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CODES[Outcome.NUMERICAL_FAILURE]
    payload = {"rho": est.rho, "err": est.error_bound, "orbit_length": est.orbit_length, "degree": est.degree}
    _write(cfg.out, json.dumps(payload) + "\n")
    return 0


def cmd_reduce(args) -> int:
    cfg = load_config(args)
    c = _cocycle(args, cfg)
    trace_fh = open(cfg.trace, "w") if cfg.trace else sys.stdout

    def on_record(rec):
        trace_fh.write(json.dumps(rec, default=_json_default) + "\n")
        trace_fh.flush()

    try:
        rep = rotations_reduce(c, cfg.scheme_config(), on_record=on_record)
    finally:
        if trace_fh is not sys.stdout:
            trace_fh.close()
    bundle = {
        "B": rep.B.to_json() if rep.B is not None else None,
        "phi": rep.phi.to_json() if rep.phi is not None else None,
        "report": rep.to_json(),
    }
    if cfg.out:
        _write(cfg.out, json.dumps(bundle, default=_json_default) + "\n")
    print(
        f"{rep.outcome.value}: steps={rep.steps} final_defect={rep.final_defect:.3e} {rep.message}".rstrip(),
        file=sys.stderr,
    )
    return EXIT_CODES[rep.outcome]


def cmd_sweep(args) -> int:
    cfg = load_config(args)
    try:
        cfg.energies()
    except ValueError as exc:
        raise InputError(str(exc)) from None
    res = run_sweep(cfg)
    _write(cfg.out, res.csv_text())
    print(f"noise floor {res.noise:.3e}; in-band ac fraction {res.ac_fraction():.3f}", file=sys.stderr)
    return 0


def cmd_selftest(args) -> int:
    checks = []

    def check(name, fn):
        try:
            ok = bool(fn())
        except Exception as exc:  # report, keep going
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        checks.append(ok)
        print(f"{'PASS' if ok else 'FAIL'} {name}")

    def fib():
        q = expand(parse_alpha("golden"), max_terms=12).denominators
        return list(q) == [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144]

    def rho_free():
        est = rotation_number(schrodinger(TorusFn([0.0]), 1.0, parse_alpha("golden")))
        return abs(est.rho - 1 / 6) < 1e-8

    def rotation_input():
        c = Cocycle.make(parse_alpha("golden"), rotation_mat(TorusFn([0.1, 0.01])))
        rep = rotations_reduce(c)
        return rep.outcome == Outcome.CONVERGED and rep.steps == 0 and rep.final_defect <= 1e-13

    def free_defect():
        c = schrodinger(TorusFn([0.0]), 1.0, parse_alpha("golden"))
        return abs(verify_conjugacy(MatFn.identity(), c, TorusFn([0.0])) - math.sqrt(3)) < 1e-13

    check("continued fraction of the golden mean", fib)
    check("free rotation number at E = 1", rho_free)
    check("rotation-valued input reduces at step 0", rotation_input)
    check("conjugacy defect of the free cocycle", free_defect)
    return 0 if all(checks) else EXIT_CODES[Outcome.NUMERICAL_FAILURE]


# ---------------------------------------------------------------------------


def _add_run_options(p, grid=False):
    p.add_argument("--config", help="JSON RunConfig file; flags override its values")
    p.add_argument("--alpha", help="'golden', 'liouville(k)', 'p/q' or a decimal literal")
    p.add_argument("--lam", type=float, help="almost Mathieu coupling: v = 2 lam cos(2 pi x)")
    p.add_argument("--potential", help="JSON list of Fourier coefficients c_0..c_N")
    p.add_argument("--out", help="output path")
    if grid:
        p.add_argument("--E-grid", dest="E_grid", nargs=3, type=float, metavar=("LO", "HI", "NUM"))
        p.add_argument("--width", type=int, help="worker processes (COCYCLE_REDUCE_THREADS overrides)")
    else:
        p.add_argument("--E", type=float, help="energy")
        p.add_argument("--cocycle", help="JSON cocycle file instead of a Schrodinger cocycle")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cocycle-reduce", description=__doc__.splitlines()[0])
    sp = ap.add_subparsers(dest="command", required=True)

    p = sp.add_parser("cf", help="continued fraction and convergent subsequence")
    p.add_argument("--alpha", required=True)
    p.add_argument("-n", type=int, default=12, help="number of partial quotients")
    p.add_argument("--out", help="write the table as JSON here")
    p.set_defaults(func=cmd_cf)

    p = sp.add_parser("rotnum", help="fibered rotation number")
    _add_run_options(p)
    p.set_defaults(func=cmd_rotnum)

    p = sp.add_parser("reduce", help="run the reduction; NDJSON trace on stdout")
    _add_run_options(p)
    p.add_argument("--trace", help="write the NDJSON trace here instead of stdout")
    p.set_defaults(func=cmd_reduce)

    p = sp.add_parser("sweep", help="energy sweep; CSV rows in energy order")
    _add_run_options(p, grid=True)
    p.set_defaults(func=cmd_sweep)

    p = sp.add_parser("selftest", help="quick sanity checks")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, RationalInput) as exc:
        print(exc if isinstance(exc, RationalInput) else f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

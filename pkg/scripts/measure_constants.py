"""Measure the regression constants pinned in the acceptance suite.

    python scripts/measure_constants.py

Prints the elliptic quadratic constant K, the cheap-trick per-pass factor
on a Liouville frequency and the Birkhoff closeness decay slope.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from cocycle_reduce.arithmetic import expand, golden_alpha, liouville_alpha
from cocycle_reduce.conjugation import CheapTrickOptions, cheap_trick, elliptic_reduce
from cocycle_reduce.scheme import birkhoff_closeness
from cocycle_reduce.torusfun import TorusFn

# the seeded instance generators live with the tests
sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from instances import random_defect, random_elliptic_phi  # noqa: E402


def elliptic_constant(seed, count, size):
    rng = np.random.default_rng(seed)
    K = 0.0
    for _ in range(count):
        phi = random_elliptic_phi(rng)
        g = elliptic_reduce(phi, random_defect(rng, phi, size)).g_norms
        K = max([K] + [b / (a * a) for a, b in zip(g, g[1:]) if b > 1e-13])
    return K


def cheap_trick_factor(seed, count, size):
    alpha = liouville_alpha(4)
    t = expand(alpha, max_terms=10)
    qn, qn1 = t.denominators[6], t.denominators[7]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        phi = random_elliptic_phi(rng)
        ct = cheap_trick(
            alpha, qn, phi, random_defect(rng, phi, size), r0=3, opts=CheapTrickOptions(floor_tol=0.0), n_label=6
        )
        norms = [led.values[0] for led in ct.per_pass_norms]
        worst = max(worst, max(b / a for a, b in zip(norms, norms[1:])))
    return worst, qn1


def closeness_slope():
    g = golden_alpha()
    t = expand(g, max_terms=40)
    phi = TorusFn([0.1, 0.3, 0.1j, 0.02])
    n = range(4, 17)
    vals = [birkhoff_closeness(phi, g, t, k)[0] for k in n]
    q = [float(t.denominators[k]) for k in n]
    return np.polyfit(np.log(q), np.log(vals), 1)[0]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=100)
    args = ap.parse_args(argv)

    print(f"elliptic K (seed 2024, {args.count} instances): {elliptic_constant(2024, args.count, 1e-5):.4f}")
    worst, qn1 = cheap_trick_factor(1, 10, 1e-7)
    print(f"cheap trick worst per-pass factor x q_n+1: {worst * qn1:.2f}")
    print(f"Birkhoff closeness log-log slope: {closeness_slope():.4f}")


if __name__ == "__main__":
    main()

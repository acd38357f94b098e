"""Small-coupling energy sweep: fraction of in-band energies that reduce.

python scripts/sweep_fraction.py --lam 1e-3 --num 101 --out sweep.csv
"""

import argparse
import os
import time

from cocycle_reduce.sweep import RunConfig, run_sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lam", type=float, default=1e-3)
    ap.add_argument("--alpha", default="golden")
    ap.add_argument("--lo", type=float, default=-2.1)
    ap.add_argument("--hi", type=float, default=2.1)
    ap.add_argument("--num", type=int, default=101)
    ap.add_argument("--width", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", help="write the CSV here")
    args = ap.parse_args(argv)

    cfg = RunConfig(alpha=args.alpha, potential=[0.0, args.lam], E_grid=[args.lo, args.hi, args.num])
    t0 = time.perf_counter()
    res = run_sweep(cfg, width=args.width)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(res.csv_text())
    band = [r for r in res.records if -2.0 < r.E < 2.0]
    counts = {}
    for r in band:
        counts[r.outcome] = counts.get(r.outcome, 0) + 1
    n_ac = sum(r.classification == "ac-candidate" for r in band)
    print(f"in-band rows {len(band)}, ac-candidate {n_ac} ({res.ac_fraction():.4f})")
    print(f"outcomes {dict(sorted(counts.items()))}")
    print(f"noise floor {res.noise:.3e}, {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
